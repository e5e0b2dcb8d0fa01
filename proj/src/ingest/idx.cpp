#include <zlib.h>

#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "mfgmix/ingest.hpp"

namespace mfgmix::ingest {
namespace {

bool is_gzip(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b;
}

std::vector<std::uint8_t> inflate_gzip(std::span<const std::uint8_t> in) {
  z_stream zs{};
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) {
    throw Error(ErrorCode::CorruptFile, "cannot initialize gzip decoder");
  }
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  std::vector<std::uint8_t> out;
  std::uint8_t buffer[1 << 16];
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = buffer;
    zs.avail_out = sizeof(buffer);
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      if (rc == Z_BUF_ERROR) throw Error(ErrorCode::TruncatedFile, "gzip stream ends early");
      throw Error(ErrorCode::CorruptFile, std::string("gzip: ") + (zs.msg ? zs.msg : "bad data"));
    }
    out.insert(out.end(), buffer, buffer + (sizeof(buffer) - zs.avail_out));
  }
  inflateEnd(&zs);
  return out;
}

std::vector<std::uint8_t> deflate_gzip(std::span<const std::uint8_t> in) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_BEST_COMPRESSION, Z_DEFLATED, 16 + MAX_WBITS, 8,
                   Z_DEFAULT_STRATEGY) != Z_OK) {
    throw Error(ErrorCode::IoFailure, "cannot initialize gzip encoder");
  }
  std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(in.size())));
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw Error(ErrorCode::IoFailure, "gzip compression failed");
  out.resize(zs.total_out);
  return out;
}

std::uint32_t read_be32(std::span<const std::uint8_t> b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) |
         (std::uint32_t{b[at + 2]} << 8) | std::uint32_t{b[at + 3]};
}

void put_be32(std::vector<std::uint8_t>& out, std::uint64_t v) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::DimensionOverflow, "dimension does not fit in 32 bits");
  }
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

struct Parsed {
  std::vector<std::size_t> dims;
  std::span<const std::uint8_t> payload;
};

Parsed parse_header(std::span<const std::uint8_t> bytes, std::uint32_t magic, std::size_t rank) {
  if (bytes.size() < 4) throw Error(ErrorCode::TruncatedFile, "IDX header is incomplete");
  const std::uint32_t found = read_be32(bytes, 0);
  if (found != magic) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "magic 0x%08x, expected 0x%08x", found, magic);
    throw Error(ErrorCode::BadMagic, buf);
  }
  const std::size_t header = 4 + 4 * rank;
  if (bytes.size() < header) throw Error(ErrorCode::TruncatedFile, "IDX header is incomplete");
  Parsed p;
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < rank; ++i) {
    const std::uint64_t d = read_be32(bytes, 4 + 4 * i);
    if (d != 0 && total > std::numeric_limits<std::uint64_t>::max() / d) {
      throw Error(ErrorCode::DimensionOverflow, "IDX dimensions overflow 64 bits");
    }
    total *= d;
    p.dims.push_back(static_cast<std::size_t>(d));
  }
  if (total > std::numeric_limits<std::size_t>::max() - header) {
    throw Error(ErrorCode::DimensionOverflow, "IDX payload too large");
  }
  const std::size_t have = bytes.size() - header;
  if (have < total) {
    throw Error(ErrorCode::TruncatedFile, "IDX payload has " + std::to_string(have) +
                                              " bytes, header declares " + std::to_string(total));
  }
  p.payload = bytes.subspan(header, static_cast<std::size_t>(total));
  return p;
}

}  // namespace

RawImageSet parse_idx_images(std::span<const std::uint8_t> bytes) {
  if (is_gzip(bytes)) {
    const auto inflated = inflate_gzip(bytes);
    return parse_idx_images(inflated);
  }
  const Parsed p = parse_header(bytes, kIdxImageMagic, 3);
  RawImageSet out;
  out.count = p.dims[0];
  out.rows = p.dims[1];
  out.cols = p.dims[2];
  out.pixels.assign(p.payload.begin(), p.payload.end());
  out.magic = kIdxImageMagic;
  return out;
}

std::vector<int> parse_idx_labels(std::span<const std::uint8_t> bytes) {
  if (is_gzip(bytes)) {
    const auto inflated = inflate_gzip(bytes);
    return parse_idx_labels(inflated);
  }
  const Parsed p = parse_header(bytes, kIdxLabelMagic, 1);
  return std::vector<int>(p.payload.begin(), p.payload.end());
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::IoFailure, "read error on " + path.string());
  return bytes;
}

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes,
                 bool gzip) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  if (gzip) {
    const auto packed = deflate_gzip(bytes);
    out.write(reinterpret_cast<const char*>(packed.data()),
              static_cast<std::streamsize>(packed.size()));
  } else {
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write error on " + path.string());
}

RawImageSet load_idx_images(const std::filesystem::path& path) {
  return parse_idx_images(read_bytes(path));
}

std::vector<int> load_idx_labels(const std::filesystem::path& path) {
  return parse_idx_labels(read_bytes(path));
}

std::vector<std::uint8_t> encode_idx_images(const RawImageSet& images) {
  if (images.pixels.size() != images.count * images.pixels_per_image()) {
    throw Error(ErrorCode::DimensionMismatch, "pixel count differs from N*rows*cols");
  }
  std::vector<std::uint8_t> out;
  out.reserve(16 + images.pixels.size());
  put_be32(out, kIdxImageMagic);
  put_be32(out, images.count);
  put_be32(out, images.rows);
  put_be32(out, images.cols);
  out.insert(out.end(), images.pixels.begin(), images.pixels.end());
  return out;
}

std::vector<std::uint8_t> encode_idx_labels(std::span<const int> labels) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + labels.size());
  put_be32(out, kIdxLabelMagic);
  put_be32(out, labels.size());
  for (int l : labels) {
    if (l < 0 || l > 255) throw Error(ErrorCode::InvalidArgument, "IDX labels must fit in a byte");
    out.push_back(static_cast<std::uint8_t>(l));
  }
  return out;
}

}  // namespace mfgmix::ingest
