#include "mfgmix/model_io.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace mfgmix {
namespace {

void write_real(std::ostream& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}

void write_row(std::ostream& out, std::span<const double> row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out << ' ';
    write_real(out, row[i]);
  }
  out << '\n';
}

std::string next_line(std::istream& in, const char* what) {
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::DimensionMismatch, std::string("file ends before ") + what);
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::vector<double> parse_reals(const std::string& line, const char* what) {
  std::istringstream ss(line);
  std::vector<double> out;
  std::string tok;
  while (ss >> tok) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size()) {
      throw Error(ErrorCode::CorruptFile, std::string("bad real '") + tok + "' in " + what);
    }
    out.push_back(v);
  }
  return out;
}

std::size_t parse_count(const std::string& tok) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw Error(ErrorCode::CorruptFile, "bad dimension '" + tok + "'");
  }
  return v;
}

}  // namespace

void save_model(const MixtureModel& model, std::ostream& out) {
  out << kModelFormatTag << '\n';
  out << model.num_components() << ' ' << model.num_dims() << ' ' << model.num_states() << '\n';
  write_row(out, model.weights().entries());
  for (const auto& c : model.components()) write_row(out, c.entries());
  if (!out) throw Error(ErrorCode::IoFailure, "write failed");
}

void save_model(const MixtureModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  save_model(model, out);
}

MixtureModel load_model(std::istream& in) {
  std::string tag;
  if (!std::getline(in, tag)) throw Error(ErrorCode::CorruptFile, "empty model file");
  if (!tag.empty() && tag.back() == '\r') tag.pop_back();
  if (tag.rfind("MFGMIX ", 0) != 0) throw Error(ErrorCode::CorruptFile, "missing MFGMIX tag");
  if (tag != kModelFormatTag) {
    throw Error(ErrorCode::FormatVersionMismatch, "unsupported version '" + tag.substr(7) + "'");
  }

  std::istringstream dims(next_line(in, "dimensions"));
  std::string tk, td, ts, extra;
  if (!(dims >> tk >> td >> ts) || (dims >> extra)) {
    throw Error(ErrorCode::CorruptFile, "dimension line must hold exactly K D S");
  }
  const std::size_t K = parse_count(tk), D = parse_count(td), S = parse_count(ts);
  if (K == 0 || D == 0 || S == 0) throw Error(ErrorCode::CorruptFile, "zero dimension");

  const auto w = parse_reals(next_line(in, "weights"), "weights");
  if (w.size() != K) {
    throw Error(ErrorCode::DimensionMismatch, "K = " + std::to_string(K) + " but " +
                                                  std::to_string(w.size()) + " weights");
  }
  auto weights = [&] {
    try {
      return SimplexVector::validate(w);
    } catch (const Error& e) {
      throw Error(ErrorCode::CorruptFile, std::string("weights: ") + e.what());
    }
  }();

  std::vector<SimplexVector> comps;
  comps.reserve(K * D);
  for (std::size_t r = 0; r < K * D; ++r) {
    const auto row = parse_reals(next_line(in, "component rows"), "component row");
    if (row.size() != S) {
      throw Error(ErrorCode::DimensionMismatch, "component row " + std::to_string(r) + " has " +
                                                    std::to_string(row.size()) + " entries, S = " +
                                                    std::to_string(S));
    }
    try {
      comps.push_back(SimplexVector::validate(row));
    } catch (const Error& e) {
      throw Error(ErrorCode::CorruptFile,
                  "component row " + std::to_string(r) + ": " + e.what());
    }
  }
  std::string trailing;
  while (std::getline(in, trailing)) {
    if (trailing.find_first_not_of(" \t\r") != std::string::npos) {
      throw Error(ErrorCode::DimensionMismatch, "extra data after K*D component rows");
    }
  }
  return MixtureModel(std::move(weights), D, std::move(comps));
}

MixtureModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  return load_model(in);
}

}  // namespace mfgmix
