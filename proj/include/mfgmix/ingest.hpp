#pragma once

// IDX containers (MNIST layout), grey-level quantization, label filtering and
// synthetic sampling from a known mixture.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "mfgmix/core.hpp"

namespace mfgmix::ingest {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

struct RawImageSet {
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  /// count x (rows * cols), row-major per image
  std::vector<std::uint8_t> pixels;
  std::uint32_t magic = kIdxImageMagic;

  std::size_t pixels_per_image() const noexcept { return rows * cols; }
  bool operator==(const RawImageSet&) const = default;
};

/// Parses an IDX image file held in memory. Gzip input (1f 8b) is inflated
/// first.
RawImageSet parse_idx_images(std::span<const std::uint8_t> bytes);
std::vector<int> parse_idx_labels(std::span<const std::uint8_t> bytes);

RawImageSet load_idx_images(const std::filesystem::path& path);
std::vector<int> load_idx_labels(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_idx_images(const RawImageSet& images);
std::vector<std::uint8_t> encode_idx_labels(std::span<const int> labels);

/// Writes raw IDX bytes, gzip-compressed when `gzip` is set.
void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes,
                 bool gzip = false);
std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);

/// state = floor(pixel * S / 256); for S = 2 that is pixel >= 128.
State quantize_pixel(std::uint8_t pixel, std::size_t num_states);

/// Smallest pixel value that quantizes to `state`: ceil(256 * state / S).
std::uint8_t state_to_pixel(State state, std::size_t num_states);

Dataset quantize(const RawImageSet& raw, std::size_t num_states,
                 std::optional<std::vector<int>> labels = std::nullopt);

/// Inverse of quantize up to binning; needs D = rows * cols.
RawImageSet to_raw_images(const Dataset& data, std::size_t rows, std::size_t cols);

struct FilterResult {
  Dataset data;
  /// Requested labels that never occur in the input.
  std::vector<int> missing_labels;
  /// Set when nothing survived the filter.
  bool empty = false;
};

/// Keeps samples whose label is in `keep`, preserving order, and relabels
/// keep[j] as j.
FilterResult filter_by_labels(const Dataset& data, std::span<const int> keep);

/// Draws k ~ alpha, then every coordinate independently from pi_k^d, by
/// inverse CDF on mt19937_64 words mapped to (0, 1). Labels hold k.
Dataset synth_generate(const MixtureModel& model, std::size_t num_samples, std::uint64_t seed);

}  // namespace mfgmix::ingest
