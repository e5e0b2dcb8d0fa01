#include <algorithm>
#include <random>
#include <string>

#include "mfgmix/ingest.hpp"
#include "mfgmix/mixture.hpp"

namespace mfgmix::ingest {
namespace {

void check_states(std::size_t num_states) {
  if (num_states < 2 || num_states > 256) {
    throw Error(ErrorCode::InvalidArgument,
                "grey-level quantization needs 2 <= S <= 256, got " + std::to_string(num_states));
  }
}

std::size_t inverse_cdf(std::span<const double> p, double u) {
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return i;
  }
  // u landed past a cumulative sum that rounded below 1: take the last
  // state with positive mass.
  std::size_t last = p.size() - 1;
  while (last > 0 && p[last] == 0.0) --last;
  return last;
}

}  // namespace

State quantize_pixel(std::uint8_t pixel, std::size_t num_states) {
  return static_cast<State>(std::size_t{pixel} * num_states / 256);
}

std::uint8_t state_to_pixel(State state, std::size_t num_states) {
  return static_cast<std::uint8_t>((256 * std::size_t{state} + num_states - 1) / num_states);
}

Dataset quantize(const RawImageSet& raw, std::size_t num_states,
                 std::optional<std::vector<int>> labels) {
  check_states(num_states);
  const std::size_t D = raw.pixels_per_image();
  if (raw.pixels.size() != raw.count * D) {
    throw Error(ErrorCode::DimensionMismatch, "pixel count differs from N*rows*cols");
  }
  std::vector<State> states(raw.pixels.size());
  std::transform(raw.pixels.begin(), raw.pixels.end(), states.begin(),
                 [&](std::uint8_t p) { return quantize_pixel(p, num_states); });
  return Dataset(raw.count, D, num_states, std::move(states), std::move(labels));
}

RawImageSet to_raw_images(const Dataset& data, std::size_t rows, std::size_t cols) {
  check_states(data.num_states());
  if (rows * cols != data.num_dims()) {
    throw Error(ErrorCode::NotSquare, "D = " + std::to_string(data.num_dims()) + " is not " +
                                          std::to_string(rows) + "x" + std::to_string(cols));
  }
  RawImageSet out;
  out.count = data.num_samples();
  out.rows = rows;
  out.cols = cols;
  out.pixels.reserve(data.samples().size());
  for (State s : data.samples()) out.pixels.push_back(state_to_pixel(s, data.num_states()));
  return out;
}

FilterResult filter_by_labels(const Dataset& data, std::span<const int> keep) {
  if (!data.has_labels()) throw Error(ErrorCode::InvalidArgument, "dataset has no labels");
  const auto& labels = *data.labels();
  for (std::size_t j = 0; j < keep.size(); ++j) {
    if (std::find(keep.begin(), keep.begin() + j, keep[j]) != keep.begin() + j) {
      throw Error(ErrorCode::InvalidArgument, "label " + std::to_string(keep[j]) + " requested twice");
    }
  }

  const std::size_t D = data.num_dims();
  std::vector<State> samples;
  std::vector<int> remapped;
  std::vector<bool> seen(keep.size(), false);
  for (std::size_t n = 0; n < data.num_samples(); ++n) {
    const auto it = std::find(keep.begin(), keep.end(), labels[n]);
    if (it == keep.end()) continue;
    const auto j = static_cast<std::size_t>(it - keep.begin());
    seen[j] = true;
    remapped.push_back(static_cast<int>(j));
    const auto x = data.sample(n);
    samples.insert(samples.end(), x.begin(), x.end());
  }
  FilterResult out{Dataset(remapped.size(), D, data.num_states(), std::move(samples), remapped),
                   {}, remapped.empty()};
  for (std::size_t j = 0; j < keep.size(); ++j) {
    if (!seen[j]) out.missing_labels.push_back(keep[j]);
  }
  return out;
}

Dataset synth_generate(const MixtureModel& model, std::size_t num_samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t D = model.num_dims();
  std::vector<State> samples;
  samples.reserve(num_samples * D);
  std::vector<int> labels;
  labels.reserve(num_samples);
  for (std::size_t n = 0; n < num_samples; ++n) {
    const std::size_t k = inverse_cdf(model.weights().entries(), mixture::random_unit_interval(rng()));
    labels.push_back(static_cast<int>(k));
    for (std::size_t d = 0; d < D; ++d) {
      const auto s = inverse_cdf(model.component(k, d).entries(), mixture::random_unit_interval(rng()));
      samples.push_back(static_cast<State>(s));
    }
  }
  return Dataset(num_samples, D, model.num_states(), std::move(samples), std::move(labels));
}

}  // namespace mfgmix::ingest
