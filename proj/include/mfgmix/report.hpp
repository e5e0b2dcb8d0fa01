#pragma once

// Clustering scores against known labels and figure data: the class-by-cluster
// matrix H, its best column permutation, parameter images and histogram CSVs.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mfgmix/core.hpp"
#include "mfgmix/mixture.hpp"

namespace mfgmix::report {

/// Dense row-major square table.
struct Table {
  std::size_t size = 0;
  std::vector<double> values;

  double operator()(std::size_t r, std::size_t c) const { return values[r * size + c]; }
  double& operator()(std::size_t r, std::size_t c) { return values[r * size + c]; }
  static Table from_rows(const std::vector<std::vector<double>>& rows);
};

/// H(k, j): mean responsibility of cluster j over the samples of class k.
/// Labels must lie in 0..K-1 with K = number of clusters.
Table confusion_matrix(const mixture::Responsibilities& resp, const Dataset& data);

/// perm[k] is the cluster (column) matched with class k; maximizes
/// sum_k H(k, perm[k]). Among optimal matchings the lexicographically
/// smallest perm wins.
std::vector<std::size_t> align_clusters(const Table& H);

struct ClusterReport {
  Table H;
  /// perm[class] = cluster
  std::vector<std::size_t> permutation;
  double diagonal_mean = 0.0;
  std::vector<std::size_t> class_sizes;

  /// H with columns reordered so that entry (k, k) is class k's matched cluster.
  Table aligned() const;
};

ClusterReport cluster_report(const mixture::Responsibilities& resp, const Dataset& data);

/// Grey level of one pixel: round(255 * sum_i i/(S-1) * p(i)).
std::uint8_t expected_grey(const SimplexVector& p);

struct GreyImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;
  bool operator==(const GreyImage&) const = default;
};

/// One image per component; throws NotSquare unless D = side * side.
std::vector<GreyImage> parameter_images(const MixtureModel& model, std::size_t side);

void write_pgm(const std::filesystem::path& path, const GreyImage& image);
GreyImage read_pgm(const std::filesystem::path& path);

/// Writes <dir>/<prefix>_<k>.pgm for every component; returns the paths.
std::vector<std::filesystem::path> export_parameter_images(const MixtureModel& model,
                                                           std::size_t side,
                                                           const std::filesystem::path& dir,
                                                           const std::string& prefix = "component");

/// Header `class,cluster_0,...`; one row per class with the aligned H entries.
std::string histogram_csv(const ClusterReport& report, const std::vector<std::string>& class_names);
void export_histogram_csv(const ClusterReport& report, const std::vector<std::string>& class_names,
                          const std::filesystem::path& path);

/// %.17g
std::string format_real(double v);

}  // namespace mfgmix::report
