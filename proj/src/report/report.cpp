#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "mfgmix/report.hpp"

namespace mfgmix::report {
namespace {

// Hungarian method (shortest augmenting paths with potentials) minimizing
// sum cost[r][assign[r]] over the rows/cols listed. Returns the optimal value.
double min_assignment(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  if (n == 0) return 0.0;
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  std::vector<bool> used(n + 1);
  for (std::size_t r = 1; r <= n; ++r) {
    match[0] = r;
    std::size_t col = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), false);
    do {
      used[col] = true;
      const std::size_t row = match[col];
      double delta = inf;
      std::size_t next = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double reduced = cost[row - 1][j - 1] - u[row] - v[j];
        if (reduced < minv[j]) {
          minv[j] = reduced;
          way[j] = col;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          next = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      col = next;
    } while (match[col] != 0);
    do {
      const std::size_t prev = way[col];
      match[col] = match[prev];
      col = prev;
    } while (col != 0);
  }
  double total = 0.0;
  for (std::size_t j = 1; j <= n; ++j) total += cost[match[j] - 1][j - 1];
  return total;
}

double best_completion(const Table& H, const std::vector<std::size_t>& rows,
                       const std::vector<std::size_t>& cols) {
  std::vector<std::vector<double>> cost(rows.size(), std::vector<double>(cols.size()));
  for (std::size_t a = 0; a < rows.size(); ++a) {
    for (std::size_t b = 0; b < cols.size(); ++b) cost[a][b] = -H(rows[a], cols[b]);
  }
  return -min_assignment(cost);
}

}  // namespace

Table Table::from_rows(const std::vector<std::vector<double>>& rows) {
  Table t;
  t.size = rows.size();
  for (const auto& r : rows) {
    if (r.size() != t.size) throw Error(ErrorCode::DimensionMismatch, "table must be square");
    t.values.insert(t.values.end(), r.begin(), r.end());
  }
  return t;
}

Table confusion_matrix(const mixture::Responsibilities& resp, const Dataset& data) {
  if (!data.has_labels()) throw Error(ErrorCode::InvalidArgument, "dataset has no labels");
  if (resp.num_samples != data.num_samples()) {
    throw Error(ErrorCode::DimensionMismatch, "responsibilities and data differ in N");
  }
  const std::size_t K = resp.num_components;
  const auto& labels = *data.labels();
  Table H{K, std::vector<double>(K * K, 0.0)};
  std::vector<std::size_t> counts(K, 0);
  for (std::size_t n = 0; n < resp.num_samples; ++n) {
    const int label = labels[n];
    if (label < 0 || static_cast<std::size_t>(label) >= K) {
      throw Error(ErrorCode::InvalidArgument,
                  "label " + std::to_string(label) + " outside 0.." + std::to_string(K - 1));
    }
    const auto k = static_cast<std::size_t>(label);
    ++counts[k];
    for (std::size_t j = 0; j < K; ++j) H(k, j) += resp(n, j);
  }
  for (std::size_t k = 0; k < K; ++k) {
    if (counts[k] == 0) throw Error(ErrorCode::EmptyClass, "class " + std::to_string(k) + " has no samples");
    for (std::size_t j = 0; j < K; ++j) H(k, j) /= static_cast<double>(counts[k]);
  }
  return H;
}

std::vector<std::size_t> align_clusters(const Table& H) {
  const std::size_t K = H.size;
  std::vector<std::size_t> all(K);
  for (std::size_t i = 0; i < K; ++i) all[i] = i;
  const double optimum = best_completion(H, all, all);
  const double slack = 1e-12 * std::max(1.0, std::abs(optimum));

  // Fix rows in order, each to the smallest column that still admits an
  // optimal completion.
  std::vector<std::size_t> perm;
  std::vector<std::size_t> free_cols = all;
  double fixed = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<std::size_t> rest_rows(all.begin() + static_cast<std::ptrdiff_t>(k) + 1, all.end());
    for (std::size_t idx = 0; idx < free_cols.size(); ++idx) {
      const std::size_t c = free_cols[idx];
      std::vector<std::size_t> rest_cols = free_cols;
      rest_cols.erase(rest_cols.begin() + static_cast<std::ptrdiff_t>(idx));
      const double total = fixed + H(k, c) + best_completion(H, rest_rows, rest_cols);
      if (total >= optimum - slack || idx + 1 == free_cols.size()) {
        perm.push_back(c);
        fixed += H(k, c);
        free_cols = std::move(rest_cols);
        break;
      }
    }
  }
  return perm;
}

Table ClusterReport::aligned() const {
  Table out{H.size, std::vector<double>(H.values.size())};
  for (std::size_t k = 0; k < H.size; ++k) {
    for (std::size_t j = 0; j < H.size; ++j) out(k, j) = H(k, permutation[j]);
  }
  return out;
}

ClusterReport cluster_report(const mixture::Responsibilities& resp, const Dataset& data) {
  ClusterReport r;
  r.H = confusion_matrix(resp, data);
  r.permutation = align_clusters(r.H);
  r.class_sizes.assign(r.H.size, 0);
  for (int l : *data.labels()) ++r.class_sizes[static_cast<std::size_t>(l)];
  double diag = 0.0;
  for (std::size_t k = 0; k < r.H.size; ++k) diag += r.H(k, r.permutation[k]);
  r.diagonal_mean = diag / static_cast<double>(r.H.size);
  return r;
}

std::uint8_t expected_grey(const SimplexVector& p) {
  const std::size_t S = p.size();
  double level = 0.0;
  for (std::size_t i = 0; i < S; ++i) {
    level += static_cast<double>(i) / static_cast<double>(S - 1) * p[i];
  }
  return static_cast<std::uint8_t>(std::clamp(std::lround(255.0 * level), 0L, 255L));
}

std::vector<GreyImage> parameter_images(const MixtureModel& model, std::size_t side) {
  if (side * side != model.num_dims()) {
    throw Error(ErrorCode::NotSquare, "D = " + std::to_string(model.num_dims()) +
                                          " is not the square of " + std::to_string(side));
  }
  std::vector<GreyImage> images;
  for (std::size_t k = 0; k < model.num_components(); ++k) {
    GreyImage img{side, side, {}};
    img.pixels.reserve(side * side);
    for (std::size_t d = 0; d < model.num_dims(); ++d) img.pixels.push_back(expected_grey(model.component(k, d)));
    images.push_back(std::move(img));
  }
  return images;
}

void write_pgm(const std::filesystem::path& path, const GreyImage& image) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "write error on " + path.string());
}

GreyImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::string magic;
  GreyImage img;
  int maxval = 0;
  in >> magic >> img.width >> img.height >> maxval;
  if (magic != "P5" || maxval != 255 || !in) {
    throw Error(ErrorCode::CorruptFile, path.string() + " is not an 8-bit binary PGM");
  }
  in.get();
  img.pixels.resize(img.width * img.height);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!in) throw Error(ErrorCode::TruncatedFile, path.string() + " ends early");
  return img;
}

std::vector<std::filesystem::path> export_parameter_images(const MixtureModel& model,
                                                           std::size_t side,
                                                           const std::filesystem::path& dir,
                                                           const std::string& prefix) {
  const auto images = parameter_images(model, side);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> paths;
  for (std::size_t k = 0; k < images.size(); ++k) {
    paths.push_back(dir / (prefix + "_" + std::to_string(k) + ".pgm"));
    write_pgm(paths.back(), images[k]);
  }
  return paths;
}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string histogram_csv(const ClusterReport& report, const std::vector<std::string>& class_names) {
  const std::size_t K = report.H.size;
  if (class_names.size() != K) {
    throw Error(ErrorCode::DimensionMismatch, "need one class name per row of H");
  }
  const Table A = report.aligned();
  std::ostringstream out;
  out << "class";
  for (std::size_t j = 0; j < K; ++j) out << ",cluster_" << j;
  out << '\n';
  for (std::size_t k = 0; k < K; ++k) {
    out << class_names[k];
    for (std::size_t j = 0; j < K; ++j) out << ',' << format_real(A(k, j));
    out << '\n';
  }
  return out.str();
}

void export_histogram_csv(const ClusterReport& report, const std::vector<std::string>& class_names,
                          const std::filesystem::path& path) {
  const std::string text = histogram_csv(report, class_names);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error(ErrorCode::IoFailure, "write error on " + path.string());
}

}  // namespace mfgmix::report
