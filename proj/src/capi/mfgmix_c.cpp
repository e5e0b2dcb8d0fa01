#include "mfgmix/mfgmix.h"

#include <exception>
#include <optional>
#include <string>
#include <vector>

#include "mfgmix/ingest.hpp"
#include "mfgmix/kernel.hpp"
#include "mfgmix/mixture.hpp"
#include "mfgmix/model_io.hpp"
#include "mfgmix/report.hpp"

struct mfgmix_dataset {
  mfgmix::Dataset data;
};

struct mfgmix_model {
  mfgmix::MixtureModel model;
};

struct mfgmix_fit_result {
  mfgmix::mixture::FitResult result;
};

struct mfgmix_report {
  mfgmix::report::ClusterReport report;
};

struct mfgmix_solution {
  mfgmix::MfgSolution solution;
};

namespace {

thread_local std::string last_error;

mfgmix_status fail(mfgmix_status status, const std::string& message) {
  last_error = message;
  return status;
}

template <class F>
mfgmix_status guard(F&& body) {
  try {
    body();
    return MFGMIX_OK;
  } catch (const mfgmix::Error& e) {
    return fail(static_cast<mfgmix_status>(e.code()), e.what());
  } catch (const std::exception& e) {
    return fail(MFGMIX_INTERNAL, e.what());
  } catch (...) {
    return fail(MFGMIX_INTERNAL, "unknown failure");
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw mfgmix::Error(mfgmix::ErrorCode::InvalidArgument, what);
}

}  // namespace

extern "C" {

const char* mfgmix_version(void) { return MFGMIX_VERSION; }

const char* mfgmix_last_error(void) { return last_error.c_str(); }

const char* mfgmix_status_name(mfgmix_status status) {
  if (status == MFGMIX_INTERNAL) return "Internal";
  return mfgmix::to_string(static_cast<mfgmix::ErrorCode>(status));
}

mfgmix_status mfgmix_dataset_load_idx(const char* images_path, const char* labels_path,
                                      size_t num_states, const int* classes, size_t num_classes,
                                      mfgmix_dataset** out, size_t* missing_classes) {
  return guard([&] {
    require(images_path && out, "images path and output handle are required");
    require(!classes || labels_path, "class selection needs a label file");
    using namespace mfgmix::ingest;
    const auto raw = load_idx_images(images_path);
    std::optional<std::vector<int>> labels;
    if (labels_path) {
      labels = load_idx_labels(labels_path);
      if (labels->size() != raw.count) {
        throw mfgmix::Error(mfgmix::ErrorCode::DimensionMismatch,
                            std::to_string(raw.count) + " images but " + std::to_string(labels->size()) +
                                " labels");
      }
    }
    auto data = quantize(raw, num_states, std::move(labels));
    if (missing_classes) *missing_classes = 0;
    if (classes) {
      auto filtered = filter_by_labels(data, std::span<const int>(classes, num_classes));
      if (missing_classes) *missing_classes = filtered.missing_labels.size();
      data = std::move(filtered.data);
    }
    *out = new mfgmix_dataset{std::move(data)};
  });
}

void mfgmix_dataset_free(mfgmix_dataset* data) { delete data; }
size_t mfgmix_dataset_num_samples(const mfgmix_dataset* data) { return data->data.num_samples(); }
size_t mfgmix_dataset_num_dims(const mfgmix_dataset* data) { return data->data.num_dims(); }
size_t mfgmix_dataset_num_states(const mfgmix_dataset* data) { return data->data.num_states(); }
int mfgmix_dataset_has_labels(const mfgmix_dataset* data) { return data->data.has_labels() ? 1 : 0; }

mfgmix_status mfgmix_dataset_write_idx(const mfgmix_dataset* data, size_t rows, size_t cols,
                                       const char* images_path, const char* labels_path) {
  return guard([&] {
    require(data && images_path, "dataset and images path are required");
    using namespace mfgmix::ingest;
    const auto raw = to_raw_images(data->data, rows, cols);
    write_bytes(images_path, encode_idx_images(raw));
    if (labels_path) {
      require(data->data.has_labels(), "dataset has no labels to write");
      write_bytes(labels_path, encode_idx_labels(*data->data.labels()));
    }
  });
}

mfgmix_status mfgmix_model_load(const char* path, mfgmix_model** out) {
  return guard([&] {
    require(path && out, "path and output handle are required");
    *out = new mfgmix_model{mfgmix::load_model(std::filesystem::path(path))};
  });
}

mfgmix_status mfgmix_model_save(const mfgmix_model* model, const char* path) {
  return guard([&] {
    require(model && path, "model and path are required");
    mfgmix::save_model(model->model, std::filesystem::path(path));
  });
}

void mfgmix_model_free(mfgmix_model* model) { delete model; }
size_t mfgmix_model_num_components(const mfgmix_model* m) { return m->model.num_components(); }
size_t mfgmix_model_num_dims(const mfgmix_model* m) { return m->model.num_dims(); }
size_t mfgmix_model_num_states(const mfgmix_model* m) { return m->model.num_states(); }
double mfgmix_model_weight(const mfgmix_model* m, size_t k) { return m->model.weights()[k]; }
double mfgmix_model_prob(const mfgmix_model* m, size_t k, size_t d, size_t i) {
  return m->model.component(k, d)[i];
}

mfgmix_status mfgmix_synth_generate(const mfgmix_model* model, size_t num_samples, uint64_t seed,
                                    mfgmix_dataset** out) {
  return guard([&] {
    require(model && out, "model and output handle are required");
    *out = new mfgmix_dataset{mfgmix::ingest::synth_generate(model->model, num_samples, seed)};
  });
}

mfgmix_status mfgmix_export_images(const mfgmix_model* model, size_t side, const char* dir,
                                   const char* prefix) {
  return guard([&] {
    require(model && dir, "model and directory are required");
    mfgmix::report::export_parameter_images(model->model, side, dir, prefix ? prefix : "component");
  });
}

void mfgmix_fit_config_default(mfgmix_fit_config* cfg) {
  const mfgmix::mixture::FitConfig d;
  cfg->num_components = d.num_components;
  cfg->epsilon = d.epsilon;
  cfg->tolerance = d.tolerance;
  cfg->max_iterations = d.max_iterations;
  cfg->seed = d.seed;
  cfg->empty_cluster_floor = d.empty_cluster_floor;
  cfg->subsystem_residual_limit = d.subsystem_residual_limit;
  cfg->coupling_scale = d.coupling_scale;
  cfg->policy_tolerance = d.solver.policy_tolerance;
  cfg->inner_root_tolerance = d.solver.inner_root_tolerance;
  cfg->max_policy_iterations = d.solver.max_policy_iterations;
  cfg->threads = d.threads;
  cfg->baseline = 0;
}

mfgmix_status mfgmix_fit(const mfgmix_dataset* data, const mfgmix_fit_config* cfg,
                         mfgmix_fit_result** out) {
  return guard([&] {
    require(data && cfg && out, "dataset, config and output handle are required");
    mfgmix::mixture::FitConfig c;
    c.num_components = cfg->num_components;
    c.epsilon = cfg->epsilon;
    c.tolerance = cfg->tolerance;
    c.max_iterations = cfg->max_iterations;
    c.seed = cfg->seed;
    c.empty_cluster_floor = cfg->empty_cluster_floor;
    c.subsystem_residual_limit = cfg->subsystem_residual_limit;
    c.coupling_scale = cfg->coupling_scale;
    c.solver.policy_tolerance = cfg->policy_tolerance;
    c.solver.inner_root_tolerance = cfg->inner_root_tolerance;
    c.solver.max_policy_iterations = cfg->max_policy_iterations;
    c.threads = cfg->threads;
    auto r = cfg->baseline ? mfgmix::mixture::em_baseline_fit(data->data, c)
                           : mfgmix::mixture::fit(data->data, c);
    *out = new mfgmix_fit_result{std::move(r)};
  });
}

void mfgmix_fit_result_free(mfgmix_fit_result* result) { delete result; }

mfgmix_status mfgmix_fit_result_model(const mfgmix_fit_result* result, mfgmix_model** out) {
  return guard([&] {
    require(result && out, "result and output handle are required");
    *out = new mfgmix_model{result->result.model};
  });
}

size_t mfgmix_fit_result_iterations(const mfgmix_fit_result* r) { return r->result.iterations; }
int mfgmix_fit_result_converged(const mfgmix_fit_result* r) { return r->result.converged ? 1 : 0; }
size_t mfgmix_fit_result_trace_length(const mfgmix_fit_result* r) {
  return r->result.theta_residual_trace.size();
}
double mfgmix_fit_result_theta_residual(const mfgmix_fit_result* r, size_t h) {
  return r->result.theta_residual_trace.at(h);
}
double mfgmix_fit_result_loglik(const mfgmix_fit_result* r, size_t h) { return r->result.loglik_trace.at(h); }
double mfgmix_fit_result_subsystem_residual(const mfgmix_fit_result* r, size_t h) {
  return r->result.subsystem_residual_trace.at(h);
}
size_t mfgmix_fit_result_num_warnings(const mfgmix_fit_result* r) { return r->result.warnings.size(); }
const char* mfgmix_fit_result_warning(const mfgmix_fit_result* r, size_t i) {
  return r->result.warnings.at(i).c_str();
}

mfgmix_status mfgmix_log_likelihood(const mfgmix_model* model, const mfgmix_dataset* data, size_t threads,
                                    double* out) {
  return guard([&] {
    require(model && data && out, "model, dataset and output are required");
    *out = mfgmix::mixture::log_likelihood(model->model, data->data, threads);
  });
}

mfgmix_status mfgmix_evaluate(const mfgmix_model* model, const mfgmix_dataset* data, size_t threads,
                              mfgmix_report** out) {
  return guard([&] {
    require(model && data && out, "model, dataset and output handle are required");
    require(data->data.has_labels(), "evaluation needs labels");
    const auto resp = mfgmix::mixture::responsibilities(model->model, data->data, threads);
    *out = new mfgmix_report{mfgmix::report::cluster_report(resp, data->data)};
  });
}

void mfgmix_report_free(mfgmix_report* report) { delete report; }
size_t mfgmix_report_size(const mfgmix_report* r) { return r->report.H.size; }
double mfgmix_report_h(const mfgmix_report* r, size_t cls, size_t cluster) { return r->report.H(cls, cluster); }
size_t mfgmix_report_cluster_of(const mfgmix_report* r, size_t cls) { return r->report.permutation.at(cls); }
double mfgmix_report_diagonal_mean(const mfgmix_report* r) { return r->report.diagonal_mean; }
size_t mfgmix_report_class_size(const mfgmix_report* r, size_t cls) { return r->report.class_sizes.at(cls); }

mfgmix_status mfgmix_report_write_csv(const mfgmix_report* report, const char* const* class_names,
                                      const char* path) {
  return guard([&] {
    require(report && path, "report and path are required");
    std::vector<std::string> names;
    for (std::size_t k = 0; k < report->report.H.size; ++k) {
      names.emplace_back(class_names ? class_names[k] : std::to_string(k));
    }
    mfgmix::report::export_histogram_csv(report->report, names, path);
  });
}

mfgmix_status mfgmix_solve(const double* theta, size_t num_states, double epsilon, mfgmix_solution** out) {
  return guard([&] {
    require(theta && out, "theta and output handle are required");
    require(num_states >= 2, "theta needs at least two states");
    const auto t = mfgmix::SimplexVector::validate(std::span<const double>(theta, num_states));
    const auto spec = mfgmix::kernel::CostSpec::default_linear(epsilon);
    *out = new mfgmix_solution{mfgmix::kernel::solve_subsystem(t, spec, {})};
  });
}

void mfgmix_solution_free(mfgmix_solution* s) { delete s; }
size_t mfgmix_solution_num_states(const mfgmix_solution* s) { return s->solution.distribution.size(); }
double mfgmix_solution_value(const mfgmix_solution* s, size_t i) { return s->solution.value[i]; }
double mfgmix_solution_ergodic_cost(const mfgmix_solution* s) { return s->solution.ergodic_cost; }
double mfgmix_solution_distribution(const mfgmix_solution* s, size_t i) { return s->solution.distribution[i]; }
double mfgmix_solution_transition(const mfgmix_solution* s, size_t i, size_t j) {
  return s->solution.transition(i, j);
}
double mfgmix_solution_hjb_residual(const mfgmix_solution* s) { return s->solution.hjb_residual; }
double mfgmix_solution_fp_residual(const mfgmix_solution* s) { return s->solution.fp_residual; }
size_t mfgmix_solution_iterations(const mfgmix_solution* s) { return s->solution.policy_iterations; }

}  // extern "C"
