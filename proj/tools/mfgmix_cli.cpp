// Command-line front end. Talks to the library only through the C API.

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "mfgmix/mfgmix.h"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitSolver = 4;

struct Failure {
  int exit_code;
  std::string message;
};

int exit_code_for(mfgmix_status s) {
  switch (s) {
    case MFGMIX_INVALID_ARGUMENT:
    case MFGMIX_NEGATIVE_ENTRY:
    case MFGMIX_MASS_MISMATCH:
    case MFGMIX_UNSUPPORTED_COST:
    case MFGMIX_OUT_OF_DOMAIN:
      return kExitUsage;
    case MFGMIX_ZERO_PROBABILITY_WITH_ENTROPY:
    case MFGMIX_NONCONVERGENT_ROOT_FIND:
    case MFGMIX_SINGULAR_SYSTEM:
    case MFGMIX_MAX_ITERATIONS_EXCEEDED:
    case MFGMIX_NON_UNIQUE_STATIONARY:
    case MFGMIX_POSITIVITY_VIOLATION:
    case MFGMIX_ALL_COMPONENTS_VANISH:
      return kExitSolver;
    default:
      return kExitData;
  }
}

void check(mfgmix_status s) {
  if (s != MFGMIX_OK) throw Failure{exit_code_for(s), mfgmix_last_error()};
}

void usage_error(const std::string& message) { throw Failure{kExitUsage, message}; }

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Dataset = std::unique_ptr<mfgmix_dataset, Deleter<mfgmix_dataset, mfgmix_dataset_free>>;
using Model = std::unique_ptr<mfgmix_model, Deleter<mfgmix_model, mfgmix_model_free>>;
using FitResult = std::unique_ptr<mfgmix_fit_result, Deleter<mfgmix_fit_result, mfgmix_fit_result_free>>;
using Report = std::unique_ptr<mfgmix_report, Deleter<mfgmix_report, mfgmix_report_free>>;
using Solution = std::unique_ptr<mfgmix_solution, Deleter<mfgmix_solution, mfgmix_solution_free>>;

std::string real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kExitData, "cannot read " + path};
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof byte, "%02x", md[i]);
    hex += byte;
  }
  return hex;
}

std::vector<int> parse_int_list(const std::string& text, const char* flag) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      usage_error(std::string(flag) + ": '" + item + "' is not an integer");
    }
  }
  return out;
}

std::vector<double> parse_real_list(const std::string& text, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      usage_error(std::string(flag) + ": '" + item + "' is not a number");
    }
  }
  return out;
}

// key=value lines; '#' starts a comment. Keys under these prefixes are
// recorded outputs of an earlier run and are skipped when the file is reused
// as configuration.
const char* const kRecordPrefixes[] = {"digest.", "timing.", "result.", "version.", "command"};

std::map<std::string, std::string> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) usage_error("cannot read config file " + path);
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) usage_error(path + ":" + std::to_string(lineno) + ": expected key=value");
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r"), b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

// Fills options the user did not pass explicitly from the config file.
void apply_config(const std::string& path, CLI::App& global, CLI::App& sub) {
  for (const auto& [key, value] : read_config(path)) {
    bool record = false;
    for (const char* p : kRecordPrefixes) record = record || key.rfind(p, 0) == 0;
    if (record || key == "config") continue;
    CLI::Option* opt = nullptr;
    try {
      opt = sub.get_option("--" + key);
    } catch (const CLI::OptionNotFound&) {
      try {
        opt = global.get_option("--" + key);
      } catch (const CLI::OptionNotFound&) {
        usage_error("config key '" + key + "' is not an option of '" + sub.get_name() + "'");
      }
    }
    if (opt->count() > 0) continue;
    if (opt->get_type_size() == 0) {
      if (value == "1" || value == "true") opt->add_result("true");
      else if (value != "0" && value != "false") usage_error("config key '" + key + "' expects 0 or 1");
      else continue;
    } else {
      opt->add_result(value);
    }
    opt->run_callback();
  }
}

void require_set(const std::string& value, const char* flag) {
  if (value.empty()) usage_error(std::string(flag) + " is required");
}

class Timer {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

std::size_t square_side(std::size_t D) {
  auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(D))));
  while (side * side > D) --side;
  return side;
}

struct Options {
  std::size_t threads = 0;
  std::string config;

  // fit / eval inputs
  std::string images, labels, classes, model;
  std::size_t K = 2, S = 2;
  double eps = 0.05, tol = 1e-6;
  std::size_t max_iter = 200;
  std::uint64_t seed = 0;
  bool baseline = false;
  std::string out, trace, manifest, out_h;
  double empty_cluster_floor = 0.0, subsystem_residual_limit = 0.0, coupling_scale = 0.0;
  double policy_tol = 0.0, inner_tol = 0.0;
  std::size_t max_policy_iter = 0;

  std::string theta;
  std::size_t N = 0;
  std::string out_images, out_labels;
  std::size_t side = 0;
  std::string out_dir, prefix = "component";
};

Dataset load_data(const Options& o, std::size_t S, std::vector<int>* classes) {
  require_set(o.images, "--images");
  std::vector<int> keep;
  if (!o.classes.empty()) {
    if (o.labels.empty()) usage_error("--classes needs --labels");
    keep = parse_int_list(o.classes, "--classes");
  }
  mfgmix_dataset* raw = nullptr;
  std::size_t missing = 0;
  check(mfgmix_dataset_load_idx(o.images.c_str(), o.labels.empty() ? nullptr : o.labels.c_str(), S,
                                keep.empty() ? nullptr : keep.data(), keep.size(), &raw, &missing));
  Dataset data(raw);
  if (missing > 0) std::fprintf(stderr, "warning: %zu requested class(es) do not occur in %s\n", missing, o.labels.c_str());
  if (mfgmix_dataset_num_samples(data.get()) == 0) throw Failure{kExitData, "no samples selected"};
  if (classes) *classes = keep;
  return data;
}

int cmd_fit(const Options& o) {
  if (o.K < 1) usage_error("--K must be at least 1");
  if (o.S < 2) usage_error("--S must be at least 2");
  if (!(o.tol > 0.0)) usage_error("--tol must be positive");
  if (!(o.eps >= 0.0)) usage_error("--eps must be non-negative");
  require_set(o.out, "--out");

  Timer timer;
  std::map<std::string, std::string> timing;
  const Dataset data = load_data(o, o.S, nullptr);
  timing["timing.load_seconds"] = real(timer.lap());

  mfgmix_fit_config cfg;
  mfgmix_fit_config_default(&cfg);
  cfg.num_components = o.K;
  cfg.epsilon = o.eps;
  cfg.tolerance = o.tol;
  cfg.max_iterations = o.max_iter;
  cfg.seed = o.seed;
  cfg.threads = o.threads;
  cfg.baseline = o.baseline ? 1 : 0;
  if (o.empty_cluster_floor > 0.0) cfg.empty_cluster_floor = o.empty_cluster_floor;
  if (o.subsystem_residual_limit > 0.0) cfg.subsystem_residual_limit = o.subsystem_residual_limit;
  if (o.coupling_scale > 0.0) cfg.coupling_scale = o.coupling_scale;
  if (o.policy_tol > 0.0) cfg.policy_tolerance = o.policy_tol;
  if (o.inner_tol > 0.0) cfg.inner_root_tolerance = o.inner_tol;
  if (o.max_policy_iter > 0) cfg.max_policy_iterations = o.max_policy_iter;

  std::fprintf(stderr, "fitting K=%zu on %zu samples, D=%zu, S=%zu, eps=%g%s\n", o.K,
               mfgmix_dataset_num_samples(data.get()), mfgmix_dataset_num_dims(data.get()), o.S, o.eps,
               o.baseline ? " (classical EM)" : "");
  mfgmix_fit_result* raw = nullptr;
  check(mfgmix_fit(data.get(), &cfg, &raw));
  const FitResult result(raw);
  timing["timing.fit_seconds"] = real(timer.lap());

  mfgmix_model* m = nullptr;
  check(mfgmix_fit_result_model(result.get(), &m));
  const Model model(m);
  check(mfgmix_model_save(model.get(), o.out.c_str()));

  const std::size_t iters = mfgmix_fit_result_iterations(result.get());
  const std::string trace = o.trace.empty() ? o.out + ".trace.csv" : o.trace;
  {
    std::ofstream csv(trace, std::ios::binary | std::ios::trunc);
    if (!csv) throw Failure{kExitData, "cannot write " + trace};
    csv << "iteration,theta_residual,subsystem_residual,loglik_before,loglik_after\n";
    for (std::size_t h = 0; h < mfgmix_fit_result_trace_length(result.get()); ++h) {
      csv << h + 1 << ',' << real(mfgmix_fit_result_theta_residual(result.get(), h)) << ','
          << real(mfgmix_fit_result_subsystem_residual(result.get(), h)) << ','
          << real(mfgmix_fit_result_loglik(result.get(), h)) << ','
          << real(mfgmix_fit_result_loglik(result.get(), h + 1)) << '\n';
    }
    if (!csv) throw Failure{kExitData, "write error on " + trace};
  }
  timing["timing.write_seconds"] = real(timer.lap());

  for (std::size_t i = 0; i < mfgmix_fit_result_num_warnings(result.get()); ++i) {
    std::fprintf(stderr, "warning: %s\n", mfgmix_fit_result_warning(result.get(), i));
  }
  const bool converged = mfgmix_fit_result_converged(result.get()) != 0;

  const std::string manifest = o.manifest.empty() ? o.out + ".manifest" : o.manifest;
  std::ofstream mf(manifest, std::ios::binary | std::ios::trunc);
  if (!mf) throw Failure{kExitData, "cannot write " + manifest};
  mf << "# mfgmix run manifest; pass it back with --config to repeat the run\n"
     << "command=fit\n"
     << "images=" << o.images << '\n';
  if (!o.labels.empty()) mf << "labels=" << o.labels << '\n';
  if (!o.classes.empty()) mf << "classes=" << o.classes << '\n';
  mf << "K=" << cfg.num_components << '\n'
     << "S=" << o.S << '\n'
     << "eps=" << real(cfg.epsilon) << '\n'
     << "tol=" << real(cfg.tolerance) << '\n'
     << "max-iter=" << cfg.max_iterations << '\n'
     << "seed=" << cfg.seed << '\n'
     << "baseline=" << (o.baseline ? 1 : 0) << '\n'
     << "empty-cluster-floor=" << real(cfg.empty_cluster_floor) << '\n'
     << "subsystem-residual-limit=" << real(cfg.subsystem_residual_limit) << '\n'
     << "coupling-scale=" << real(cfg.coupling_scale) << '\n'
     << "policy-tol=" << real(cfg.policy_tolerance) << '\n'
     << "inner-tol=" << real(cfg.inner_root_tolerance) << '\n'
     << "max-policy-iter=" << cfg.max_policy_iterations << '\n'
     << "threads=" << o.threads << '\n'
     << "out=" << o.out << '\n'
     << "trace=" << trace << '\n'
     << "version.mfgmix=" << mfgmix_version() << '\n'
     << "digest.images=" << sha256_file(o.images) << '\n';
  if (!o.labels.empty()) mf << "digest.labels=" << sha256_file(o.labels) << '\n';
  mf << "digest.model=" << sha256_file(o.out) << '\n'
     << "digest.trace=" << sha256_file(trace) << '\n'
     << "result.iterations=" << iters << '\n'
     << "result.converged=" << (converged ? 1 : 0) << '\n'
     << "result.loglik=" << real(mfgmix_fit_result_loglik(result.get(), iters)) << '\n';
  for (const auto& [k, v] : timing) mf << k << '=' << v << '\n';

  std::printf("iterations %zu, converged %s, final log-likelihood %s\n", iters, converged ? "yes" : "no",
              real(mfgmix_fit_result_loglik(result.get(), iters)).c_str());
  std::printf("model written to %s\n", o.out.c_str());
  return 0;
}

int cmd_eval(const Options& o) {
  require_set(o.model, "--model");
  require_set(o.labels, "--labels");
  mfgmix_model* m = nullptr;
  check(mfgmix_model_load(o.model.c_str(), &m));
  const Model model(m);
  const std::size_t K = mfgmix_model_num_components(model.get());
  std::vector<int> classes;
  const Dataset data = load_data(o, mfgmix_model_num_states(model.get()), &classes);
  if (!classes.empty() && classes.size() != K) {
    throw Failure{kExitData, "--classes lists " + std::to_string(classes.size()) + " classes but the model has " +
                                 std::to_string(K) + " components"};
  }
  if (mfgmix_dataset_num_dims(data.get()) != mfgmix_model_num_dims(model.get())) {
    throw Failure{kExitData, "data has D = " + std::to_string(mfgmix_dataset_num_dims(data.get())) +
                                 ", model has D = " + std::to_string(mfgmix_model_num_dims(model.get()))};
  }
  mfgmix_report* r = nullptr;
  const mfgmix_status s = mfgmix_evaluate(model.get(), data.get(), o.threads, &r);
  if (s == MFGMIX_INVALID_ARGUMENT) throw Failure{kExitData, mfgmix_last_error()};
  check(s);
  const Report report(r);

  std::vector<std::string> names;
  for (std::size_t k = 0; k < K; ++k) names.push_back(classes.empty() ? std::to_string(k) : std::to_string(classes[k]));
  std::printf("class  size  matched_cluster  H_row\n");
  for (std::size_t k = 0; k < K; ++k) {
    std::printf("%-6s %-5zu %-16zu", names[k].c_str(), mfgmix_report_class_size(report.get(), k),
                mfgmix_report_cluster_of(report.get(), k));
    for (std::size_t j = 0; j < K; ++j) std::printf(" %.6f", mfgmix_report_h(report.get(), k, j));
    std::printf("\n");
  }
  std::printf("diagonal mean %s\n", real(mfgmix_report_diagonal_mean(report.get())).c_str());
  if (!o.out_h.empty()) {
    std::vector<const char*> cnames;
    for (const auto& n : names) cnames.push_back(n.c_str());
    check(mfgmix_report_write_csv(report.get(), cnames.data(), o.out_h.c_str()));
  }
  return 0;
}

int cmd_solve(const Options& o) {
  require_set(o.theta, "--theta");
  const auto theta = parse_real_list(o.theta, "--theta");
  mfgmix_solution* s = nullptr;
  check(mfgmix_solve(theta.data(), theta.size(), o.eps, &s));
  const Solution sol(s);
  const std::size_t S = mfgmix_solution_num_states(sol.get());
  auto print_vec = [&](const char* name, auto get) {
    std::printf("%s", name);
    for (std::size_t i = 0; i < S; ++i) std::printf(" %s", real(get(i)).c_str());
    std::printf("\n");
  };
  print_vec("V", [&](std::size_t i) { return mfgmix_solution_value(sol.get(), i); });
  std::printf("lambda %s\n", real(mfgmix_solution_ergodic_cost(sol.get())).c_str());
  print_vec("pi", [&](std::size_t i) { return mfgmix_solution_distribution(sol.get(), i); });
  for (std::size_t i = 0; i < S; ++i) {
    std::printf("P[%zu]", i);
    for (std::size_t j = 0; j < S; ++j) std::printf(" %s", real(mfgmix_solution_transition(sol.get(), i, j)).c_str());
    std::printf("\n");
  }
  std::printf("hjb_residual %s\n", real(mfgmix_solution_hjb_residual(sol.get())).c_str());
  std::printf("fp_residual %s\n", real(mfgmix_solution_fp_residual(sol.get())).c_str());
  std::printf("policy_iterations %zu\n", mfgmix_solution_iterations(sol.get()));
  return 0;
}

int cmd_synth(const Options& o) {
  require_set(o.model, "--model");
  require_set(o.out_images, "--out-images");
  mfgmix_model* m = nullptr;
  check(mfgmix_model_load(o.model.c_str(), &m));
  const Model model(m);
  const std::size_t D = mfgmix_model_num_dims(model.get());
  const std::size_t side = square_side(D);
  if (side * side != D) throw Failure{kExitData, "D = " + std::to_string(D) + " is not a perfect square"};
  mfgmix_dataset* d = nullptr;
  check(mfgmix_synth_generate(model.get(), o.N, o.seed, &d));
  const Dataset data(d);
  check(mfgmix_dataset_write_idx(data.get(), side, side, o.out_images.c_str(),
                                 o.out_labels.empty() ? nullptr : o.out_labels.c_str()));
  std::printf("%zu samples of %zux%zu written to %s\n", o.N, side, side, o.out_images.c_str());
  return 0;
}

int cmd_export(const Options& o) {
  require_set(o.model, "--model");
  require_set(o.out_dir, "--out-dir");
  if (o.side == 0) usage_error("--side is required");
  mfgmix_model* m = nullptr;
  check(mfgmix_model_load(o.model.c_str(), &m));
  const Model model(m);
  check(mfgmix_export_images(model.get(), o.side, o.out_dir.c_str(), o.prefix.c_str()));
  std::printf("%zu images written to %s\n", mfgmix_model_num_components(model.get()), o.out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Categorical mixture clustering with mean field game subsystems"};
  app.require_subcommand(1);
  app.add_option("--threads", o.threads, "Worker threads (0: all cores)");
  app.add_option("--config", o.config, "key=value file supplying any flag; explicit flags win");

  auto* fit = app.add_subcommand("fit", "Fit a mixture to IDX images");
  fit->add_option("--images", o.images, "IDX image file (gzip accepted)");
  fit->add_option("--labels", o.labels, "IDX label file");
  fit->add_option("--classes", o.classes, "Comma list of labels to keep");
  fit->add_option("--K", o.K, "Number of components")->capture_default_str();
  fit->add_option("--S", o.S, "Grey levels per pixel")->capture_default_str();
  fit->add_option("--eps", o.eps, "Entropy penalty")->capture_default_str();
  fit->add_option("--tol", o.tol, "Outer tolerance on theta")->capture_default_str();
  fit->add_option("--max-iter", o.max_iter, "Outer iteration cap")->capture_default_str();
  fit->add_option("--seed", o.seed, "Initialization seed")->capture_default_str();
  fit->add_flag("--baseline", o.baseline, "Classical EM M-step instead of the MFG subsystems");
  fit->add_option("--out", o.out, "Model file to write");
  fit->add_option("--trace", o.trace, "Per-iteration CSV (default <out>.trace.csv)");
  fit->add_option("--manifest", o.manifest, "Run manifest (default <out>.manifest)");
  fit->add_option("--empty-cluster-floor", o.empty_cluster_floor, "Empty-component threshold per sample");
  fit->add_option("--subsystem-residual-limit", o.subsystem_residual_limit, "HJB residual needed to stop");
  fit->add_option("--coupling-scale", o.coupling_scale, "Scale of the squared-distance coupling");
  fit->add_option("--policy-tol", o.policy_tol, "Policy iteration tolerance");
  fit->add_option("--inner-tol", o.inner_tol, "Root-finding tolerance");
  fit->add_option("--max-policy-iter", o.max_policy_iter, "Policy iteration cap");

  auto* eval = app.add_subcommand("eval", "Score a model against labeled images");
  eval->add_option("--model", o.model, "Model file");
  eval->add_option("--images", o.images, "IDX image file");
  eval->add_option("--labels", o.labels, "IDX label file");
  eval->add_option("--classes", o.classes, "Comma list of labels, one per component");
  eval->add_option("--out-h", o.out_h, "CSV of the aligned H matrix");

  auto* solve = app.add_subcommand("solve", "Solve one subsystem and print it");
  solve->add_option("--theta", o.theta, "Comma list forming a probability vector");
  solve->add_option("--eps", o.eps, "Entropy penalty")->capture_default_str();

  auto* synth = app.add_subcommand("synth", "Sample IDX images from a model");
  synth->add_option("--model", o.model, "Model file");
  synth->add_option("--N", o.N, "Number of samples");
  synth->add_option("--seed", o.seed, "Sampling seed");
  synth->add_option("--out-images", o.out_images, "IDX image file to write");
  synth->add_option("--out-labels", o.out_labels, "IDX label file to write");

  auto* exp = app.add_subcommand("export", "Write one PGM per component");
  exp->add_option("--model", o.model, "Model file");
  exp->add_option("--side", o.side, "Image side; side * side must equal D");
  exp->add_option("--out-dir", o.out_dir, "Output directory");
  exp->add_option("--prefix", o.prefix, "File name prefix")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    if (!o.config.empty()) apply_config(o.config, app, *sub);
    if (sub == fit) return cmd_fit(o);
    if (sub == eval) return cmd_eval(o);
    if (sub == solve) return cmd_solve(o);
    if (sub == synth) return cmd_synth(o);
    return cmd_export(o);
  } catch (const Failure& f) {
    std::fprintf(stderr, "error: %s\n", f.message.c_str());
    return f.exit_code;
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
}
