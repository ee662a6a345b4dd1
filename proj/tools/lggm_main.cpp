// Command-line front end: simulate two-layer panel data, fit the one-step /
// EM estimators, select penalties, evaluate recovery, trace ROC curves, run
// structure tests, and reproduce the desk-scale simulation table.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "lggm/lggm.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lggm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitConvergence = 3;
constexpr int kExitIo = 4;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

FitMethod method_from_string(const std::string& s) {
  if (s == "onestep") return FitMethod::onestep;
  if (s == "em") return FitMethod::em;
  if (s == "alpha-em") return FitMethod::alpha_em;
  throw ValidationError("unknown method '" + s + "' (expected onestep, em or alpha-em)");
}

struct CommonFitFlags {
  std::optional<double> delta;
  int max_iter = 100;
  int jobs = 1;
  std::uint64_t seed = 0;

  EmSettings settings() const {
    EmSettings s;
    s.delta = delta;
    s.max_iterations = max_iter;
    return s;
  }
};

ScenarioSpec scenario_from_config(const json& config) {
  io::require_keys(config,
                   {"schema_version", "architecture", "p", "n", "k", "m", "rho", "seed"},
                   {"alphas"}, "simulate config");
  if (config["schema_version"] != io::kSchemaVersion)
    throw ValidationError("unsupported config schema_version");
  ScenarioSpec spec;
  spec.architecture = architecture_from_string(config["architecture"]);
  spec.p = config["p"];
  spec.n = config["n"];
  spec.k_categories = config["k"];
  spec.m = config["m"];
  spec.rho = config["rho"];
  spec.seed = config["seed"].get<std::uint64_t>();
  if (config.contains("alphas")) {
    const auto a = config["alphas"].get<std::vector<double>>();
    spec.alphas = Eigen::Map<const Eigen::VectorXd>(a.data(),
                                                    static_cast<Eigen::Index>(a.size()));
  }
  spec.validate();
  return spec;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                 std::optional<std::uint64_t> seed_override) {
  json config = io::read_json_file(config_path);
  if (seed_override) config["seed"] = *seed_override;
  const ScenarioSpec spec = scenario_from_config(config);
  const io::Provenance prov{spec.seed, io::config_hash(config)};

  auto [data, truth] = sample_panel(spec);
  io::write_dataset(out_dir, data, prov);
  io::EstimateMeta meta;
  meta.kind = "truth-stack";
  io::write_stack(fs::path(out_dir) / "truth", truth, meta, prov);
  std::cout << "wrote " << out_dir << " (n=" << data.n << ", K=" << data.k_categories
            << ", p=" << data.p << ", hash=" << prov.config_hash << ")\n";
  return kExitOk;
}

int cmd_fit(const std::string& data_path, const std::string& method_name,
            double lambda1, double lambda2, const std::string& out_dir,
            const CommonFitFlags& flags) {
  const PanelDataset data = io::read_dataset(data_path);
  const FitMethod method = method_from_string(method_name);
  EmSettings settings = flags.settings();
  if (method == FitMethod::alpha_em) settings.estimate_alphas = true;
  const PenaltyPair penalties{lambda1, lambda2};

  std::optional<PrecisionStack> init;
  const FitReport fit = run_fit(data, penalties, method, settings, init);

  json effective = {{"command", "fit"},       {"method", method_name},
                    {"lambda1", lambda1},     {"lambda2", lambda2},
                    {"max_iter", flags.max_iter}};
  if (flags.delta) effective["delta"] = *flags.delta;
  const io::Provenance prov{flags.seed, io::config_hash(effective)};
  io::EstimateMeta meta;
  meta.method = method_name;
  meta.penalties = penalties;
  const FitReport* ptr = &fit;
  meta.fit = ptr;
  io::write_stack(out_dir, fit.estimate, meta, prov);

  std::cout << "method=" << method_name << " iterations=" << fit.iterations
            << " converged=" << (fit.converged ? "yes" : "no")
            << " edges=" << fit.edge_count
            << " seconds=" << fit.wall_time_seconds << "\n";
  for (const auto& w : fit.warnings) std::cerr << "warning: " << w << "\n";
  return fit.converged ? kExitOk : kExitConvergence;
}

void write_scores_csv(const fs::path& path, const SelectionReport& report,
                      const std::string& method_name, const io::Provenance& prov) {
  std::string out = "lambda1,lambda2,score,method,criterion,tool_version,seed,config_hash\n";
  for (const auto& [penalties, score] : report.scores) {
    out += format_double(penalties.lambda1) + "," + format_double(penalties.lambda2) +
           "," + format_double(score) + "," + method_name + "," +
           report.criterion.name() + "," + kVersion + "," + std::to_string(prov.seed) +
           "," + prov.config_hash + "\n";
  }
  io::write_text_file(path, out);
}

int cmd_select(const std::string& data_path, const std::string& method_name,
               const std::string& criterion_name, double gamma, int folds,
               int grid_count, double grid_span, const std::string& out_dir,
               const CommonFitFlags& flags) {
  const PanelDataset data = io::read_dataset(data_path);
  const FitMethod method = method_from_string(method_name);
  if (method == FitMethod::alpha_em)
    throw ValidationError("select supports methods onestep and em");

  SelectionCriterion criterion;
  if (criterion_name == "ebic") {
    criterion.kind = SelectionCriterion::Kind::ebic;
    criterion.gamma = gamma;
  } else if (criterion_name == "cv") {
    criterion.kind = SelectionCriterion::Kind::cv;
    criterion.folds = folds;
  } else {
    throw ValidationError("unknown criterion '" + criterion_name + "'");
  }
  if (data.p > 500 && criterion.kind == SelectionCriterion::Kind::ebic)
    std::cerr << "hint: at p > 500 cross-validation is the recommended criterion\n";

  const LambdaGrid grid = LambdaGrid::defaults(data.p, data.n, grid_count, grid_span);
  const SelectionReport report = select_lambda(data, grid, criterion, method,
                                               flags.settings(), flags.seed, flags.jobs);

  json effective = {{"command", "select"},     {"method", method_name},
                    {"criterion", criterion_name}, {"gamma", gamma},
                    {"folds", folds},          {"grid_count", grid_count},
                    {"grid_span", grid_span}};
  const io::Provenance prov{flags.seed, io::config_hash(effective)};
  fs::create_directories(out_dir);
  write_scores_csv(fs::path(out_dir) / "scores.csv", report, method_name, prov);

  io::EstimateMeta meta;
  meta.method = method_name;
  meta.penalties = report.chosen;
  const FitReport* ptr = &*report.final_fit;
  meta.fit = ptr;
  io::write_stack(fs::path(out_dir) / "fit", report.final_fit->estimate, meta, prov);
  for (const auto& f : report.failures) std::cerr << "warning: " << f << "\n";
  std::cout << "chosen lambda1=" << report.chosen.lambda1
            << " lambda2=" << report.chosen.lambda2
            << " edges=" << report.final_fit->edge_count << "\n";
  return kExitOk;
}

int cmd_evaluate(const std::string& truth_dir, const std::string& estimate_dir,
                 const std::string& out_path, const std::string& format) {
  const PrecisionStack truth = io::read_stack(truth_dir);
  const PrecisionStack est = io::read_stack(estimate_dir);
  const MetricReport metrics = evaluate_metrics(truth, est);
  const auto per_layer = support_metrics_per_layer(truth, est);

  json effective = {{"command", "evaluate"}, {"truth", truth_dir}, {"estimate", estimate_dir}};
  const std::string hash = io::config_hash(effective);

  if (format == "json") {
    json out = {{"entropy_loss", metrics.entropy_loss},
                {"frobenius_loss", metrics.frobenius_loss},
                {"fp_percent", 100.0 * metrics.fp_rate},
                {"fn_percent", 100.0 * metrics.fn_rate},
                {"hamming_percent", 100.0 * metrics.hamming},
                {"fn_undefined", metrics.fn_undefined},
                {"tool_version", kVersion},
                {"config_hash", hash}};
    json layers = json::array();
    for (std::size_t k = 0; k < per_layer.size(); ++k)
      layers.push_back({{"layer", k},
                        {"fp_percent", 100.0 * per_layer[k].fp_rate},
                        {"fn_percent", 100.0 * per_layer[k].fn_rate},
                        {"hamming_percent", 100.0 * per_layer[k].hamming}});
    out["per_layer"] = layers;
    io::write_text_file(out_path, out.dump(2) + "\n");
  } else {
    std::string out =
        "layer,entropy_loss,frobenius_loss,fp_percent,fn_percent,hamming_percent,"
        "tool_version,config_hash\n";
    out += "pooled," + format_double(metrics.entropy_loss) + "," +
           format_double(metrics.frobenius_loss) + "," +
           format_double(100.0 * metrics.fp_rate) + "," +
           format_double(100.0 * metrics.fn_rate) + "," +
           format_double(100.0 * metrics.hamming) + "," + kVersion + "," + hash + "\n";
    for (std::size_t k = 0; k < per_layer.size(); ++k)
      out += std::to_string(k) + ",,," + format_double(100.0 * per_layer[k].fp_rate) +
             "," + format_double(100.0 * per_layer[k].fn_rate) + "," +
             format_double(100.0 * per_layer[k].hamming) + "," + kVersion + "," +
             hash + "\n";
    io::write_text_file(out_path, out);
  }
  std::cout << "EL=" << metrics.entropy_loss << " FL=" << metrics.frobenius_loss
            << " FP%=" << 100.0 * metrics.fp_rate << " FN%=" << 100.0 * metrics.fn_rate
            << " HD%=" << 100.0 * metrics.hamming << "\n";
  return kExitOk;
}

int cmd_roc(const std::string& config_path, const std::string& out_dir,
            const CommonFitFlags& flags) {
  const json config = io::read_json_file(config_path);
  io::require_keys(config,
                   {"schema_version", "architecture", "p", "n", "k", "m", "rho",
                    "seed", "replicates", "lambda_count"},
                   {"lambda_min", "lambda_max", "methods"}, "roc config");
  json scenario_config = config;
  scenario_config.erase("replicates");
  scenario_config.erase("lambda_count");
  if (scenario_config.contains("lambda_min")) scenario_config.erase("lambda_min");
  if (scenario_config.contains("lambda_max")) scenario_config.erase("lambda_max");
  if (scenario_config.contains("methods")) scenario_config.erase("methods");
  ScenarioSpec base = scenario_from_config(scenario_config);

  const int replicates = config["replicates"];
  const int lambda_count = config["lambda_count"];
  std::vector<std::string> methods{"em", "onestep"};
  if (config.contains("methods"))
    methods = config["methods"].get<std::vector<std::string>>();

  LambdaGrid grid;
  if (config.contains("lambda_min")) {
    const double lo = config["lambda_min"], hi = config["lambda_max"];
    if (!(lo > 0.0) || !(hi > lo)) throw ValidationError("roc: bad lambda range");
    for (int i = 0; i < lambda_count; ++i)
      grid.lambda1_values.push_back(
          std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i /
                                      std::max(1, lambda_count - 1)));
  } else {
    grid.lambda1_values = LambdaGrid::default_values(base.p, base.n, lambda_count);
  }
  grid.lambda2_values = grid.lambda1_values;
  grid.tie_to_equal = true;

  const io::Provenance prov{base.seed, io::config_hash(config)};
  struct Row {
    std::string method;
    int replicate;
    RocCurve curve;
  };
  std::vector<Row> rows(methods.size() * static_cast<std::size_t>(replicates));
  detail::parallel_for(
      flags.jobs, static_cast<int>(rows.size()), [&](int task) {
        const int rep = task % replicates;
        const auto mi = static_cast<std::size_t>(task / replicates);
        ScenarioSpec spec = base;
        spec.seed = substream(base.seed, 9000 + static_cast<std::uint64_t>(rep));
        auto [data, truth] = sample_panel(spec);
        EmSettings settings = flags.settings();
        rows[static_cast<std::size_t>(task)] =
            Row{methods[mi], rep,
                roc_curve(data, truth, method_from_string(methods[mi]), settings, grid)};
      });

  fs::create_directories(out_dir);
  std::string curve_csv =
      "method,replicate,lambda,fpr,tpr,tool_version,seed,config_hash\n";
  std::string auc_csv =
      "method,replicate,auc,failed_points,tool_version,seed,config_hash\n";
  const std::string stamp = std::string(kVersion) + "," +
                            std::to_string(base.seed) + "," + prov.config_hash;
  for (const auto& row : rows) {
    for (const auto& pt : row.curve.points)
      curve_csv += row.method + "," + std::to_string(row.replicate) + "," +
                   format_double(pt.lambda) + "," + format_double(pt.fpr) + "," +
                   format_double(pt.tpr) + "," + stamp + "\n";
    auc_csv += row.method + "," + std::to_string(row.replicate) + "," +
               format_double(row.curve.auc) + "," +
               std::to_string(row.curve.failed_points) + "," + stamp + "\n";
  }
  io::write_text_file(fs::path(out_dir) / "roc.csv", curve_csv);
  io::write_text_file(fs::path(out_dir) / "auc.csv", auc_csv);
  std::cout << "wrote " << out_dir << "/roc.csv and auc.csv (" << rows.size()
            << " curves)\n";
  return kExitOk;
}

int cmd_test(const std::string& data_path, const std::string& test_name, int n_perm,
             const std::string& norm_name, const std::string& out_path,
             const CommonFitFlags& flags) {
  const PanelDataset data = io::read_dataset(data_path);
  const MatrixNorm norm = norm_from_string(norm_name);
  HypoTestResult result;
  if (test_name == "sigma0") {
    result = test_sigma0_zero(data, n_perm, flags.seed, norm);
  } else if (test_name == "equal-blocks") {
    result = test_equal_cross_blocks(data, n_perm, flags.seed, norm);
  } else {
    throw ValidationError("unknown test '" + test_name +
                          "' (expected sigma0 or equal-blocks)");
  }
  json effective = {{"command", "test"},
                    {"test", test_name},
                    {"n_resamples", n_perm},
                    {"norm", norm_name}};
  json out = {{"test", test_name},
              {"statistic", result.statistic},
              {"p_value", result.p_value},
              {"n_resamples", n_perm},
              {"norm", norm_name},
              {"warnings", result.warnings},
              {"null_draws", result.null_draws},
              {"tool_version", kVersion},
              {"seed", flags.seed},
              {"config_hash", io::config_hash(effective)}};
  io::write_text_file(out_path, out.dump(2) + "\n");
  std::cout << "test=" << test_name << " statistic=" << result.statistic
            << " p_value=" << result.p_value << "\n";
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  return kExitOk;
}

int cmd_repro_table1(const std::string& out_dir, int replicates, double gamma,
                     int grid_count, double grid_span, const CommonFitFlags& flags,
                     bool with_cv, int folds) {
  ScenarioSpec base;
  base.architecture = Architecture::I;
  base.p = 100;
  base.n = 300;
  base.k_categories = 4;
  base.m = 5;
  base.rho = 0.0;
  base.seed = flags.seed;

  json effective = {{"command", "repro-table1"}, {"replicates", replicates},
                    {"gamma", gamma},            {"grid_count", grid_count},
                    {"grid_span", grid_span},    {"with_cv", with_cv}};
  const io::Provenance prov{flags.seed, io::config_hash(effective)};

  struct Row {
    std::string method, criterion;
    int replicate;
    PenaltyPair chosen;
    MetricReport metrics;
    long edges;
    int iterations;
    double seconds;
  };
  std::vector<std::string> criteria{"ebic"};
  if (with_cv) criteria.push_back("cv");
  const std::vector<FitMethod> methods{FitMethod::onestep, FitMethod::em};
  std::vector<Row> rows;
  std::mutex rows_mutex;

  detail::parallel_for(flags.jobs, replicates, [&](int rep) {
    ScenarioSpec spec = base;
    spec.seed = substream(base.seed, 8000 + static_cast<std::uint64_t>(rep));
    auto [data, truth] = sample_panel(spec);
    const LambdaGrid grid =
        LambdaGrid::defaults(spec.p, spec.n, grid_count, grid_span);
    for (const FitMethod method : methods) {
      for (const std::string& crit_name : criteria) {
        SelectionCriterion criterion;
        if (crit_name == "ebic") {
          criterion.kind = SelectionCriterion::Kind::ebic;
          criterion.gamma = gamma;
        } else {
          criterion.kind = SelectionCriterion::Kind::cv;
          criterion.folds = folds;
        }
        const auto t0 = std::chrono::steady_clock::now();
        const SelectionReport report =
            select_lambda(data, grid, criterion, method, flags.settings(), spec.seed);
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        Row row{to_string(method),
                crit_name,
                rep,
                report.chosen,
                evaluate_metrics(truth, report.final_fit->estimate),
                report.final_fit->edge_count,
                report.final_fit->iterations,
                seconds};
        std::lock_guard<std::mutex> lock(rows_mutex);
        rows.push_back(std::move(row));
      }
    }
  });
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(a.method, a.criterion, a.replicate) <
           std::tie(b.method, b.criterion, b.replicate);
  });

  fs::create_directories(out_dir);
  std::string csv =
      "scenario,method,criterion,replicate,entropy_loss,frobenius_loss,fp_percent,"
      "fn_percent,hamming_percent,edges,lambda1,lambda2,iterations,seconds,"
      "tool_version,seed,config_hash\n";
  for (const auto& r : rows) {
    csv += "I-p100-n300-K4-rho0," + r.method + "," + r.criterion + "," +
           std::to_string(r.replicate) + "," + format_double(r.metrics.entropy_loss) +
           "," + format_double(r.metrics.frobenius_loss) + "," +
           format_double(100.0 * r.metrics.fp_rate) + "," +
           format_double(100.0 * r.metrics.fn_rate) + "," +
           format_double(100.0 * r.metrics.hamming) + "," + std::to_string(r.edges) +
           "," + format_double(r.chosen.lambda1) + "," +
           format_double(r.chosen.lambda2) + "," + std::to_string(r.iterations) + "," +
           format_double(r.seconds) + "," + kVersion + "," +
           std::to_string(flags.seed) + "," + prov.config_hash + "\n";
  }
  io::write_text_file(fs::path(out_dir) / "table1.csv", csv);

  // summary to stdout, one line per (method, criterion)
  for (const FitMethod method : methods) {
    for (const std::string& crit : criteria) {
      double el = 0.0, fl = 0.0, fp = 0.0, fn = 0.0, hd = 0.0;
      int count = 0;
      for (const auto& r : rows) {
        if (r.method != to_string(method) || r.criterion != crit) continue;
        el += r.metrics.entropy_loss;
        fl += r.metrics.frobenius_loss;
        fp += 100.0 * r.metrics.fp_rate;
        fn += 100.0 * r.metrics.fn_rate;
        hd += 100.0 * r.metrics.hamming;
        ++count;
      }
      if (count == 0) continue;
      std::printf("%-8s %-5s EL %6.2f  FL %5.3f  FP%% %5.2f  FN%% %5.2f  HD%% %5.2f  (%d reps)\n",
                  to_string(method), crit.c_str(), el / count, fl / count, fp / count,
                  fn / count, hd / count, count);
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint estimation of category-specific and systemic sparse "
               "precision matrices from dependent panel data"};
  app.require_subcommand(1);

  CommonFitFlags flags;

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate a dataset and its truth stack");
  std::string sim_config, sim_out;
  std::optional<std::uint64_t> sim_seed;
  sim->add_option("--config", sim_config, "scenario config JSON")->required();
  sim->add_option("--out", sim_out, "output directory")->required();
  sim->add_option("--seed", sim_seed, "override the config seed");

  // fit
  auto* fit = app.add_subcommand("fit", "fit one penalty pair");
  std::string fit_data, fit_method = "em", fit_out;
  double fit_lambda1 = 0.1, fit_lambda2 = 0.1;
  fit->add_option("--data", fit_data, "dataset directory or data.csv")->required();
  fit->add_option("--method", fit_method, "onestep | em | alpha-em");
  fit->add_option("--lambda1", fit_lambda1, "category-layer penalty")->required();
  fit->add_option("--lambda2", fit_lambda2, "systemic-layer penalty")->required();
  fit->add_option("--out", fit_out, "output directory")->required();
  fit->add_option("--delta", flags.delta, "EM convergence threshold (default 1e-4 p)");
  fit->add_option("--max-iter", flags.max_iter, "EM iteration cap");
  fit->add_option("--seed", flags.seed, "seed recorded in the manifest");

  // select
  auto* sel = app.add_subcommand("select", "grid search over penalty pairs");
  std::string sel_data, sel_method = "em", sel_criterion = "ebic", sel_out;
  double sel_gamma = 0.1, sel_span = 8.0;
  int sel_folds = 5, sel_count = 10;
  sel->add_option("--data", sel_data, "dataset directory or data.csv")->required();
  sel->add_option("--method", sel_method, "onestep | em");
  sel->add_option("--criterion", sel_criterion, "ebic | cv");
  sel->add_option("--gamma", sel_gamma, "eBIC gamma in [0, 1]");
  sel->add_option("--folds", sel_folds, "CV fold count");
  sel->add_option("--grid-count", sel_count, "values per lambda axis");
  sel->add_option("--grid-span", sel_span, "grid span factor around sqrt(log p / n)");
  sel->add_option("--out", sel_out, "output directory")->required();
  sel->add_option("--jobs", flags.jobs, "concurrent fits");
  sel->add_option("--seed", flags.seed, "fold-split seed");
  sel->add_option("--delta", flags.delta, "EM convergence threshold");
  sel->add_option("--max-iter", flags.max_iter, "EM iteration cap");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "recovery metrics of an estimate vs a truth stack");
  std::string ev_truth, ev_estimate, ev_out, ev_format = "csv";
  ev->add_option("--truth", ev_truth, "truth stack directory")->required();
  ev->add_option("--estimate", ev_estimate, "estimate directory")->required();
  ev->add_option("--out", ev_out, "output file")->required();
  ev->add_option("--format", ev_format, "csv | json");

  // roc
  auto* roc = app.add_subcommand("roc", "ROC curves over a lambda1 = lambda2 grid");
  std::string roc_config, roc_out;
  roc->add_option("--config", roc_config, "roc config JSON")->required();
  roc->add_option("--out", roc_out, "output directory")->required();
  roc->add_option("--jobs", flags.jobs, "concurrent replicates");
  roc->add_option("--delta", flags.delta, "EM convergence threshold");
  roc->add_option("--max-iter", flags.max_iter, "EM iteration cap");

  // test
  auto* tst = app.add_subcommand("test", "structure tests (Sigma_0 = 0, equal cross blocks)");
  std::string tst_data, tst_name, tst_norm = "frobenius", tst_out;
  int tst_nperm = 199;
  tst->add_option("--data", tst_data, "dataset directory or data.csv")->required();
  tst->add_option("--test", tst_name, "sigma0 | equal-blocks")->required();
  tst->add_option("--n-perm", tst_nperm, "resample count");
  tst->add_option("--norm", tst_norm, "frobenius | linf | l1");
  tst->add_option("--out", tst_out, "output JSON report")->required();
  tst->add_option("--seed", flags.seed, "resampling seed");

  // repro-table1
  auto* repro = app.add_subcommand(
      "repro-table1", "desk-scale reproduction of the base simulation table row");
  std::string repro_out;
  int repro_reps = 20, repro_count = 6, repro_folds = 5;
  double repro_gamma = 0.1, repro_span = 6.0;
  bool repro_cv = false;
  repro->add_option("--out", repro_out, "output directory")->required();
  repro->add_option("--replicates", repro_reps, "replicate count");
  repro->add_option("--gamma", repro_gamma, "eBIC gamma");
  repro->add_option("--grid-count", repro_count, "values per lambda axis");
  repro->add_option("--grid-span", repro_span, "grid span factor");
  repro->add_flag("--with-cv", repro_cv, "also run cross-validation selection");
  repro->add_option("--folds", repro_folds, "CV fold count");
  repro->add_option("--jobs", flags.jobs, "concurrent replicates");
  repro->add_option("--seed", flags.seed, "base seed");
  repro->add_option("--delta", flags.delta, "EM convergence threshold");
  repro->add_option("--max-iter", flags.max_iter, "EM iteration cap");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_config, sim_out, sim_seed);
    if (fit->parsed())
      return cmd_fit(fit_data, fit_method, fit_lambda1, fit_lambda2, fit_out, flags);
    if (sel->parsed())
      return cmd_select(sel_data, sel_method, sel_criterion, sel_gamma, sel_folds,
                        sel_count, sel_span, sel_out, flags);
    if (ev->parsed()) return cmd_evaluate(ev_truth, ev_estimate, ev_out, ev_format);
    if (roc->parsed()) return cmd_roc(roc_config, roc_out, flags);
    if (tst->parsed())
      return cmd_test(tst_data, tst_name, tst_nperm, tst_norm, tst_out, flags);
    if (repro->parsed())
      return cmd_repro_table1(repro_out, repro_reps, repro_gamma, repro_count,
                              repro_span, flags, repro_cv, repro_folds);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConvergence;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}
