// plaft command-line interface: fit, tune, predict, evaluate, simulate.

#include <CLI11.hpp>
#include <json.hpp>

#include "plaft/data.hpp"
#include "plaft/error.hpp"
#include "plaft/log.hpp"
#include "plaft/metrics.hpp"
#include "plaft/model.hpp"
#include "plaft/parallel.hpp"
#include "plaft/simgen.hpp"
#include "plaft/tuning.hpp"
#include "plaft/version.hpp"

#include <Eigen/Core>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace plaft;

namespace {

enum Exit : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kInput = 3,
  kSpec = 4,
  kNumerical = 5,
};

struct Global {
  std::uint64_t seed = 1;
  unsigned threads = 0;
  int verbosity = 1;
  std::string out = ".";
};

struct DataFlags {
  std::string path;
  CsvSchema schema{"time", "status", {}, {}, false, std::nullopt};
  std::string id_col;

  void add(CLI::App* app) {
    app->add_option("--data", path, "CSV file")->required()->check(CLI::ExistingFile);
    app->add_option("--time-col", schema.time_col, "Follow-up time column")->capture_default_str();
    app->add_option("--status-col", schema.status_col, "Status column (1 event, 0 censored)")
        ->capture_default_str();
    app->add_option("--clinical-cols", schema.clinical_cols, "Clinical columns (names or ranges)");
    app->add_option("--feature-cols", schema.feature_cols, "Feature columns (names or ranges)");
    app->add_flag("--time-is-log", schema.time_is_log, "Time column already holds log times");
    app->add_option("--id-col", id_col, "Average rows sharing this id");
  }

  Dataset load() {
    if (!id_col.empty()) schema.id_col = id_col;
    return load_csv(path, schema);
  }
};

struct SpecFlags {
  std::vector<std::string> nonlinear;
  bool all_linear = false;
  int degree = 3;
  int knots = 6;
  double gamma = 0.0;
  double lambda = 0.0;
  bool penalize_clinical = false;
  bool no_standardize = false;
  bool no_features = false;
  std::string solver = "exact";
  std::string tune;
  int folds = 5;
  int grid_count = 10;
  double grid_min = 1e-3;
  double grid_max = 10.0;

  void add(CLI::App* app, bool tuning) {
    app->add_option("--nonlinear-cols", nonlinear,
                    "Clinical columns entering through splines (default: all clinical columns)");
    app->add_flag("--all-linear", all_linear, "Enter every clinical column linearly");
    app->add_option("--degree", degree, "Spline degree")->capture_default_str();
    app->add_option("--knots", knots, "Interior knots per spline")->capture_default_str();
    app->add_option("--gamma", gamma, "Penalty on knot coefficients")->capture_default_str();
    app->add_option("--lambda", lambda, "Lasso penalty on features")->capture_default_str();
    app->add_flag("--penalize-clinical", penalize_clinical, "Lasso also penalizes linear clinical columns");
    app->add_flag("--no-standardize", no_standardize, "Use features on the raw scale");
    app->add_flag("--no-features", no_features, "Ignore the feature block");
    app->add_option("--solver", solver, "exact or smoothed")
        ->check(CLI::IsMember({"exact", "smoothed"}))
        ->capture_default_str();
    if (tuning) {
      app->add_option("--folds", folds, "Cross-validation folds")->capture_default_str();
      app->add_option("--grid-count", grid_count, "Grid values per parameter")->capture_default_str();
      app->add_option("--grid-min", grid_min, "Smallest grid value")->capture_default_str();
      app->add_option("--grid-max", grid_max, "Largest grid value")->capture_default_str();
    }
  }

  ModelSpec resolve(const Dataset& ds) const {
    ModelSpec spec;
    std::vector<bool> is_nonlinear(static_cast<std::size_t>(ds.q()), !all_linear && nonlinear.empty());
    for (const auto& item : nonlinear) {
      const auto& names = ds.clinical_names();
      auto it = std::find(names.begin(), names.end(), item);
      Eigen::Index idx = -1;
      if (it != names.end()) {
        idx = it - names.begin();
      } else {
        try {
          std::size_t used = 0;
          idx = std::stol(item, &used);
          if (used != item.size()) idx = -1;
        } catch (const std::exception&) {
          idx = -1;
        }
      }
      if (idx < 0 || idx >= ds.q()) throw SpecError("unknown nonlinear column '" + item + "'");
      is_nonlinear[static_cast<std::size_t>(idx)] = true;
    }
    for (Eigen::Index j = 0; j < ds.q(); ++j) {
      (is_nonlinear[static_cast<std::size_t>(j)] ? spec.nonlinear_covariates : spec.linear_clinical)
          .push_back(j);
    }
    spec.degree = degree;
    spec.knots = knots;
    spec.gamma = gamma;
    spec.lambda = lambda;
    spec.penalize_clinical = penalize_clinical;
    spec.standardize = !no_standardize;
    spec.use_features = !no_features;
    spec.solver.method = solver_method_from_string(solver);
    spec.validate(ds.q(), ds.d());
    return spec;
  }

  TuningGrid grid(std::uint64_t seed) const {
    TuningGrid g;
    g.gamma_values = TuningGrid::log_spaced(grid_count, grid_min, grid_max);
    g.lambda_values = g.gamma_values;
    g.folds = folds;
    g.seed = seed;
    return g;
  }
};

/// Resolved flags, seed, versions and wall time of one run.
class Manifest {
 public:
  Manifest(std::string command, const Global& g) : start_(std::chrono::steady_clock::now()) {
    doc_["command"] = std::move(command);
    doc_["version"] = std::string(kVersion);
    doc_["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                            "." + std::to_string(EIGEN_MINOR_VERSION);
    doc_["seed"] = g.seed;
    doc_["threads"] = g.threads;
    doc_["outputs"] = json::array();
  }

  void record_flags(const CLI::App* app) {
    json flags = json::object();
    for (const CLI::Option* opt : app->get_options()) {
      if (opt->get_name() == "--help" || opt->get_name().empty()) continue;
      const auto& res = opt->results();
      if (opt->count() > 0) {
        flags[opt->get_name()] = res.size() == 1 ? json(res.front()) : json(res);
      } else {
        flags[opt->get_name()] = opt->get_default_str();
      }
    }
    doc_["flags"] = flags;
  }

  json& operator[](const char* key) { return doc_[key]; }
  void output(const fs::path& p) { doc_["outputs"].push_back(p.filename().string()); }

  void write(const fs::path& dir) {
    doc_["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    std::ofstream out(dir / "manifest.json");
    if (!out) throw Error("cannot write " + (dir / "manifest.json").string());
    out << doc_.dump(2) << '\n';
  }

 private:
  json doc_;
  std::chrono::steady_clock::time_point start_;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_selected(const FitResult& fr, const Dataset& ds, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "index,name,coefficient_std,coefficient_raw\n";
  const Eigen::VectorXd raw = fr.vartheta_raw();
  const auto linear = static_cast<Eigen::Index>(fr.spec.linear_clinical.size());
  for (auto k : fr.selected) {
    std::string name;
    if (k < linear) {
      const auto col = fr.spec.linear_clinical[static_cast<std::size_t>(k)];
      if (col < static_cast<Eigen::Index>(ds.clinical_names().size())) {
        name = ds.clinical_names()[static_cast<std::size_t>(col)];
      }
    } else if (k - linear < static_cast<Eigen::Index>(ds.feature_names().size())) {
      name = ds.feature_names()[static_cast<std::size_t>(k - linear)];
    }
    out << k << ',' << name << ',' << fmt(fr.vartheta_hat(k)) << ',' << fmt(raw(k)) << '\n';
  }
}

void write_phi_curve(const FitResult& fr, const Dataset& ds, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "covariate,x,phi_hat\n";
  constexpr int kPoints = 200;
  for (std::size_t b = 0; b < fr.spec.nonlinear_covariates.size(); ++b) {
    const auto col = fr.spec.nonlinear_covariates[b];
    const double lo = ds.clinical().col(col).minCoeff();
    const double hi = ds.clinical().col(col).maxCoeff();
    const std::string name = col < static_cast<Eigen::Index>(ds.clinical_names().size())
                                 ? ds.clinical_names()[static_cast<std::size_t>(col)]
                                 : std::to_string(col);
    for (int k = 0; k < kPoints; ++k) {
      const double x = lo + (hi - lo) * k / (kPoints - 1);
      out << name << ',' << fmt(x) << ',' << fmt(phi_hat(fr, b, x)) << '\n';
    }
  }
}

void check_compatible(const FitResult& fr, const Dataset& ds) {
  if (ds.q() != fr.q || ds.d() != fr.d) {
    throw DimensionError("model expects q = " + std::to_string(fr.q) + ", d = " + std::to_string(fr.d) +
                         " but data has q = " + std::to_string(ds.q()) + ", d = " + std::to_string(ds.d()));
  }
}

/// Training and validation rows for one random split. With `stratify` the
/// share is applied to events and censored subjects separately.
std::pair<std::vector<Eigen::Index>, std::vector<Eigen::Index>> split_rows(const Dataset& ds, double share,
                                                                           bool stratify,
                                                                           std::mt19937_64& rng) {
  std::vector<std::vector<Eigen::Index>> groups(stratify ? 2 : 1);
  for (Eigen::Index i = 0; i < ds.n(); ++i) groups[stratify && !ds.event()(i) ? 1 : 0].push_back(i);
  std::vector<Eigen::Index> train, valid;
  for (auto& g : groups) {
    std::shuffle(g.begin(), g.end(), rng);
    const auto cut = static_cast<std::size_t>(std::lround(share * static_cast<double>(g.size())));
    train.insert(train.end(), g.begin(), g.begin() + static_cast<std::ptrdiff_t>(cut));
    valid.insert(valid.end(), g.begin() + static_cast<std::ptrdiff_t>(cut), g.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(valid.begin(), valid.end());
  return {train, valid};
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ParseError*>(&e)) return kInput;
  if (dynamic_cast<const DimensionError*>(&e) || dynamic_cast<const SpecError*>(&e) ||
      dynamic_cast<const KnotDegeneracyError*>(&e) || dynamic_cast<const FoldDegeneracyError*>(&e)) {
    return kSpec;
  }
  if (dynamic_cast<const DegenerateDataError*>(&e)) return kInput;
  if (dynamic_cast<const Error*>(&e)) return kNumerical;
  return kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rank-based estimation for partly linear and additive AFT models"};
  app.fallthrough();  // global flags may follow the subcommand
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Global g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)")->capture_default_str();
  app.add_option("--verbosity", g.verbosity, "0 quiet, 1 normal, 2 detailed")->capture_default_str();
  app.add_option("--out", g.out, "Output directory")->capture_default_str();

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "Fit a model and write the artifact");
  DataFlags fit_data;
  SpecFlags fit_spec;
  std::string fit_tune;
  fit_data.add(fit_cmd);
  fit_spec.add(fit_cmd, true);
  fit_cmd->add_option("--tune", fit_tune, "Choose gamma and lambda by cv or gcv")
      ->check(CLI::IsMember({"cv", "gcv"}));

  // tune
  auto* tune_cmd = app.add_subcommand("tune", "Evaluate a tuning grid");
  DataFlags tune_data;
  SpecFlags tune_spec;
  std::string tune_criterion = "gcv";
  tune_data.add(tune_cmd);
  tune_spec.add(tune_cmd, true);
  tune_cmd->add_option("--criterion", tune_criterion, "cv or gcv")
      ->check(CLI::IsMember({"cv", "gcv"}))
      ->capture_default_str();

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "Risk scores from a fitted model");
  DataFlags predict_data;
  std::string predict_model;
  predict_data.add(predict_cmd);
  predict_cmd->add_option("--model", predict_model, "Model artifact (fit.json)")
      ->required()
      ->check(CLI::ExistingFile);

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Concordance of a model on data");
  DataFlags eval_data;
  std::string eval_model;
  double eval_split = 0.0;
  bool eval_stratify = false;
  int eval_repeats = 1;
  eval_data.add(eval_cmd);
  eval_cmd->add_option("--model", eval_model, "Model artifact (fit.json)")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--split", eval_split, "Training share for repeated split validation (refits the model)")
      ->check(CLI::Range(0.0, 1.0));
  eval_cmd->add_flag("--stratify-status", eval_stratify, "Stratify splits on event status");
  eval_cmd->add_option("--repeats", eval_repeats, "Number of random splits")->check(CLI::PositiveNumber);

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo study of a simulation design");
  std::string sim_design = "selection";
  double sim_rho = 0.0, sim_delta = 1.0, sim_width = -1.0;
  Eigen::Index sim_d = 0, sim_n = 0;
  int sim_replicates = 100;
  std::string sim_phi;
  sim_cmd->add_option("--design", sim_design, "estimation, selection or highdim")
      ->check(CLI::IsMember({"estimation", "selection", "highdim"}))
      ->capture_default_str();
  sim_cmd->add_option("--rho", sim_rho, "Feature correlation")->capture_default_str();
  sim_cmd->add_option("--delta", sim_delta, "Effect size multiplier")->capture_default_str();
  sim_cmd->add_option("--d", sim_d, "Number of features (design default when omitted)");
  sim_cmd->add_option("--n", sim_n, "Training sample size (design default when omitted)");
  sim_cmd->add_option("--phi", sim_phi, "linear_2x, quadratic_x2, quadratic_2x2 or cubic_hinge");
  sim_cmd->add_option("--censor-width", sim_width, "Censoring width; 0 calibrates to 40% censoring");
  sim_cmd->add_option("--replicates", sim_replicates, "Replicates")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  if (g.verbosity <= 0) set_warning_handler([](const std::string&) {});
  const unsigned threads = g.threads == 0 ? default_threads() : g.threads;
  const fs::path out_dir(g.out);
  auto say = [&](const std::string& line) {
    if (g.verbosity >= 1) std::cout << line << '\n';
  };

  try {
    fs::create_directories(out_dir);

    if (*fit_cmd) {
      Manifest man("fit", g);
      man.record_flags(fit_cmd);
      const Dataset ds = fit_data.load();
      ModelSpec spec = fit_spec.resolve(ds);
      FitResult fr;
      if (!fit_tune.empty()) {
        const TuningGrid grid = fit_spec.grid(g.seed);
        TuningReport rep = fit_tune == "cv" ? cross_validate(ds, spec, grid, threads)
                                            : tune_gcv(ds, spec, grid, threads);
        rep.write_csv(out_dir / "tuning.csv");
        man.output(out_dir / "tuning.csv");
        spec.gamma = rep.chosen_gamma;
        spec.lambda = rep.chosen_lambda;
        fr = rep.chosen_fit ? std::move(*rep.chosen_fit) : fit(ds, spec);
        man["chosen"] = {{"gamma", rep.chosen_gamma}, {"lambda", rep.chosen_lambda}};
      } else {
        fr = fit(ds, spec);
      }
      save_fit(fr, out_dir / "fit.json");
      write_selected(fr, ds, out_dir / "selected.csv");
      write_phi_curve(fr, ds, out_dir / "phi_curve.csv");
      for (const char* f : {"fit.json", "selected.csv", "phi_curve.csv"}) man.output(out_dir / f);
      json coefs = json::array();
      const Eigen::VectorXd raw = fr.vartheta_raw();
      for (Eigen::Index k = 0; k < raw.size(); ++k) coefs.push_back(raw(k));
      man["coefficients_raw"] = coefs;
      man["converged"] = fr.converged;
      man.write(out_dir);
      say("gamma " + fmt(fr.gamma) + ", lambda " + fmt(fr.lambda) + ", loss " + fmt(fr.loss) + ", " +
          std::to_string(fr.selected.size()) + " selected, " + (fr.converged ? "converged" : "not converged"));
      if (!fr.converged) warn("solver stopped before reaching its tolerance; best iterate reported");
    } else if (*tune_cmd) {
      Manifest man("tune", g);
      man.record_flags(tune_cmd);
      const Dataset ds = tune_data.load();
      const ModelSpec spec = tune_spec.resolve(ds);
      const TuningGrid grid = tune_spec.grid(g.seed);
      const TuningReport rep = tune_criterion == "cv" ? cross_validate(ds, spec, grid, threads)
                                                      : tune_gcv(ds, spec, grid, threads);
      rep.write_csv(out_dir / "tuning.csv");
      man.output(out_dir / "tuning.csv");
      if (!rep.folds.empty()) {
        std::ofstream folds(out_dir / "folds.csv");
        folds << "row,fold\n";
        for (std::size_t i = 0; i < rep.folds.size(); ++i) folds << i << ',' << rep.folds[i] << '\n';
        man.output(out_dir / "folds.csv");
      }
      man["chosen"] = {{"gamma", rep.chosen_gamma}, {"lambda", rep.chosen_lambda}};
      man.write(out_dir);
      say("chosen gamma " + fmt(rep.chosen_gamma) + ", lambda " + fmt(rep.chosen_lambda) + " (" +
          std::string(to_string(rep.criterion)) + " " + fmt(rep.records[rep.chosen_index].criterion) + ")");
    } else if (*predict_cmd) {
      Manifest man("predict", g);
      man.record_flags(predict_cmd);
      const FitResult fr = load_fit(predict_model);
      const Dataset ds = predict_data.load();
      check_compatible(fr, ds);
      const Eigen::VectorXd risk = predict_risk(fr, ds);
      std::ofstream out(out_dir / "predictions.csv");
      if (!out) throw Error("cannot write predictions.csv");
      out << "row,score\n";
      for (Eigen::Index i = 0; i < risk.size(); ++i) out << i + 1 << ',' << fmt(risk(i)) << '\n';
      out.close();
      man.output(out_dir / "predictions.csv");
      man.write(out_dir);
      say("wrote " + std::to_string(risk.size()) + " scores");
    } else if (*eval_cmd) {
      Manifest man("evaluate", g);
      man.record_flags(eval_cmd);
      const FitResult fr = load_fit(eval_model);
      const Dataset ds = eval_data.load();
      check_compatible(fr, ds);
      if (eval_split > 0.0) {
        ModelSpec spec = fr.spec;
        spec.gamma = fr.gamma;
        spec.lambda = fr.lambda;
        spec.basis.clear();  // knots are re-placed on each training split
        std::mt19937_64 rng(g.seed);
        std::vector<std::pair<std::vector<Eigen::Index>, std::vector<Eigen::Index>>> splits;
        for (int r = 0; r < eval_repeats; ++r) splits.push_back(split_rows(ds, eval_split, eval_stratify, rng));
        std::vector<Concordance> cs(splits.size());
        std::vector<std::string> errors(splits.size());
        parallel_for(splits.size(), threads, [&](std::size_t r) {
          try {
            const Dataset train = ds.subset(splits[r].first);
            const Dataset valid = ds.subset(splits[r].second);
            const FitResult f = fit(train, spec);
            cs[r] = c_statistic(valid.log_time(), valid.event(), predict_risk(f, valid));
          } catch (const Error& e) {
            errors[r] = e.what();
          }
        });
        std::ofstream out(out_dir / "repeats.csv");
        out << "repeat,c,comparable_pairs,defined,error\n";
        double sum = 0.0, sum2 = 0.0;
        int defined = 0;
        for (std::size_t r = 0; r < cs.size(); ++r) {
          const bool ok = errors[r].empty() && cs[r].defined();
          out << r + 1 << ',' << (ok ? fmt(cs[r].value) : "NA") << ',' << cs[r].comparable << ','
              << (ok ? 1 : 0) << ',' << '"' << errors[r] << '"' << '\n';
          if (ok) {
            sum += cs[r].value;
            sum2 += cs[r].value * cs[r].value;
            ++defined;
          }
        }
        out.close();
        man.output(out_dir / "repeats.csv");
        const double mean = defined > 0 ? sum / defined : std::nan("");
        const double var = defined > 1 ? (sum2 - defined * mean * mean) / (defined - 1) : std::nan("");
        const double se = defined > 1 ? std::sqrt(std::max(0.0, var) / defined) : std::nan("");
        man["mean_c"] = defined > 0 ? json(mean) : json("NA");
        man["se_c"] = defined > 1 ? json(se) : json("NA");
        man["defined_repeats"] = defined;
        man["undefined_repeats"] = static_cast<int>(cs.size()) - defined;
        man.write(out_dir);
        say("mean c " + (defined > 0 ? fmt(mean) : std::string("NA")) + " (SE " +
            (defined > 1 ? fmt(se) : std::string("NA")) + ") over " + std::to_string(defined) + " of " +
            std::to_string(cs.size()) + " repeats");
        if (defined < static_cast<int>(cs.size())) {
          warn(std::to_string(cs.size() - static_cast<std::size_t>(defined)) +
               " repeats had an undefined c statistic and were excluded");
        }
        if (defined == 0) return kNumerical;
      } else {
        MetricsReport report;
        const Concordance c = c_statistic(ds.log_time(), ds.event(), predict_risk(fr, ds));
        if (c.defined()) report.c_statistic = c.value;
        report.comparable_pairs = c.comparable;
        const bool training = fingerprint(ds) == fr.data_fingerprint;
        std::ofstream out(out_dir / "metrics.csv");
        out << MetricsReport::csv_header() << ",overfit_warning\n" << report.csv_row() << ','
            << (training ? 1 : 0) << '\n';
        out.close();
        man.output(out_dir / "metrics.csv");
        man["overfit_warning"] = training;
        man.write(out_dir);
        if (g.verbosity >= 1) report.write_summary(std::cout);
        if (training) warn("evaluated on the model's own training data; c is optimistic");
      }
    } else if (*sim_cmd) {
      Manifest man("simulate", g);
      man.record_flags(sim_cmd);
      ScenarioSpec spec = ScenarioSpec::defaults(design_from_string(sim_design));
      spec.rho = sim_rho;
      spec.delta = sim_delta;
      if (sim_d > 0) spec.d = sim_d;
      if (sim_n > 0) spec.n = sim_n;
      if (!sim_phi.empty()) spec.phi_kind = phi_kind_from_string(sim_phi);
      if (sim_width >= 0.0) spec.censor_width = sim_width;
      spec.seed = g.seed;
      spec.validate();
      MonteCarloOptions opts;
      opts.replicates = sim_replicates;
      opts.threads = threads;
      const MonteCarloResult res = run_monte_carlo(spec, default_models(spec.design), opts);
      res.write_table_csv(out_dir / "table.csv");
      res.write_replicates_csv(out_dir / "replicates.csv");
      man.output(out_dir / "table.csv");
      man.output(out_dir / "replicates.csv");
      man["mean_censoring"] = res.mean_censoring;
      man.write(out_dir);
      if (g.verbosity >= 1) {
        std::cout << "design " << to_string(spec.design) << ", " << res.replicates << " replicates, censoring "
                  << res.mean_censoring << '\n';
        for (const auto& row : res.table) {
          std::cout << row.model;
          for (const auto& m : row.metrics) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "  %s %.0f(%.0f)", m.name.c_str(), 1000 * m.mean, 1000 * m.se);
            std::cout << buf;
          }
          if (row.failed > 0) std::cout << "  failed " << row.failed;
          std::cout << '\n';
        }
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "plaft: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kOk;
}
