#include "plaft/simgen.hpp"

#include "plaft/error.hpp"
#include "plaft/model.hpp"
#include "plaft/parallel.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <random>

namespace plaft {

std::string_view to_string(Design d) {
  switch (d) {
    case Design::estimation: return "estimation";
    case Design::selection: return "selection";
    case Design::highdim: return "highdim";
  }
  return "?";
}

Design design_from_string(std::string_view s) {
  if (s == "estimation") return Design::estimation;
  if (s == "selection") return Design::selection;
  if (s == "highdim") return Design::highdim;
  throw SpecError("unknown design '" + std::string(s) + "'");
}

std::string_view to_string(PhiKind k) {
  switch (k) {
    case PhiKind::linear_2x: return "linear_2x";
    case PhiKind::quadratic_x2: return "quadratic_x2";
    case PhiKind::quadratic_2x2: return "quadratic_2x2";
    case PhiKind::cubic_hinge: return "cubic_hinge";
  }
  return "?";
}

PhiKind phi_kind_from_string(std::string_view s) {
  if (s == "linear_2x") return PhiKind::linear_2x;
  if (s == "quadratic_x2") return PhiKind::quadratic_x2;
  if (s == "quadratic_2x2") return PhiKind::quadratic_2x2;
  if (s == "cubic_hinge") return PhiKind::cubic_hinge;
  throw SpecError("unknown phi kind '" + std::string(s) + "'");
}

std::string_view to_string(HarnessModel m) {
  switch (m) {
    case HarnessModel::pl_aft: return "pl_aft";
    case HarnessModel::aft: return "aft";
    case HarnessModel::aft_phi: return "aft_phi";
    case HarnessModel::lasso_pl: return "lasso_pl";
    case HarnessModel::lasso_l: return "lasso_l";
    case HarnessModel::oracle: return "oracle";
  }
  return "?";
}

double phi_truth(PhiKind kind, double x) {
  switch (kind) {
    case PhiKind::linear_2x: return 2.0 * x;
    case PhiKind::quadratic_x2: return x * x;
    case PhiKind::quadratic_2x2: return 2.0 * x * x;
    case PhiKind::cubic_hinge:
      return x >= 0.0 ? 0.2 * x + 0.5 * x * x + 0.15 * x * x * x : 0.05 * x;
  }
  return 0.0;
}

ScenarioSpec ScenarioSpec::defaults(Design design) {
  ScenarioSpec s;
  s.design = design;
  switch (design) {
    case Design::estimation:
      s.n = 100;
      s.d = 1;
      s.phi_kind = PhiKind::quadratic_x2;
      s.censor_width = 1.0;
      break;
    case Design::selection:
      s.n = 125;
      s.d = 8;
      s.phi_kind = PhiKind::cubic_hinge;
      s.censor_width = 6.0;
      break;
    case Design::highdim:
      s.n = 100;
      s.d = 100;
      s.phi_kind = PhiKind::cubic_hinge;
      s.censor_width = 0.0;
      s.target_censoring = 0.4;
      break;
  }
  return s;
}

void ScenarioSpec::validate() const {
  if (n < 2) throw SpecError("n must be at least 2");
  if (!(rho >= 0.0 && rho < 1.0)) throw SpecError("rho must lie in [0, 1)");
  if (!std::isfinite(delta)) throw SpecError("delta must be finite");
  if (!std::isfinite(censor_width)) throw SpecError("censor width must be finite");
  if (censor_width <= 0.0 && !(target_censoring > 0.0 && target_censoring < 0.5)) {
    throw SpecError("calibrated censoring target must lie in (0, 0.5)");
  }
  if (test_multiplier < 0) throw SpecError("test multiplier must be >= 0");
  switch (design) {
    case Design::estimation:
      if (d != 1) throw SpecError("estimation design has a single Z (d = 1)");
      if (phi_kind == PhiKind::cubic_hinge) throw SpecError("estimation design uses 2x, x^2 or 2x^2");
      break;
    case Design::selection:
      if (d != 8) throw SpecError("selection design has d = 8");
      if (phi_kind != PhiKind::cubic_hinge) throw SpecError("selection design uses the cubic hinge phi");
      break;
    case Design::highdim:
      if (d < 100) throw SpecError("highdim design needs d >= 100");
      if (phi_kind != PhiKind::cubic_hinge) throw SpecError("highdim design uses the cubic hinge phi");
      break;
  }
}

Eigen::VectorXd ScenarioSpec::true_vartheta() const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
  switch (design) {
    case Design::estimation:
      v(0) = 1.0;
      break;
    case Design::selection:
      v(0) = v(1) = v(5) = delta;
      break;
    case Design::highdim:
      v(0) = v(25) = v(50) = v(75) = delta;
      break;
  }
  return v;
}

std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double calibrate_censor_width(double target) {
  static std::mutex mutex;
  static std::map<double, double> cache;
  std::lock_guard lock(mutex);
  if (auto it = cache.find(target); it != cache.end()) return it->second;
  if (!(target > 0.0 && target < 0.5)) throw SpecError("censoring target must lie in (0, 0.5)");

  // Censoring happens iff eps > U*, independent of the systematic part, so
  // one pilot with common random numbers serves every design.
  constexpr int kPilot = 100000;
  std::mt19937_64 rng(20120917ULL);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  std::vector<double> eps(kPilot), v(kPilot);
  for (int k = 0; k < kPilot; ++k) {
    eps[k] = normal(rng);
    v[k] = unif(rng);
  }
  auto rate = [&](double w) {
    int censored = 0;
    for (int k = 0; k < kPilot; ++k) censored += eps[k] > w * v[k];
    return static_cast<double>(censored) / kPilot;
  };
  double lo = 0.0, hi = 100.0;
  for (int it = 0; it < 100 && hi - lo > 1e-10; ++it) {
    const double mid = 0.5 * (lo + hi);
    (rate(mid) > target ? lo : hi) = mid;
  }
  const double w = 0.5 * (lo + hi);
  cache[target] = w;
  return w;
}

namespace {

struct Sample {
  Eigen::VectorXd log_time;
  EventVector event;
  Eigen::MatrixXd x;
  Eigen::MatrixXd z;
};

Sample draw(const ScenarioSpec& spec, const Eigen::VectorXd& vartheta, double width, Eigen::Index n,
            std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  const Eigen::Index d = spec.d;
  Sample s;
  s.log_time.resize(n);
  s.event.resize(n);
  s.x.resize(n, 1);
  s.z.resize(n, d);
  const double innov = std::sqrt(1.0 - spec.rho * spec.rho);
  for (Eigen::Index i = 0; i < n; ++i) {
    // AR(1) recursion gives corr(Z_j, Z_k) = rho^|j-k| with unit variances.
    s.z(i, 0) = normal(rng);
    for (Eigen::Index k = 1; k < d; ++k) s.z(i, k) = spec.rho * s.z(i, k - 1) + innov * normal(rng);
    double x = 0.0;
    switch (spec.design) {
      case Design::estimation:
        x = 0.25 * s.z(i, 0) + (unif(rng) * 10.0 - 5.0);
        break;
      case Design::selection:
        x = 0.5 * (s.z(i, 0) + s.z(i, 1) + s.z(i, 2)) + (unif(rng) * 2.0 - 1.0);
        break;
      case Design::highdim:
        x = 0.5 * (s.z(i, 9) + s.z(i, 34) + s.z(i, 59)) + (unif(rng) * 2.0 - 1.0);
        break;
    }
    s.x(i, 0) = x;
    const double systematic = phi_truth(spec.phi_kind, x) + s.z.row(i).dot(vartheta);
    const double t = systematic + normal(rng);
    const double c = systematic + width * unif(rng);
    s.log_time(i) = std::min(t, c);
    s.event(i) = t <= c;
  }
  return s;
}

Dataset to_dataset(Sample s) {
  std::vector<std::string> clinical{"X"};
  std::vector<std::string> features;
  for (Eigen::Index k = 0; k < s.z.cols(); ++k) features.push_back("Z" + std::to_string(k + 1));
  return Dataset(std::move(s.log_time), std::move(s.event), std::move(s.x), std::move(s.z), clinical,
                 features);
}

}  // namespace

GeneratedData generate(const ScenarioSpec& spec) {
  spec.validate();
  GeneratedData out;
  out.vartheta = spec.true_vartheta();
  out.phi_kind = spec.phi_kind;
  out.censor_width = spec.censor_width > 0.0 ? spec.censor_width : calibrate_censor_width(spec.target_censoring);
  std::mt19937_64 rng(spec.seed);
  out.train = to_dataset(draw(spec, out.vartheta, out.censor_width, spec.n, rng));
  out.test = to_dataset(draw(spec, out.vartheta, out.censor_width, spec.test_multiplier * spec.n, rng));
  return out;
}

std::vector<ModelVariant> default_models(Design design) {
  switch (design) {
    case Design::estimation:
      return {{"PL-AFT(r=2)", HarnessModel::pl_aft, 2, SolverMethod::exact_l1},
              {"PL-AFT(r=4)", HarnessModel::pl_aft, 4, SolverMethod::exact_l1},
              {"AFT", HarnessModel::aft, 0, SolverMethod::exact_l1},
              {"AFT-phi", HarnessModel::aft_phi, 0, SolverMethod::exact_l1}};
    case Design::selection:
      return {{"Lasso-PL", HarnessModel::lasso_pl, 6, SolverMethod::exact_l1},
              {"Lasso-L", HarnessModel::lasso_l, 0, SolverMethod::exact_l1},
              {"AFT", HarnessModel::aft, 0, SolverMethod::exact_l1},
              {"Oracle", HarnessModel::oracle, 6, SolverMethod::exact_l1}};
    case Design::highdim:
      return {{"Lasso-PL", HarnessModel::lasso_pl, 6, SolverMethod::smoothed},
              {"Lasso-L", HarnessModel::lasso_l, 0, SolverMethod::smoothed}};
  }
  return {};
}

FitResult fit_harness_model(const GeneratedData& data, const ModelVariant& model,
                            const MonteCarloOptions& options) {
  ModelSpec spec;
  spec.solver.method = model.method;
  spec.knots = model.knots;
  std::vector<double> gammas{0.0}, lambdas{0.0};
  Dataset ds = data.train;
  switch (model.kind) {
    case HarnessModel::pl_aft:
      spec.nonlinear_covariates = {0};
      gammas = options.gamma_grid;
      break;
    case HarnessModel::aft:
      spec.linear_clinical = {0};
      break;
    case HarnessModel::aft_phi: {
      Eigen::VectorXd shifted = ds.log_time();
      for (Eigen::Index i = 0; i < ds.n(); ++i) shifted(i) -= data.phi(ds.clinical()(i, 0));
      ds = ds.with_log_time(std::move(shifted));
      break;
    }
    case HarnessModel::lasso_pl:
      spec.nonlinear_covariates = {0};
      gammas = options.gamma_grid;
      lambdas = options.lambda_grid;
      break;
    case HarnessModel::lasso_l:
      spec.linear_clinical = {0};
      lambdas = options.lambda_grid;
      break;
    case HarnessModel::oracle: {
      spec.nonlinear_covariates = {0};
      spec.lambda_weights = Eigen::VectorXd::Zero(data.vartheta.size());
      for (Eigen::Index j = 0; j < data.vartheta.size(); ++j) {
        if (data.vartheta(j) == 0.0) spec.lambda_weights(j) = std::numeric_limits<double>::infinity();
      }
      gammas = options.gamma_grid;
      break;
    }
  }
  if (model.knots == 0 && !spec.nonlinear_covariates.empty()) gammas = {0.0};
  if (gammas.size() * lambdas.size() == 1) {
    spec.gamma = gammas.front();
    spec.lambda = lambdas.front();
    return fit(ds, spec);
  }
  TuningGrid grid;
  grid.gamma_values = gammas;
  grid.lambda_values = lambdas;
  return *tune_gcv(ds, spec, grid, 1).chosen_fit;
}

ReplicateOutcome evaluate_harness_fit(const GeneratedData& data, const ModelVariant& model,
                                      const FitResult& fr) {
  ReplicateOutcome out;
  out.ok = true;
  out.gamma = fr.gamma;
  out.lambda = fr.lambda;
  out.converged = fr.converged;
  const Dataset& test = data.test;
  const Eigen::VectorXd raw = fr.vartheta_raw();
  out.vartheta_hat = raw.tail(fr.d);

  // Structural predictions on the raw scale, anchored like the truth.
  Eigen::VectorXd phi_est(test.n()), phi_true(test.n());
  for (Eigen::Index i = 0; i < test.n(); ++i) {
    const double x = test.clinical()(i, 0);
    phi_true(i) = data.phi(x);
    double v = 0.0;
    if (model.kind == HarnessModel::aft_phi) {
      v = phi_true(i);
    } else if (!fr.spec.nonlinear_covariates.empty()) {
      v = phi_hat(fr, 0, x);
    } else if (!fr.spec.linear_clinical.empty()) {
      v = raw(0) * x;
    }
    phi_est(i) = v;
  }
  MetricsReport& m = out.metrics;
  if (test.n() > 0) {
    const Eigen::VectorXd scores = phi_est + test.features() * out.vartheta_hat;
    const Concordance c = c_statistic(test.log_time(), test.event(), scores);
    m.comparable_pairs = c.comparable;
    if (c.defined()) m.c_statistic = c.value;
    const auto pe = mspe(phi_est, out.vartheta_hat, test.features(), TruthValues{phi_true, data.vartheta});
    m.mspe1 = pe.mspe1;
    m.mspe2 = pe.mspe2;
  }
  m.sse = sse(out.vartheta_hat, data.vartheta);
  const auto rates = selection_rates(out.vartheta_hat, data.vartheta);
  m.p_c = rates.p_c;
  m.p_i = rates.p_i;
  return out;
}

const MetricSummary* AggregateRow::find(std::string_view name) const {
  for (const auto& m : metrics) {
    if (m.name == name) return &m;
  }
  return nullptr;
}

namespace {

MetricSummary summarize(std::string name, const std::vector<double>& values) {
  MetricSummary s;
  s.name = std::move(name);
  s.count = static_cast<int>(values.size());
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / s.count;
  if (s.count > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.se = std::sqrt(ss / (s.count - 1) / s.count);
  }
  return s;
}

AggregateRow aggregate(const ModelVariant& model, std::size_t index, const std::vector<ReplicateOutcome>& outcomes,
                       const GeneratedData& any, Design design) {
  AggregateRow row;
  row.model = model.name;
  std::map<std::string, std::vector<double>> values;
  std::vector<double> estimates;
  for (const auto& o : outcomes) {
    if (o.model != index) continue;
    if (!o.ok) {
      ++row.failed;
      continue;
    }
    const auto& m = o.metrics;
    if (design == Design::estimation) {
      const double est = o.vartheta_hat(0);
      estimates.push_back(est);
      values["bias"].push_back(est - any.vartheta(0));
      values["mse"].push_back((est - any.vartheta(0)) * (est - any.vartheta(0)));
    }
    if (m.sse) values["sse"].push_back(*m.sse);
    if (m.p_c) values["p_c"].push_back(*m.p_c);
    if (m.p_i) values["p_i"].push_back(*m.p_i);
    if (m.mspe1) values["mspe1"].push_back(*m.mspe1);
    if (m.mspe2) values["mspe2"].push_back(*m.mspe2);
    if (m.c_statistic) values["c"].push_back(*m.c_statistic);
  }
  std::vector<std::string> order;
  if (design == Design::estimation) {
    order = {"bias", "sd", "mse", "mspe1", "mspe2", "c"};
  } else if (design == Design::selection) {
    order = {"sse", "p_c", "p_i", "mspe1", "mspe2", "c"};
  } else {
    order = {"mspe1", "mspe2", "c", "sse", "p_c", "p_i"};
  }
  for (const auto& name : order) {
    if (name == "sd") {
      MetricSummary s = summarize("sd", {});
      const MetricSummary e = summarize("est", estimates);
      s.count = e.count;
      s.mean = e.se * std::sqrt(static_cast<double>(e.count));
      s.se = std::numeric_limits<double>::quiet_NaN();
      row.metrics.push_back(s);
      continue;
    }
    row.metrics.push_back(summarize(name, values[name]));
  }
  return row;
}

std::string num(double v) {
  if (std::isnan(v)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

MonteCarloResult run_monte_carlo(const ScenarioSpec& spec, const std::vector<ModelVariant>& models,
                                 const MonteCarloOptions& options) {
  spec.validate();
  if (options.replicates < 1) throw SpecError("need at least one replicate");
  if (models.empty()) throw SpecError("no models to evaluate");
  MonteCarloResult result;
  result.spec = spec;
  result.models = models;
  result.replicates = options.replicates;
  const auto R = static_cast<std::size_t>(options.replicates);
  const std::size_t M = models.size();
  result.outcomes.resize(R * M);
  std::vector<double> censoring(R, 0.0);
  GeneratedData first;

  parallel_for(R, options.threads, [&](std::size_t r) {
    ScenarioSpec rs = spec;
    rs.seed = split_seed(spec.seed, r);
    const GeneratedData data = generate(rs);
    censoring[r] = 1.0 - static_cast<double>(data.train.n_events()) / static_cast<double>(data.train.n());
    if (r == 0) first = data;
    for (std::size_t m = 0; m < M; ++m) {
      ReplicateOutcome o;
      try {
        o = evaluate_harness_fit(data, models[m], fit_harness_model(data, models[m], options));
      } catch (const Error& e) {
        o.ok = false;
        o.error = e.what();
      }
      o.replicate = static_cast<int>(r);
      o.model = m;
      o.censoring = censoring[r];
      result.outcomes[r * M + m] = std::move(o);
    }
  });
  double total = 0.0;
  for (double c : censoring) total += c;
  result.mean_censoring = total / static_cast<double>(R);
  for (std::size_t m = 0; m < M; ++m) {
    result.table.push_back(aggregate(models[m], m, result.outcomes, first, spec.design));
  }
  return result;
}

void MonteCarloResult::write_table_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "# design=" << to_string(spec.design) << " n=" << spec.n << " d=" << spec.d << " rho=" << spec.rho
      << " delta=" << spec.delta << " phi=" << to_string(spec.phi_kind) << " replicates=" << replicates
      << " seed=" << spec.seed << " censoring=" << num(mean_censoring) << "\n";
  out << "# metric values are multiplied by 1000\n";
  out << "model,failed";
  if (!table.empty()) {
    for (const auto& m : table.front().metrics) out << ',' << m.name << ',' << m.name << "_se";
  }
  out << '\n';
  for (const auto& row : table) {
    out << row.model << ',' << row.failed;
    for (const auto& m : row.metrics) {
      if (m.count == 0) {
        out << ",NA,NA";
      } else {
        out << ',' << num(1000.0 * m.mean) << ',' << num(1000.0 * m.se);
      }
    }
    out << '\n';
  }
}

void MonteCarloResult::write_replicates_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "replicate,model,ok,censoring,gamma,lambda,converged," << MetricsReport::csv_header() << ",vartheta_hat,error\n";
  for (const auto& o : outcomes) {
    out << o.replicate << ',' << models[o.model].name << ',' << (o.ok ? 1 : 0) << ',' << num(o.censoring) << ','
        << num(o.gamma) << ',' << num(o.lambda) << ',' << (o.converged ? 1 : 0) << ',' << o.metrics.csv_row() << ',';
    for (Eigen::Index j = 0; j < o.vartheta_hat.size(); ++j) out << (j ? " " : "") << num(o.vartheta_hat(j));
    out << ',' << '"' << o.error << '"' << '\n';
  }
}

}  // namespace plaft
