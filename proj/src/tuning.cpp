#include "plaft/tuning.hpp"

#include "plaft/error.hpp"
#include "plaft/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

namespace plaft {

std::string_view to_string(Criterion c) { return c == Criterion::cv ? "cv" : "gcv"; }

std::vector<double> TuningGrid::log_spaced(int count, double lo, double hi) {
  if (count < 1 || !(lo > 0.0) || !(hi >= lo)) throw SpecError("log grid needs count >= 1 and 0 < lo <= hi");
  std::vector<double> out(static_cast<std::size_t>(count));
  const double a = std::log10(lo), b = std::log10(hi);
  for (int k = 0; k < count; ++k) {
    out[static_cast<std::size_t>(k)] = count == 1 ? lo : std::pow(10.0, a + (b - a) * k / (count - 1));
  }
  return out;
}

TuningGrid TuningGrid::standard() {
  TuningGrid g;
  g.gamma_values = log_spaced();
  g.lambda_values = log_spaced();
  return g;
}

void TuningGrid::validate() const {
  if (gamma_values.empty() || lambda_values.empty()) throw SpecError("tuning grids must be nonempty");
  for (const auto* values : {&gamma_values, &lambda_values}) {
    for (double v : *values) {
      if (!std::isfinite(v) || v < 0.0) throw SpecError("grid values must be finite and >= 0");
    }
  }
  if (folds < 2) throw SpecError("cross-validation needs at least 2 folds");
  if (!(gcv_df_fraction > 0.0 && gcv_df_fraction <= 1.0)) throw SpecError("gcv df fraction must lie in (0, 1]");
}

void TuningReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "criterion,gamma,lambda,value,df,valid,chosen\n";
  char buf[64];
  for (std::size_t k = 0; k < records.size(); ++k) {
    const auto& r = records[k];
    out << to_string(criterion);
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g,", r.gamma, r.lambda);
    out << buf;
    if (r.valid) {
      std::snprintf(buf, sizeof buf, "%.17g", r.criterion);
      out << buf;
    } else {
      out << "NA";
    }
    out << ',' << r.df << ',' << (r.valid ? 1 : 0) << ',' << (k == chosen_index ? 1 : 0) << '\n';
  }
}

double gcv_score(const Dataset& ds, const FitResult& fr) {
  const Eigen::Index df = fr.df();
  if (df >= ds.n()) {
    throw SaturationError("GCV undefined: " + std::to_string(df) + " nonzero coefficients with n = " +
                          std::to_string(ds.n()));
  }
  const double shrink = 1.0 - static_cast<double>(df) / static_cast<double>(ds.n());
  return gehan_loss(ds, fr) / (shrink * shrink);
}

std::vector<int> stratified_folds(const EventVector& event, int folds, std::uint64_t seed) {
  if (folds < 2) throw SpecError("need at least 2 folds");
  std::vector<Eigen::Index> events, censored;
  for (Eigen::Index i = 0; i < event.size(); ++i) (event(i) ? events : censored).push_back(i);
  std::mt19937_64 rng(seed);
  std::shuffle(events.begin(), events.end(), rng);
  std::shuffle(censored.begin(), censored.end(), rng);
  std::vector<int> out(static_cast<std::size_t>(event.size()));
  // Censored subjects continue the rotation so fold sizes stay balanced.
  int next = 0;
  for (const auto* group : {&events, &censored}) {
    for (auto i : *group) {
      out[static_cast<std::size_t>(i)] = next;
      next = (next + 1) % folds;
    }
  }
  return out;
}

namespace {

/// Lambda indices from largest to smallest value (ties keep grid order).
std::vector<std::size_t> lambda_path(const std::vector<double>& lambdas) {
  std::vector<std::size_t> order(lambdas.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return lambdas[a] > lambdas[b]; });
  return order;
}

/// Minimum criterion; ties go to the smallest lambda, then the smallest gamma.
std::size_t choose(const std::vector<TuningRecord>& records) {
  std::optional<std::size_t> best;
  for (std::size_t k = 0; k < records.size(); ++k) {
    const auto& r = records[k];
    if (!r.valid) continue;
    if (!best) {
      best = k;
      continue;
    }
    const auto& b = records[*best];
    if (std::tie(r.criterion, r.lambda, r.gamma) < std::tie(b.criterion, b.lambda, b.gamma)) best = k;
  }
  if (!best) throw SaturationError("no grid point has a defined criterion");
  return *best;
}

/// Fits every lambda for one gamma, largest lambda first, each warm-started
/// from the previous solution. `visit(lambda_index, fit)` sees each result.
template <class Visit>
void run_path(const Dataset& ds, ModelSpec spec, double gamma, const std::vector<double>& lambdas,
              Visit&& visit) {
  spec.gamma = gamma;
  std::optional<Eigen::VectorXd> warm;
  for (auto l : lambda_path(lambdas)) {
    spec.lambda = lambdas[l];
    FitResult fr = fit(ds, spec, warm);
    warm = fr.theta();
    // Later fits reuse the knots placed on this data.
    spec.basis = fr.spec.basis;
    visit(l, std::move(fr));
  }
}

void finish(TuningReport& report) {
  report.chosen_index = choose(report.records);
  report.chosen_gamma = report.records[report.chosen_index].gamma;
  report.chosen_lambda = report.records[report.chosen_index].lambda;
}

}  // namespace

TuningReport cross_validate(const Dataset& ds, const ModelSpec& spec, const TuningGrid& grid,
                            unsigned threads) {
  grid.validate();
  ds.require_events(2);
  TuningReport report;
  report.criterion = Criterion::cv;
  report.folds = stratified_folds(ds.event(), grid.folds, grid.seed);

  const auto K = static_cast<std::size_t>(grid.folds);
  std::vector<Dataset> train(K), held(K);
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<Eigen::Index> in, out;
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
      (report.folds[static_cast<std::size_t>(i)] == static_cast<int>(k) ? out : in).push_back(i);
    }
    train[k] = ds.subset(in);
    held[k] = ds.subset(out);
    if (held[k].n_events() < 2 || train[k].n_events() < 2) {
      throw FoldDegeneracyError("fold " + std::to_string(k + 1) + " has " +
                                std::to_string(held[k].n_events()) +
                                " held-out events; at least 2 are needed, try fewer folds");
    }
  }

  const std::size_t G = grid.gamma_values.size(), L = grid.lambda_values.size();
  // Knots come from the full data so every fold fits the same basis.
  ModelSpec base = spec;
  if (base.basis.empty() && !base.nonlinear_covariates.empty()) {
    for (auto idx : spec.nonlinear_covariates) {
      SplineBasisSpec b;
      b.degree = spec.degree;
      if (spec.knots > 0) b.knots = place_knots(ds.clinical().col(idx), spec.knots, spec.knot_ties);
      base.basis.push_back(std::move(b));
    }
  }

  std::vector<std::vector<double>> losses(G * L, std::vector<double>(K, 0.0));
  std::vector<std::vector<Eigen::Index>> dfs(G * L, std::vector<Eigen::Index>(K, 0));
  parallel_for(G * K, threads, [&](std::size_t job) {
    const std::size_t g = job / K, k = job % K;
    run_path(train[k], base, grid.gamma_values[g], grid.lambda_values, [&](std::size_t l, FitResult fr) {
      losses[g * L + l][k] = gehan_loss(held[k], fr);
      dfs[g * L + l][k] = fr.df();
    });
  });

  for (std::size_t g = 0; g < G; ++g) {
    for (std::size_t l = 0; l < L; ++l) {
      TuningRecord r;
      r.gamma = grid.gamma_values[g];
      r.lambda = grid.lambda_values[l];
      r.fold_losses = losses[g * L + l];
      r.criterion = std::accumulate(r.fold_losses.begin(), r.fold_losses.end(), 0.0) / static_cast<double>(K);
      const auto& d = dfs[g * L + l];
      r.df = *std::max_element(d.begin(), d.end());
      report.records.push_back(std::move(r));
    }
  }
  finish(report);
  return report;
}

TuningReport tune_gcv(const Dataset& ds, const ModelSpec& spec, const TuningGrid& grid, unsigned threads) {
  grid.validate();
  ds.require_events(2);
  TuningReport report;
  report.criterion = Criterion::gcv;
  const std::size_t G = grid.gamma_values.size(), L = grid.lambda_values.size();
  report.records.resize(G * L);
  std::vector<std::optional<FitResult>> fits(G * L);

  parallel_for(G, threads, [&](std::size_t g) {
    run_path(ds, spec, grid.gamma_values[g], grid.lambda_values, [&](std::size_t l, FitResult fr) {
      TuningRecord& r = report.records[g * L + l];
      r.gamma = grid.gamma_values[g];
      r.lambda = grid.lambda_values[l];
      r.df = fr.df();
      try {
        r.criterion = gcv_score(ds, fr);
        r.valid = static_cast<double>(r.df) <= grid.gcv_df_fraction * static_cast<double>(ds.n());
      } catch (const SaturationError&) {
        r.valid = false;
      }
      if (!r.valid) r.criterion = std::numeric_limits<double>::quiet_NaN();
      fits[g * L + l] = std::move(fr);
    });
  });
  finish(report);
  report.chosen_fit = std::move(fits[report.chosen_index]);
  return report;
}

}  // namespace plaft
