#include "plaft/error.hpp"
#include "plaft/model.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace plaft {

namespace {

using nlohmann::json;

constexpr int kFormatVersion = 1;

// JSON has no infinity; encode non-finite reals as strings.
json encode(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double decode(const json& j) {
  if (j.is_number()) return j.get<double>();
  const auto s = j.get<std::string>();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  throw ParseError("bad number '" + s + "' in model artifact");
}

json encode(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(encode(v(i)));
  return out;
}

Eigen::VectorXd decode_vector(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = decode(j[i]);
  return v;
}

std::vector<Eigen::Index> decode_indices(const json& j) {
  return j.get<std::vector<Eigen::Index>>();
}

}  // namespace

std::string to_json(const FitResult& fr) {
  const ModelSpec& s = fr.spec;
  json bases = json::array();
  for (const auto& b : s.basis) bases.push_back({{"degree", b.degree}, {"knots", encode(b.knots)}});

  json doc;
  doc["format"] = "plaft-fit";
  doc["version"] = kFormatVersion;
  doc["spec"] = {
      {"nonlinear_covariates", s.nonlinear_covariates},
      {"linear_clinical", s.linear_clinical},
      {"basis", bases},
      {"degree", s.degree},
      {"knots", s.knots},
      {"knot_ties", s.knot_ties == KnotTies::strict ? "strict" : "collapse"},
      {"gamma", encode(s.gamma)},
      {"lambda", encode(s.lambda)},
      {"lambda_weights", encode(s.lambda_weights)},
      {"penalize_clinical", s.penalize_clinical},
      {"penalize_all_beta", s.penalize_all_beta},
      {"use_features", s.use_features},
      {"standardize", s.standardize},
      {"solver",
       {{"method", std::string(to_string(s.solver.method))},
        {"smoothing_eps", s.solver.smoothing_eps},
        {"continuation_factor", s.solver.continuation_factor},
        {"eps_floor", s.solver.eps_floor},
        {"max_iterations", s.solver.max_iterations},
        {"grad_tol", s.solver.grad_tol},
        {"memory_pairs", s.solver.memory_pairs}}},
      {"zeta_multiplier", s.zeta.multiplier},
      {"memory_cap", s.memory_cap},
  };
  doc["beta_hat"] = encode(fr.beta_hat);
  doc["vartheta_hat"] = encode(fr.vartheta_hat);
  doc["gamma"] = encode(fr.gamma);
  doc["lambda"] = encode(fr.lambda);
  doc["objective"] = encode(fr.objective);
  doc["loss"] = encode(fr.loss);
  doc["selected"] = fr.selected;
  doc["standardization"] = {{"means", encode(fr.standardization.means)},
                            {"sds", encode(fr.standardization.sds)}};
  doc["q"] = fr.q;
  doc["d"] = fr.d;
  doc["n_train"] = fr.n_train;
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fr.data_fingerprint));
  doc["data_fingerprint"] = hex;
  doc["method_used"] = std::string(to_string(fr.method_used));
  doc["converged"] = fr.converged;
  doc["iterations"] = fr.iterations;
  return doc.dump(2);
}

FitResult fit_result_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("model artifact is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("format") != "plaft-fit") throw ParseError("not a model artifact");
    if (doc.at("version").get<int>() != kFormatVersion) throw ParseError("unsupported artifact version");
    FitResult fr;
    const json& js = doc.at("spec");
    ModelSpec& s = fr.spec;
    s.nonlinear_covariates = decode_indices(js.at("nonlinear_covariates"));
    s.linear_clinical = decode_indices(js.at("linear_clinical"));
    for (const auto& b : js.at("basis")) {
      SplineBasisSpec spec;
      spec.degree = b.at("degree").get<int>();
      spec.knots = decode_vector(b.at("knots"));
      spec.validate();
      s.basis.push_back(std::move(spec));
    }
    s.degree = js.at("degree").get<int>();
    s.knots = js.at("knots").get<int>();
    s.knot_ties = js.at("knot_ties") == "strict" ? KnotTies::strict : KnotTies::collapse;
    s.gamma = decode(js.at("gamma"));
    s.lambda = decode(js.at("lambda"));
    s.lambda_weights = decode_vector(js.at("lambda_weights"));
    s.penalize_clinical = js.at("penalize_clinical").get<bool>();
    s.penalize_all_beta = js.at("penalize_all_beta").get<bool>();
    s.use_features = js.at("use_features").get<bool>();
    s.standardize = js.at("standardize").get<bool>();
    const json& solver = js.at("solver");
    s.solver.method = solver_method_from_string(solver.at("method").get<std::string>());
    s.solver.smoothing_eps = solver.at("smoothing_eps").get<double>();
    s.solver.continuation_factor = solver.at("continuation_factor").get<double>();
    s.solver.eps_floor = solver.at("eps_floor").get<double>();
    s.solver.max_iterations = solver.at("max_iterations").get<int>();
    s.solver.grad_tol = solver.at("grad_tol").get<double>();
    s.solver.memory_pairs = solver.at("memory_pairs").get<int>();
    s.zeta.multiplier = js.at("zeta_multiplier").get<double>();
    s.memory_cap = js.at("memory_cap").get<std::size_t>();

    fr.beta_hat = decode_vector(doc.at("beta_hat"));
    fr.vartheta_hat = decode_vector(doc.at("vartheta_hat"));
    fr.gamma = decode(doc.at("gamma"));
    fr.lambda = decode(doc.at("lambda"));
    fr.objective = decode(doc.at("objective"));
    fr.loss = decode(doc.at("loss"));
    fr.selected = decode_indices(doc.at("selected"));
    fr.standardization.means = decode_vector(doc.at("standardization").at("means"));
    fr.standardization.sds = decode_vector(doc.at("standardization").at("sds"));
    fr.q = doc.at("q").get<Eigen::Index>();
    fr.d = doc.at("d").get<Eigen::Index>();
    fr.n_train = doc.at("n_train").get<Eigen::Index>();
    if (doc.contains("data_fingerprint")) {
      fr.data_fingerprint = std::stoull(doc.at("data_fingerprint").get<std::string>(), nullptr, 16);
    }
    fr.method_used = solver_method_from_string(doc.at("method_used").get<std::string>());
    fr.converged = doc.at("converged").get<bool>();
    fr.iterations = doc.at("iterations").get<int>();

    s.validate(fr.q, fr.d);
    const auto layout = DesignLayout::make(s.basis, s.linear_count(fr.d));
    if (fr.beta_hat.size() != layout.spline_cols || fr.vartheta_hat.size() != layout.linear_cols ||
        fr.standardization.means.size() != fr.d || fr.standardization.sds.size() != fr.d) {
      throw ParseError("model artifact coefficient lengths are inconsistent");
    }
    return fr;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed model artifact: ") + e.what());
  }
}

void save_fit(const FitResult& fr, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << to_json(fr) << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

FitResult load_fit(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return fit_result_from_json(buf.str());
}

}  // namespace plaft
