#include "plaft/data.hpp"

#include "plaft/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>
#include <unordered_map>

namespace plaft {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  std::string out(s.substr(b, e - b + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') {
    out = out.substr(1, out.size() - 2);
  }
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
      current.push_back(c);
    } else if (c == ',' && !quoted) {
      fields.push_back(trim(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(trim(current));
  return fields;
}

std::optional<double> parse_real(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double value = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Dataset::Dataset(Eigen::VectorXd log_time, EventVector event, Eigen::MatrixXd clinical,
                 Eigen::MatrixXd features, std::vector<std::string> clinical_names,
                 std::vector<std::string> feature_names)
    : log_time_(std::move(log_time)),
      event_(std::move(event)),
      clinical_(std::move(clinical)),
      features_(std::move(features)),
      clinical_names_(std::move(clinical_names)),
      feature_names_(std::move(feature_names)) {
  const Eigen::Index n = log_time_.size();
  if (event_.size() != n || clinical_.rows() != n || features_.rows() != n) {
    throw DimensionError("dataset blocks disagree on the number of subjects");
  }
  if (!log_time_.allFinite()) throw DegenerateDataError("log_time must be finite");
  if (!clinical_.allFinite() || !features_.allFinite()) {
    throw DegenerateDataError("covariates must be finite");
  }
  if (!clinical_names_.empty() && static_cast<Eigen::Index>(clinical_names_.size()) != q()) {
    throw DimensionError("clinical_names length differs from q");
  }
  if (!feature_names_.empty() && static_cast<Eigen::Index>(feature_names_.size()) != d()) {
    throw DimensionError("feature_names length differs from d");
  }
}

Dataset Dataset::from_observations(const std::vector<CensoredObservation>& obs) {
  const auto n = static_cast<Eigen::Index>(obs.size());
  const Eigen::Index q = n > 0 ? obs.front().clinical.size() : 0;
  const Eigen::Index d = n > 0 ? obs.front().features.size() : 0;
  Eigen::VectorXd t(n);
  EventVector ev(n);
  Eigen::MatrixXd x(n, q), z(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& o = obs[static_cast<std::size_t>(i)];
    if (o.clinical.size() != q || o.features.size() != d) {
      throw DimensionError("observation " + std::to_string(i) + " has inconsistent q or d");
    }
    t(i) = o.log_time;
    ev(i) = o.event;
    x.row(i) = o.clinical.transpose();
    z.row(i) = o.features.transpose();
  }
  return Dataset(std::move(t), std::move(ev), std::move(x), std::move(z));
}

CensoredObservation Dataset::observation(Eigen::Index i) const {
  return {log_time_(i), event_(i), clinical_.row(i).transpose(), features_.row(i).transpose()};
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& rows) const {
  const auto m = static_cast<Eigen::Index>(rows.size());
  Eigen::VectorXd t(m);
  EventVector ev(m);
  Eigen::MatrixXd x(m, q()), z(m, d());
  for (Eigen::Index k = 0; k < m; ++k) {
    const Eigen::Index i = rows[static_cast<std::size_t>(k)];
    t(k) = log_time_(i);
    ev(k) = event_(i);
    x.row(k) = clinical_.row(i);
    z.row(k) = features_.row(i);
  }
  return Dataset(std::move(t), std::move(ev), std::move(x), std::move(z), clinical_names_,
                 feature_names_);
}

Dataset Dataset::with_log_time(Eigen::VectorXd log_time) const {
  return Dataset(std::move(log_time), event_, clinical_, features_, clinical_names_,
                 feature_names_);
}

Dataset Dataset::with_features(Eigen::MatrixXd features) const {
  return Dataset(log_time_, event_, clinical_, std::move(features), clinical_names_,
                 feature_names_);
}

void Dataset::require_events(Eigen::Index minimum) const {
  if (n_events() < minimum) {
    throw DegenerateDataError("need at least " + std::to_string(minimum) +
                              " observed events, found " + std::to_string(n_events()));
  }
}

bool Dataset::operator==(const Dataset& other) const {
  return log_time_ == other.log_time_ && event_ == other.event_ &&
         clinical_ == other.clinical_ && features_ == other.features_ &&
         clinical_names_ == other.clinical_names_ && feature_names_ == other.feature_names_;
}

std::vector<std::size_t> resolve_columns(const std::vector<std::string>& header,
                                         const std::vector<std::string>& items) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < header.size(); ++c) index.emplace(header[c], c);

  static const std::regex positional(R"((\d+)(?:-(\d+))?)");
  std::vector<std::size_t> out;
  for (const auto& raw : items) {
    const std::string item = trim(raw);
    if (item.empty()) continue;
    if (auto it = index.find(item); it != index.end()) {
      out.push_back(it->second);
      continue;
    }
    if (auto colon = item.find(':'); colon != std::string::npos) {
      auto a = index.find(item.substr(0, colon));
      auto b = index.find(item.substr(colon + 1));
      if (a == index.end() || b == index.end() || a->second > b->second) {
        throw ParseError("bad column range '" + item + "'");
      }
      for (std::size_t c = a->second; c <= b->second; ++c) out.push_back(c);
      continue;
    }
    std::smatch m;
    if (std::regex_match(item, m, positional)) {
      const std::size_t first = std::stoul(m[1]);
      const std::size_t last = m[2].matched ? std::stoul(m[2]) : first;
      if (first < 1 || last > header.size() || first > last) {
        throw ParseError("column positions '" + item + "' out of range");
      }
      for (std::size_t c = first; c <= last; ++c) out.push_back(c - 1);
      continue;
    }
    throw ParseError("unknown column '" + item + "'");
  }
  return out;
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing header row");
  const auto header = split_csv_line(line);

  auto single = [&](const std::string& name, const char* role) {
    if (name.empty()) throw ParseError(std::string("no ") + role + " column given");
    auto cols = resolve_columns(header, {name});
    if (cols.size() != 1) throw ParseError(std::string(role) + " column must be a single column");
    return cols.front();
  };
  const std::size_t time_c = single(schema.time_col, "time");
  const std::size_t status_c = single(schema.status_col, "status");
  const auto clin_c = resolve_columns(header, schema.clinical_cols);
  const auto feat_c = resolve_columns(header, schema.feature_cols);
  std::optional<std::size_t> id_c;
  if (schema.id_col) id_c = single(*schema.id_col, "id");

  struct Row {
    double log_time;
    bool event;
    std::vector<double> clinical, features;
  };
  std::vector<Row> rows;
  std::vector<std::string> ids;

  long row_no = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row_no;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                           std::to_string(fields.size()),
                       row_no);
    }
    auto real_at = [&](std::size_t c) {
      auto v = parse_real(fields[c]);
      if (!v) throw ParseError("non-numeric or missing value in column '" + header[c] + "'", row_no);
      return *v;
    };
    Row r;
    const double t = real_at(time_c);
    if (schema.time_is_log) {
      r.log_time = t;
    } else {
      if (!(t > 0.0)) throw ParseError("time must be positive", row_no);
      r.log_time = std::log(t);
    }
    const std::string& s = fields[status_c];
    if (s == "1") {
      r.event = true;
    } else if (s == "0") {
      r.event = false;
    } else {
      auto v = parse_real(s);
      if (v && (*v == 0.0 || *v == 1.0)) {
        r.event = *v == 1.0;
      } else {
        throw ParseError("status must be 0 or 1, found '" + s + "'", row_no);
      }
    }
    for (auto c : clin_c) r.clinical.push_back(real_at(c));
    for (auto c : feat_c) r.features.push_back(real_at(c));
    if (id_c) ids.push_back(fields[*id_c]);
    rows.push_back(std::move(r));
  }

  if (id_c) {
    // Average replicate rows per subject, first-appearance order.
    std::vector<Row> merged;
    std::vector<int> counts;
    std::map<std::string, std::size_t> slot;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      auto [it, fresh] = slot.emplace(ids[k], merged.size());
      if (fresh) {
        merged.push_back(rows[k]);
        counts.push_back(1);
        continue;
      }
      Row& m = merged[it->second];
      if (m.log_time != rows[k].log_time || m.event != rows[k].event) {
        throw ParseError("replicates of subject '" + ids[k] + "' disagree on time or status",
                         static_cast<long>(k + 1));
      }
      for (std::size_t c = 0; c < m.clinical.size(); ++c) m.clinical[c] += rows[k].clinical[c];
      for (std::size_t c = 0; c < m.features.size(); ++c) m.features[c] += rows[k].features[c];
      ++counts[it->second];
    }
    for (std::size_t s = 0; s < merged.size(); ++s) {
      for (auto& v : merged[s].clinical) v /= counts[s];
      for (auto& v : merged[s].features) v /= counts[s];
    }
    rows = std::move(merged);
  }

  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::VectorXd t(n);
  EventVector ev(n);
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(clin_c.size()));
  Eigen::MatrixXd z(n, static_cast<Eigen::Index>(feat_c.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Row& r = rows[static_cast<std::size_t>(i)];
    t(i) = r.log_time;
    ev(i) = r.event;
    for (Eigen::Index c = 0; c < x.cols(); ++c) x(i, c) = r.clinical[static_cast<std::size_t>(c)];
    for (Eigen::Index c = 0; c < z.cols(); ++c) z(i, c) = r.features[static_cast<std::size_t>(c)];
  }
  std::vector<std::string> clin_names, feat_names;
  for (auto c : clin_c) clin_names.push_back(header[c]);
  for (auto c : feat_c) feat_names.push_back(header[c]);
  return Dataset(std::move(t), std::move(ev), std::move(x), std::move(z), std::move(clin_names),
                 std::move(feat_names));
}

void write_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  auto name = [](const std::vector<std::string>& names, Eigen::Index j, const char* prefix) {
    return names.empty() ? prefix + std::to_string(j + 1) : names[static_cast<std::size_t>(j)];
  };
  out << "log_time,status";
  for (Eigen::Index j = 0; j < ds.q(); ++j) out << ',' << name(ds.clinical_names(), j, "x");
  for (Eigen::Index j = 0; j < ds.d(); ++j) out << ',' << name(ds.feature_names(), j, "z");
  out << '\n';
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    out << format_real(ds.log_time()(i)) << ',' << (ds.event()(i) ? 1 : 0);
    for (Eigen::Index j = 0; j < ds.q(); ++j) out << ',' << format_real(ds.clinical()(i, j));
    for (Eigen::Index j = 0; j < ds.d(); ++j) out << ',' << format_real(ds.features()(i, j));
    out << '\n';
  }
}

StandardizationRecord StandardizationRecord::identity(Eigen::Index d) {
  return {Eigen::VectorXd::Zero(d), Eigen::VectorXd::Ones(d)};
}

Eigen::MatrixXd StandardizationRecord::apply(const Eigen::Ref<const Eigen::MatrixXd>& z) const {
  if (z.cols() != means.size()) throw DimensionError("feature count differs from record");
  return (z.rowwise() - means.transpose()).array().rowwise() / sds.transpose().array();
}

Eigen::VectorXd StandardizationRecord::apply_row(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  if (z.size() != means.size()) throw DimensionError("feature count differs from record");
  return (z - means).cwiseQuotient(sds);
}

Eigen::MatrixXd StandardizationRecord::invert(const Eigen::Ref<const Eigen::MatrixXd>& z_std) const {
  if (z_std.cols() != means.size()) throw DimensionError("feature count differs from record");
  return (z_std.array().rowwise() * sds.transpose().array()).matrix().rowwise() +
         means.transpose();
}

std::pair<Dataset, StandardizationRecord> standardize_features(const Dataset& ds) {
  const Eigen::Index n = ds.n();
  if (n < 2) throw DegenerateDataError("standardization needs at least two subjects");
  const Eigen::MatrixXd& z = ds.features();
  StandardizationRecord rec;
  rec.means = z.colwise().mean().transpose();
  rec.sds.resize(z.cols());
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    const double ss = (z.col(j).array() - rec.means(j)).square().sum();
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0) || sd <= 1e-14 * std::max(1.0, std::abs(rec.means(j)))) {
      const std::string label =
          ds.feature_names().empty() ? "feature " + std::to_string(j + 1)
                                     : "'" + ds.feature_names()[static_cast<std::size_t>(j)] + "'";
      throw DegenerateDataError("constant feature column " + label);
    }
    rec.sds(j) = sd;
  }
  return {ds.with_features(rec.apply(z)), std::move(rec)};
}

std::uint64_t fingerprint(const Dataset& ds) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t k = 0; k < bytes; ++k) {
      h ^= p[k];
      h *= 1099511628211ULL;
    }
  };
  const Eigen::Index dims[3] = {ds.n(), ds.q(), ds.d()};
  mix(dims, sizeof dims);
  mix(ds.log_time().data(), sizeof(double) * static_cast<std::size_t>(ds.n()));
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    const unsigned char e = ds.event()(i) ? 1 : 0;
    mix(&e, 1);
  }
  mix(ds.clinical().data(), sizeof(double) * static_cast<std::size_t>(ds.clinical().size()));
  mix(ds.features().data(), sizeof(double) * static_cast<std::size_t>(ds.features().size()));
  return h;
}

}  // namespace plaft
