#pragma once

// Text formats: CSV tables, INI-style configs, JSON fit results.

#include <Eigen/Dense>

#include <json.hpp>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "chgp/design.hpp"
#include "chgp/errors.hpp"
#include "chgp/estimate.hpp"
#include "chgp/gp.hpp"
#include "chgp/kernels.hpp"

namespace chgp::io {

using json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.1.0";

/// 17 significant digits; round-trips every finite double.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

/// Strict finite-number parse of the whole string.
inline std::optional<double> parse_double(const std::string& s) {
  const std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  const char* first = t.data();
  if (*first == '+') ++first;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  return out;
}

// ---------------------------------------------------------------------------
// CSV.
// ---------------------------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<int> line_numbers;  // source line of each row

  Eigen::Index n_rows() const { return static_cast<Eigen::Index>(rows.size()); }
  Eigen::Index n_cols() const { return static_cast<Eigen::Index>(header.size()); }
};

/// Header line then numeric rows; blank lines are skipped. Errors name the line.
inline CsvTable read_csv(std::istream& in, const std::string& name) {
  CsvTable t;
  std::string line;
  int line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split(line, ',');
    if (!have_header) {
      for (const auto& c : cells) {
        if (c.empty()) throw InputError(name + ":" + std::to_string(line_no) + ": empty column name in header");
      }
      t.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw InputError(name + ":" + std::to_string(line_no) + ": expected " + std::to_string(t.header.size()) +
                       " columns, found " + std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const auto v = parse_double(cells[k]);
      if (!v) {
        throw InputError(name + ":" + std::to_string(line_no) + ": non-numeric value '" + cells[k] +
                         "' in column '" + t.header[k] + "'");
      }
      row.push_back(*v);
    }
    t.rows.push_back(std::move(row));
    t.line_numbers.push_back(line_no);
  }
  if (!have_header) throw InputError(name + ": empty file (no header)");
  return t;
}

inline CsvTable read_csv_file(const std::string& path) {
  auto in = open_in(path);
  return read_csv(in, path);
}

inline void write_row(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (k) out << ',';
    out << cells[k];
  }
  out << '\n';
}

/// Commas and line breaks are not allowed inside cells.
inline std::string cell(std::string s) {
  for (char& ch : s) {
    if (ch == ',') ch = ';';
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  return s;
}

inline void write_matrix(std::ostream& out, const std::vector<std::string>& header, const Eigen::MatrixXd& m) {
  if (static_cast<Eigen::Index>(header.size()) != m.cols()) throw InputError("write_matrix: header/column mismatch");
  write_row(out, header);
  std::vector<std::string> cells(header.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) cells[static_cast<std::size_t>(k)] = fmt(m(i, k));
    write_row(out, cells);
  }
}

inline std::vector<std::string> coordinate_names(Eigen::Index d, Metric metric) {
  if (metric != Metric::euclidean) return {"lon", "lat"};
  std::vector<std::string> out;
  for (Eigen::Index k = 0; k < d; ++k) out.push_back("x" + std::to_string(k + 1));
  return out;
}

namespace detail {

inline Eigen::Index check_coordinate_header(const CsvTable& t, Eigen::Index n_coords, Metric metric,
                                            const std::string& name) {
  const auto expect = coordinate_names(n_coords, metric);
  for (Eigen::Index k = 0; k < n_coords; ++k) {
    if (t.header[static_cast<std::size_t>(k)] != expect[static_cast<std::size_t>(k)]) {
      throw InputError(name + ":1: column " + std::to_string(k + 1) + " should be '" +
                       expect[static_cast<std::size_t>(k)] + "', found '" + t.header[static_cast<std::size_t>(k)] +
                       "'");
    }
  }
  return n_coords;
}

inline Locations locations_from_columns(const CsvTable& t, Eigen::Index d, Metric metric, double radius) {
  Locations l;
  l.metric = metric;
  l.radius = radius;
  l.coords.resize(t.n_rows(), d);
  for (Eigen::Index i = 0; i < t.n_rows(); ++i) {
    for (Eigen::Index k = 0; k < d; ++k) l.coords(i, k) = t.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
  }
  return l;
}

}  // namespace detail

/// Data schema: x1[,x2[,x3]],z (Euclidean) or lon,lat,z (spherical metrics).
inline Dataset dataset_from_csv(const CsvTable& t, const std::string& name, Metric metric = Metric::euclidean,
                                double radius = kEarthRadiusKm) {
  const Eigen::Index d = t.n_cols() - 1;
  const bool spherical = metric != Metric::euclidean;
  if (d < 1 || d > 3 || (spherical && d != 2) || t.header.back() != "z") {
    throw InputError(name + ":1: data header must be " +
                     std::string(spherical ? "lon,lat,z" : "x1[,x2[,x3]],z"));
  }
  detail::check_coordinate_header(t, d, metric, name);
  if (t.n_rows() < 1) throw InputError(name + ": no data rows");
  Dataset data;
  data.locs = detail::locations_from_columns(t, d, metric, radius);
  data.z.resize(t.n_rows());
  for (Eigen::Index i = 0; i < t.n_rows(); ++i) data.z(i) = t.rows[static_cast<std::size_t>(i)].back();
  validate(data);
  return data;
}

/// Target schema: the data schema without z. A trailing z column is accepted and ignored.
inline Locations locations_from_csv(const CsvTable& t, const std::string& name, Eigen::Index d,
                                    Metric metric = Metric::euclidean, double radius = kEarthRadiusKm) {
  const Eigen::Index cols = t.n_cols();
  if (!(cols == d || (cols == d + 1 && t.header.back() == "z"))) {
    const auto names = coordinate_names(d, metric);
    std::string expect;
    for (const auto& n : names) expect += (expect.empty() ? "" : ",") + n;
    throw InputError(name + ":1: target header must be " + expect);
  }
  detail::check_coordinate_header(t, d, metric, name);
  if (t.n_rows() < 1) throw InputError(name + ": no target rows");
  Locations l = detail::locations_from_columns(t, d, metric, radius);
  validate(l);
  return l;
}

// ---------------------------------------------------------------------------
// INI-style configuration.
// ---------------------------------------------------------------------------

/// `[section]` headers and `key = value` lines; `#` and `;` start comments.
/// Every key must be read by the consumer: finish() rejects leftovers.
class Config {
 public:
  struct Entry {
    std::string value;
    int line = 0;
    bool used = false;
  };

  static Config parse(std::istream& in, const std::string& name) {
    Config c;
    c.name_ = name;
    std::string section;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash = line.find_first_of("#;");
      std::string s = trim(hash == std::string::npos ? line : line.substr(0, hash));
      if (s.empty()) continue;
      if (s.front() == '[') {
        if (s.back() != ']' || s.size() < 3) c.fail(line_no, "malformed section header");
        section = trim(s.substr(1, s.size() - 2));
        c.sections_.emplace(section, std::map<std::string, Entry>{});
        continue;
      }
      const auto eq = s.find('=');
      if (eq == std::string::npos) c.fail(line_no, "expected 'key = value'");
      const std::string key = trim(s.substr(0, eq));
      if (key.empty()) c.fail(line_no, "empty key");
      auto& sec = c.sections_[section];
      if (sec.count(key)) c.fail(line_no, "duplicate key '" + qualified(section, key) + "'");
      sec[key] = Entry{trim(s.substr(eq + 1)), line_no, false};
    }
    return c;
  }

  static Config load(const std::string& path) {
    auto in = open_in(path);
    return parse(in, path);
  }

  static Config from_string(const std::string& text, const std::string& name = "<config>") {
    std::istringstream in(text);
    return parse(in, name);
  }

  const std::string& name() const { return name_; }
  bool has_section(const std::string& section) const { return sections_.count(section) > 0; }
  bool has(const std::string& section, const std::string& key) const {
    auto it = sections_.find(section);
    return it != sections_.end() && it->second.count(key) > 0;
  }

  std::vector<std::string> keys(const std::string& section) const {
    std::vector<std::string> out;
    if (auto it = sections_.find(section); it != sections_.end()) {
      for (const auto& [k, e] : it->second) out.push_back(k);
    }
    return out;
  }

  std::optional<std::string> get(const std::string& section, const std::string& key) {
    auto* e = find(section, key);
    if (!e) return std::nullopt;
    e->used = true;
    return e->value;
  }

  std::string get_string(const std::string& section, const std::string& key) {
    auto v = get(section, key);
    if (!v) throw InputError(name_ + ": missing required key '" + qualified(section, key) + "'");
    return *v;
  }
  std::string get_string(const std::string& section, const std::string& key, const std::string& def) {
    return get(section, key).value_or(def);
  }

  double get_double(const std::string& section, const std::string& key) {
    get_string(section, key);
    return number(section, key);
  }
  double get_double(const std::string& section, const std::string& key, double def) {
    return get(section, key) ? number(section, key) : def;
  }

  long long get_int(const std::string& section, const std::string& key, long long def) {
    if (!get(section, key)) return def;
    return integer(section, key);
  }
  long long get_int(const std::string& section, const std::string& key) {
    get_string(section, key);
    return integer(section, key);
  }

  bool get_bool(const std::string& section, const std::string& key, bool def) {
    auto v = get(section, key);
    if (!v) return def;
    if (*v == "true" || *v == "yes" || *v == "1") return true;
    if (*v == "false" || *v == "no" || *v == "0") return false;
    fail(find(section, key)->line, "key '" + qualified(section, key) + "' expects true or false");
  }

  std::vector<double> get_doubles(const std::string& section, const std::string& key) {
    const std::string raw = get_string(section, key);
    std::vector<double> out;
    for (const auto& part : split(raw, ',')) {
      auto v = parse_double(part);
      if (!v) fail(find(section, key)->line, "key '" + qualified(section, key) + "' expects a list of numbers");
      out.push_back(*v);
    }
    return out;
  }
  std::vector<double> get_doubles(const std::string& section, const std::string& key,
                                  const std::vector<double>& def) {
    return has(section, key) ? get_doubles(section, key) : def;
  }

  std::vector<int> get_ints(const std::string& section, const std::string& key, const std::vector<int>& def) {
    if (!has(section, key)) return def;
    std::vector<int> out;
    for (double v : get_doubles(section, key)) {
      if (v != std::floor(v) || std::abs(v) > 1e9) {
        fail(find(section, key)->line, "key '" + qualified(section, key) + "' expects integers");
      }
      out.push_back(static_cast<int>(v));
    }
    return out;
  }

  std::vector<std::string> get_strings(const std::string& section, const std::string& key,
                                       const std::vector<std::string>& def) {
    auto v = get(section, key);
    if (!v) return def;
    auto out = split(*v, ',');
    for (const auto& s : out) {
      if (s.empty()) fail(find(section, key)->line, "key '" + qualified(section, key) + "' has an empty item");
    }
    return out;
  }

  /// Throws on the first key (in file order) that nothing consumed.
  void finish() const {
    const Entry* worst = nullptr;
    std::string which;
    for (const auto& [sec, entries] : sections_) {
      for (const auto& [key, e] : entries) {
        if (!e.used && (!worst || e.line < worst->line)) {
          worst = &e;
          which = qualified(sec, key);
        }
      }
    }
    if (worst) fail(worst->line, "unknown key '" + which + "'");
  }

  [[noreturn]] void fail(int line, const std::string& msg) const {
    throw InputError(name_ + ":" + std::to_string(line) + ": " + msg);
  }

 private:
  static std::string qualified(const std::string& section, const std::string& key) {
    return section.empty() ? key : section + "." + key;
  }

  Entry* find(const std::string& section, const std::string& key) {
    auto it = sections_.find(section);
    if (it == sections_.end()) return nullptr;
    auto jt = it->second.find(key);
    return jt == it->second.end() ? nullptr : &jt->second;
  }

  double number(const std::string& section, const std::string& key) {
    auto* e = find(section, key);
    auto v = parse_double(e->value);
    if (!v) fail(e->line, "key '" + qualified(section, key) + "' expects a number, got '" + e->value + "'");
    return *v;
  }

  long long integer(const std::string& section, const std::string& key) {
    auto* e = find(section, key);
    long long v = 0;
    const auto& s = e->value;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      fail(e->line, "key '" + qualified(section, key) + "' expects an integer, got '" + s + "'");
    }
    return v;
  }

  std::string name_;
  std::map<std::string, std::map<std::string, Entry>> sections_;
};

/// Reads one isotropic kernel from `section` (family = matern | ch | gc). The
/// scale key (phi or beta) may be replaced by effective_range.
inline IsoSpec iso_from_config(Config& c, const std::string& section, double default_sigma2) {
  const std::string family = c.get_string(section, "family");
  const bool by_range = c.has(section, "effective_range");
  auto scale = [&](const char* key) { return by_range ? 1.0 : c.get_double(section, key); };
  IsoSpec s;
  if (family == "matern") {
    s = MaternParams{c.get_double(section, "nu"), scale("phi"), c.get_double(section, "sigma2", default_sigma2)};
  } else if (family == "ch") {
    s = CHParams{c.get_double(section, "nu"), c.get_double(section, "alpha"), scale("beta"),
                 c.get_double(section, "sigma2", default_sigma2)};
  } else if (family == "gc") {
    s = GCParams{c.get_double(section, "delta"), c.get_double(section, "lambda"), scale("phi"),
                 c.get_double(section, "sigma2", default_sigma2)};
  } else {
    throw InputError(c.name() + ": [" + section + "] family must be matern, ch, gc or tensor (got '" + family +
                     "')");
  }
  validate(s);
  if (by_range) s = calibrate_effective_range(s, c.get_double(section, "effective_range"));
  return s;
}

/// `[kernel]` with family = matern | ch | gc, or family = tensor with
/// components = k and sections [kernel.0] ... [kernel.k-1].
inline KernelSpec kernel_from_config(Config& c, const std::string& section = "kernel") {
  if (!c.has_section(section)) throw InputError(c.name() + ": missing [" + section + "] section");
  if (c.has(section, "family") && *c.get(section, "family") == "tensor") {
    TensorParams t;
    t.sigma2 = c.get_double(section, "sigma2", 1.0);
    const long long k = c.get_int(section, "components");
    if (k < 1 || k > 3) throw InputError(c.name() + ": tensor components must be 1, 2 or 3");
    for (long long i = 0; i < k; ++i) t.components.push_back(iso_from_config(c, section + "." + std::to_string(i), 1.0));
    validate(KernelSpec{t});
    return t;
  }
  const IsoSpec s = iso_from_config(c, section, 1.0);
  validate(s);
  return to_kernel(s);
}

/// `[model]` mean and nugget around the kernel read by kernel_from_config.
inline GPModel model_from_config(Config& c) {
  GPModel m;
  m.kernel = kernel_from_config(c);
  m.mean_b = c.get_double("model", "mean", 0.0);
  m.nugget_tau2 = c.get_double("model", "nugget", 0.0);
  validate(m);
  return m;
}

inline MeanMode mean_mode_from_string(const std::string& s) {
  if (s == "known") return MeanMode::known;
  if (s == "gls") return MeanMode::gls;
  throw InputError("unknown mean mode '" + s + "' (expected known or gls)");
}

/// `[fit]` keys: objective, fixed, fit_nugget, mean, allow_small_alpha, n_starts,
/// max_iters, x_tol, f_tol and bounds.<param> = lo, hi.
inline FitConfig fit_config_from(Config& c, const std::string& section = "fit") {
  FitConfig f;
  f.objective = objective_from_string(c.get_string(section, "objective", "profile_ml"));
  if (c.has(section, "fixed")) {
    const auto names = c.get_strings(section, "fixed", {});
    f.fixed = std::set<std::string>(names.begin(), names.end());
  }
  f.fit_nugget = c.get_bool(section, "fit_nugget", f.fit_nugget);
  f.mean = mean_mode_from_string(c.get_string(section, "mean", "known"));
  f.allow_small_alpha = c.get_bool(section, "allow_small_alpha", f.allow_small_alpha);
  f.n_starts = static_cast<int>(c.get_int(section, "n_starts", f.n_starts));
  f.max_iters = static_cast<int>(c.get_int(section, "max_iters", f.max_iters));
  f.x_tol = c.get_double(section, "x_tol", f.x_tol);
  f.f_tol = c.get_double(section, "f_tol", f.f_tol);
  for (const auto& key : c.keys(section)) {
    if (key.rfind("bounds.", 0) != 0) continue;
    const auto v = c.get_doubles(section, key);
    if (v.size() != 2) throw InputError(c.name() + ": [" + section + "] " + key + " needs 'lo, hi'");
    f.bounds[key.substr(7)] = Interval{v[0], v[1]};
  }
  f.validate();
  return f;
}

// ---------------------------------------------------------------------------
// JSON.
// ---------------------------------------------------------------------------

inline json to_json(const IsoSpec& s) {
  json j;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, MaternParams>) {
          j["family"] = "matern";
          j["nu"] = p.nu;
          j["phi"] = p.phi;
        } else if constexpr (std::is_same_v<T, CHParams>) {
          j["family"] = "ch";
          j["nu"] = p.nu;
          j["alpha"] = p.alpha;
          j["beta"] = p.beta;
        } else {
          j["family"] = "gc";
          j["delta"] = p.delta;
          j["lambda"] = p.lambda;
          j["phi"] = p.phi;
        }
        j["sigma2"] = p.sigma2;
      },
      s);
  return j;
}

inline json to_json(const KernelSpec& s) {
  if (const auto* t = std::get_if<TensorParams>(&s)) {
    json j;
    j["family"] = "tensor";
    j["sigma2"] = t->sigma2;
    j["components"] = json::array();
    for (const auto& c : t->components) j["components"].push_back(to_json(c));
    return j;
  }
  return to_json(to_iso(s));
}

namespace detail {

inline double num(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw InputError(std::string("fit JSON: missing numeric field '") + key + "'");
  }
  return j.at(key).get<double>();
}

}  // namespace detail

inline IsoSpec iso_from_json(const json& j) {
  const std::string family = j.value("family", "");
  if (family == "matern") return MaternParams{detail::num(j, "nu"), detail::num(j, "phi"), detail::num(j, "sigma2")};
  if (family == "ch") {
    return CHParams{detail::num(j, "nu"), detail::num(j, "alpha"), detail::num(j, "beta"), detail::num(j, "sigma2")};
  }
  if (family == "gc") {
    return GCParams{detail::num(j, "delta"), detail::num(j, "lambda"), detail::num(j, "phi"), detail::num(j, "sigma2")};
  }
  throw InputError("fit JSON: unknown kernel family '" + family + "'");
}

inline KernelSpec kernel_from_json(const json& j) {
  if (j.value("family", "") == "tensor") {
    TensorParams t;
    t.sigma2 = detail::num(j, "sigma2");
    for (const auto& c : j.at("components")) t.components.push_back(iso_from_json(c));
    validate(KernelSpec{t});
    return t;
  }
  const IsoSpec s = iso_from_json(j);
  validate(s);
  return to_kernel(s);
}

inline json to_json(const Dataset& d) {
  json j;
  j["metric"] = to_string(d.locs.metric);
  j["radius"] = d.locs.radius;
  j["columns"] = coordinate_names(d.locs.dim(), d.locs.metric);
  j["coords"] = json::array();
  for (Eigen::Index i = 0; i < d.locs.size(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < d.locs.dim(); ++k) row.push_back(d.locs.coords(i, k));
    j["coords"].push_back(std::move(row));
  }
  j["z"] = std::vector<double>(d.z.data(), d.z.data() + d.z.size());
  return j;
}

inline Dataset dataset_from_json(const json& j) {
  Dataset d;
  d.locs.metric = metric_from_string(j.at("metric").get<std::string>());
  d.locs.radius = j.at("radius").get<double>();
  const auto& coords = j.at("coords");
  const auto n = static_cast<Eigen::Index>(coords.size());
  if (n < 1) throw InputError("fit JSON: training data is empty");
  const auto dim = static_cast<Eigen::Index>(coords.at(0).size());
  d.locs.coords.resize(n, dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = coords.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(row.size()) != dim) throw InputError("fit JSON: ragged coordinate rows");
    for (Eigen::Index k = 0; k < dim; ++k) d.locs.coords(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
  }
  const auto z = j.at("z").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(z.size()) != n) throw InputError("fit JSON: z length does not match coordinates");
  d.z = Eigen::Map<const Eigen::VectorXd>(z.data(), n);
  validate(d);
  return d;
}

/// Fit result with the training data embedded so predict needs nothing else.
inline json fit_to_json(const FitResult& r, const Dataset& data, std::uint64_t seed) {
  json j;
  j["format"] = "chgp-fit";
  j["version"] = kVersion;
  j["seed"] = seed;
  j["objective"] = r.objective;
  j["kernel"] = to_json(r.model.kernel);
  j["mean"] = r.model.mean_b;
  j["mean_estimated"] = r.mean_estimated;
  j["nugget"] = r.model.nugget_tau2;
  j["loglik"] = r.loglik;
  if (r.microergodic_hat) {
    j["microergodic"] = *r.microergodic_hat;
    j["microergodic_ci95"] = {r.microergodic_ci95->lo, r.microergodic_ci95->hi};
  }
  j["n_evals"] = r.n_evals;
  j["converged"] = r.converged;
  j["data"] = to_json(data);
  return j;
}

struct FitBundle {
  FitResult fit;
  Dataset data;
};

inline FitBundle fit_from_json(const json& j) {
  if (j.value("format", "") != "chgp-fit") throw InputError("fit JSON: not a chgp fit file");
  FitBundle b;
  b.fit.model.kernel = kernel_from_json(j.at("kernel"));
  b.fit.model.mean_b = detail::num(j, "mean");
  b.fit.model.nugget_tau2 = detail::num(j, "nugget");
  b.fit.objective = j.at("objective").get<std::string>();
  b.fit.mean_estimated = j.at("mean_estimated").get<bool>();
  if (j.at("loglik").is_number()) b.fit.loglik = j.at("loglik").get<double>();
  if (j.contains("microergodic")) {
    b.fit.microergodic_hat = j.at("microergodic").get<double>();
    const auto ci = j.at("microergodic_ci95").get<std::vector<double>>();
    b.fit.microergodic_ci95 = Interval{ci.at(0), ci.at(1)};
  }
  b.fit.n_evals = j.at("n_evals").get<int>();
  b.fit.converged = j.at("converged").get<bool>();
  validate(b.fit.model);
  b.data = dataset_from_json(j.at("data"));
  return b;
}

inline json parse_json_file(const std::string& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

inline void write_json_file(const std::string& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

/// Compact "family(name=value;...)" label for tables.
inline std::string describe(const KernelSpec& s) {
  auto iso = [](const IsoSpec& p) {
    const json j = to_json(p);
    std::string out = j.at("family").get<std::string>() + "(";
    bool first = true;
    for (const auto& [k, v] : j.items()) {
      if (k == "family") continue;
      out += (first ? "" : ";") + k + "=" + fmt(v.get<double>());
      first = false;
    }
    return out + ")";
  };
  if (const auto* t = std::get_if<TensorParams>(&s)) {
    std::string out = "tensor(sigma2=" + fmt(t->sigma2);
    for (const auto& c : t->components) out += ";" + iso(c);
    return out + ")";
  }
  return iso(to_iso(s));
}

}  // namespace chgp::io
