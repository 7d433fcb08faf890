#include "llgm/pipeline/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "llgm/errors.hpp"
#include "llgm/pipeline/csv.hpp"

namespace llgm::pipeline {
namespace {

void reject_unknown(const toml::table& t, const std::set<std::string>& known, const std::string& scope) {
  for (auto&& [k, v] : t)
    if (!known.count(std::string(k.str())))
      throw ConfigError("unknown key '" + scope + std::string(k.str()) + "'");
}

double get_double(const toml::table& t, const char* key, double fallback, const std::string& scope) {
  const toml::node* n = t.get(key);
  if (!n) return fallback;
  if (auto v = n->value<double>()) return *v;
  throw ConfigError("'" + scope + key + "' must be a number");
}

int get_int(const toml::table& t, const char* key, int fallback, const std::string& scope) {
  const toml::node* n = t.get(key);
  if (!n) return fallback;
  if (n->is_integer()) return static_cast<int>(*n->value<std::int64_t>());
  throw ConfigError("'" + scope + key + "' must be an integer");
}

std::string get_string(const toml::table& t, const char* key, const std::string& fallback) {
  const toml::node* n = t.get(key);
  if (!n) return fallback;
  if (auto v = n->value<std::string>()) return *v;
  throw ConfigError(std::string("'") + key + "' must be a string");
}

const toml::array* get_array(const toml::table& t, const char* key) {
  const toml::node* n = t.get(key);
  if (!n) return nullptr;
  if (!n->is_array()) throw ConfigError(std::string("'") + key + "' must be an array");
  return n->as_array();
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

std::string toml_number(double v) {
  std::string s = format_double(v);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

}  // namespace

std::string_view to_string(Mode m) { return m == Mode::ar1 ? "ar1" : "spatial"; }

Mode parse_mode(std::string_view text) {
  if (text == "ar1") return Mode::ar1;
  if (text == "spatial") return Mode::spatial;
  throw ConfigError("mode must be 'ar1' or 'spatial', got '" + std::string(text) + "'");
}

std::vector<double> default_levels(Mode mode) {
  if (mode == Mode::ar1) return {-5, -1, 3, 7, 11, 15};
  std::vector<double> out;
  for (int i = 0; i < 6; ++i) out.push_back(-7.5 + 2.5 * i);
  return out;
}

std::vector<double> ExperimentConfig::effective_levels() const {
  return levels.empty() ? default_levels(mode) : levels;
}

std::vector<std::string> ExperimentConfig::effective_variants() const {
  if (!variants.empty()) return variants;
  if (mode == Mode::ar1) return {"point-mass"};
  return {"point-mass", "gh"};
}

void ExperimentConfig::validate() const {
  require(!seeds.empty(), "seeds must not be empty");
  require(workers >= 0, "workers must be >= 0");
  require(!out.empty(), "out must not be empty");
  require(gh_order >= 1 && gh_order <= 10, "gh_order must be in [1, 10]");
  for (double l : levels) require(std::isfinite(l) && std::abs(l) <= 40, "levels must be finite log precisions in [-40, 40]");
  for (const auto& v : variants) require(v == "point-mass" || v == "gh", "variants must be 'point-mass' or 'gh'");
  const auto& a = ar1;
  require(a.regions >= 3 && a.regions <= 100000, "ar1.regions must be in [3, 100000]");
  require(a.length >= 1 && a.length <= 100000, "ar1.length must be in [1, 100000]");
  require(a.tau > 0 && std::isfinite(a.tau), "ar1.tau must be positive");
  require(std::isfinite(a.phi_offset) && std::isfinite(a.phi_amplitude) && std::isfinite(a.phi_periods),
          "ar1 phi schedule must be finite");
  require(std::abs(a.phi_offset) < 1 && std::abs(a.phi_offset + a.phi_amplitude) < 1,
          "ar1 phi schedule must stay inside (-1, 1)");
  require(a.prior_precision > 0, "ar1.prior_precision must be positive");
  require(a.grid.points >= 3 && a.grid.lo < a.grid.hi, "ar1.grid needs lo < hi and at least 3 points");
  const auto& s = spatial;
  require(s.points >= 10 && s.points <= 1000000, "spatial.points must be in [10, 1000000]");
  require(s.regions >= 3 && s.regions * 4 <= s.points, "spatial.regions must be >= 3 with >= 4 points per region");
  require(s.spacing > 0 && s.range_scale > 0 && s.field_sd > 0 && s.nugget_sd > 0,
          "spatial spacing, range_scale, field_sd and nugget_sd must be positive");
  require(s.alpha1 > 0 && s.alpha1 < 1 && s.alpha2 > 0 && s.alpha2 < 1, "spatial alphas must be in (0, 1)");
  require(s.beta_prior_var > 0, "spatial.beta_prior_var must be positive");
  require(s.coarse_points >= 3 && s.grid_points >= 3, "spatial grid sizes must be >= 3");
  require(s.smoothing_range >= 0, "spatial.smoothing_range must be >= 0");
  require(s.kmeans_restarts >= 1, "spatial.kmeans_restarts must be >= 1");
}

ExperimentConfig parse_config(std::string_view toml_text, std::string_view source) {
  toml::table root;
  try {
    root = toml::parse(toml_text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << e;
    throw ConfigError("invalid TOML: " + os.str());
  }
  reject_unknown(root, {"mode", "seeds", "workers", "out", "levels", "gh_order", "variants", "ar1", "spatial"}, "");

  ExperimentConfig c;
  c.mode = parse_mode(get_string(root, "mode", "ar1"));
  if (const auto* arr = get_array(root, "seeds")) {
    c.seeds.clear();
    for (auto&& n : *arr) {
      const auto v = n.value<std::int64_t>();
      if (!n.is_integer() || *v < 0) throw ConfigError("seeds must be non-negative integers");
      c.seeds.push_back(static_cast<std::uint64_t>(*v));
    }
  }
  c.workers = get_int(root, "workers", c.workers, "");
  c.out = get_string(root, "out", c.out);
  c.gh_order = get_int(root, "gh_order", c.gh_order, "");
  if (const auto* arr = get_array(root, "levels")) {
    for (auto&& n : *arr) {
      const auto v = n.value<double>();
      if (!v) throw ConfigError("levels must be numbers");
      c.levels.push_back(*v);
    }
    if (c.levels.empty()) throw ConfigError("levels must not be empty");
  }
  if (const auto* arr = get_array(root, "variants")) {
    for (auto&& n : *arr) {
      const auto v = n.value<std::string>();
      if (!v) throw ConfigError("variants must be strings");
      c.variants.push_back(*v);
    }
  }

  if (const toml::node* n = root.get("ar1")) {
    const toml::table* t = n->as_table();
    if (!t) throw ConfigError("'ar1' must be a table");
    const std::string sc = "ar1.";
    reject_unknown(*t, {"regions", "length", "tau", "phi_offset", "phi_amplitude", "phi_periods", "prior_precision",
                        "grid_lo", "grid_hi", "grid_points"},
                   sc);
    auto& a = c.ar1;
    a.regions = get_int(*t, "regions", a.regions, sc);
    a.length = get_int(*t, "length", a.length, sc);
    a.tau = get_double(*t, "tau", a.tau, sc);
    a.phi_offset = get_double(*t, "phi_offset", a.phi_offset, sc);
    a.phi_amplitude = get_double(*t, "phi_amplitude", a.phi_amplitude, sc);
    a.phi_periods = get_double(*t, "phi_periods", a.phi_periods, sc);
    a.prior_precision = get_double(*t, "prior_precision", a.prior_precision, sc);
    a.grid.lo = get_double(*t, "grid_lo", a.grid.lo, sc);
    a.grid.hi = get_double(*t, "grid_hi", a.grid.hi, sc);
    a.grid.points = get_int(*t, "grid_points", a.grid.points, sc);
  }
  if (const toml::node* n = root.get("spatial")) {
    const toml::table* t = n->as_table();
    if (!t) throw ConfigError("'spatial' must be a table");
    const std::string sc = "spatial.";
    reject_unknown(*t, {"points", "regions", "spacing", "range_scale", "field_sd", "nugget_sd", "alpha1", "alpha2",
                        "beta_prior_var", "coarse_points", "grid_points", "smoothing_range", "kmeans_restarts"},
                   sc);
    auto& s = c.spatial;
    s.points = get_int(*t, "points", s.points, sc);
    s.regions = get_int(*t, "regions", s.regions, sc);
    s.spacing = get_double(*t, "spacing", s.spacing, sc);
    s.range_scale = get_double(*t, "range_scale", s.range_scale, sc);
    s.field_sd = get_double(*t, "field_sd", s.field_sd, sc);
    s.nugget_sd = get_double(*t, "nugget_sd", s.nugget_sd, sc);
    s.alpha1 = get_double(*t, "alpha1", s.alpha1, sc);
    s.alpha2 = get_double(*t, "alpha2", s.alpha2, sc);
    s.beta_prior_var = get_double(*t, "beta_prior_var", s.beta_prior_var, sc);
    s.coarse_points = get_int(*t, "coarse_points", s.coarse_points, sc);
    s.grid_points = get_int(*t, "grid_points", s.grid_points, sc);
    s.smoothing_range = get_double(*t, "smoothing_range", s.smoothing_range, sc);
    s.kmeans_restarts = get_int(*t, "kmeans_restarts", s.kmeans_restarts, sc);
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str(), path.string());
}

std::vector<double> parse_levels(std::string_view csv) {
  std::vector<double> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = csv.find(',', start);
    std::string_view item = csv.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    out.push_back(parse_double(item, "--levels"));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string dump_config(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "mode = \"" << to_string(c.mode) << "\"\n";
  os << "seeds = [";
  for (std::size_t i = 0; i < c.seeds.size(); ++i) os << (i ? ", " : "") << c.seeds[i];
  os << "]\n";
  os << "workers = " << c.workers << "\n";
  os << "out = \"" << c.out << "\"\n";
  os << "gh_order = " << c.gh_order << "\n";
  const std::vector<double> lv = c.effective_levels();
  os << "levels = [";
  for (std::size_t i = 0; i < lv.size(); ++i) os << (i ? ", " : "") << toml_number(lv[i]);
  os << "]\n";
  const auto vars = c.effective_variants();
  os << "variants = [";
  for (std::size_t i = 0; i < vars.size(); ++i) os << (i ? ", " : "") << '"' << vars[i] << '"';
  os << "]\n\n[ar1]\n";
  const auto& a = c.ar1;
  os << "regions = " << a.regions << "\nlength = " << a.length << "\ntau = " << toml_number(a.tau)
     << "\nphi_offset = " << toml_number(a.phi_offset) << "\nphi_amplitude = " << toml_number(a.phi_amplitude)
     << "\nphi_periods = " << toml_number(a.phi_periods) << "\nprior_precision = " << toml_number(a.prior_precision)
     << "\ngrid_lo = " << toml_number(a.grid.lo) << "\ngrid_hi = " << toml_number(a.grid.hi)
     << "\ngrid_points = " << a.grid.points << "\n\n[spatial]\n";
  const auto& s = c.spatial;
  os << "points = " << s.points << "\nregions = " << s.regions << "\nspacing = " << toml_number(s.spacing)
     << "\nrange_scale = " << toml_number(s.range_scale) << "\nfield_sd = " << toml_number(s.field_sd)
     << "\nnugget_sd = " << toml_number(s.nugget_sd) << "\nalpha1 = " << toml_number(s.alpha1)
     << "\nalpha2 = " << toml_number(s.alpha2) << "\nbeta_prior_var = " << toml_number(s.beta_prior_var)
     << "\ncoarse_points = " << s.coarse_points << "\ngrid_points = " << s.grid_points
     << "\nsmoothing_range = " << toml_number(s.smoothing_range) << "\nkmeans_restarts = " << s.kmeans_restarts
     << "\n";
  return os.str();
}

}  // namespace llgm::pipeline
