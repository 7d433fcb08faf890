#include "llgm/pipeline/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "llgm/errors.hpp"

namespace llgm::pipeline {
namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

double parse_double(std::string_view text, std::string_view context) {
  if (text == "nan") return std::nan("");
  if (text == "inf") return INFINITY;
  if (text == "-inf") return -INFINITY;
  double v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ConfigError(std::string(context) + ": not a number: '" + std::string(text) + "'");
  return v;
}

long long parse_int(std::string_view text, std::string_view context) {
  long long v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ConfigError(std::string(context) + ": not an integer: '" + std::string(text) + "'");
  return v;
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw ConfigError("missing column '" + std::string(name) + "'");
}

double CsvTable::number(std::size_t row, std::size_t col) const {
  return parse_double(rows.at(row).at(col), "row " + std::to_string(row + 2) + ", column " + header.at(col));
}

long long CsvTable::integer(std::size_t row, std::size_t col) const {
  return parse_int(rows.at(row).at(col), "row " + std::to_string(row + 2) + ", column " + header.at(col));
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  CsvTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split(line);
    if (table.header.empty()) {
      table.header = std::move(fields);
      continue;
    }
    if (fields.size() != table.header.size())
      throw ConfigError(where(path, lineno) + ": expected " + std::to_string(table.header.size()) + " fields");
    table.rows.push_back(std::move(fields));
  }
  if (table.header.empty()) throw ConfigError(path.string() + ": missing header");
  return table;
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ostringstream os;
  auto emit = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) os << (i ? "," : "") << fields[i];
    os << '\n';
  };
  emit(table.header);
  for (const auto& r : table.rows) emit(r);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << os.str();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<Eigen::VectorXd> read_series(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const std::size_t cr = t.column("region"), ct = t.column("t"), cv = t.column("value");
  std::vector<std::vector<double>> acc;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const long long r = t.integer(i, cr), time = t.integer(i, ct);
    const double v = t.number(i, cv);
    if (r < 1 || r > static_cast<long long>(acc.size()) + 1)
      throw ConfigError(path.string() + ": regions must be numbered contiguously from 1");
    if (r == static_cast<long long>(acc.size()) + 1) acc.emplace_back();
    auto& s = acc[static_cast<std::size_t>(r - 1)];
    if (time != static_cast<long long>(s.size()) + 1)
      throw ConfigError(path.string() + ": time index out of order in region " + std::to_string(r));
    if (!std::isfinite(v)) throw ConfigError(path.string() + ": non-finite value in region " + std::to_string(r));
    s.push_back(v);
  }
  if (acc.empty()) throw ConfigError(path.string() + ": no observations");
  std::vector<Eigen::VectorXd> out;
  for (const auto& s : acc) out.push_back(Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size())));
  return out;
}

void write_series(const std::filesystem::path& path, const std::vector<Eigen::VectorXd>& series) {
  CsvTable t{{"region", "t", "value"}, {}};
  for (std::size_t r = 0; r < series.size(); ++r)
    for (Eigen::Index i = 0; i < series[r].size(); ++i)
      t.rows.push_back({std::to_string(r + 1), std::to_string(i + 1), format_double(series[r](i))});
  write_csv(path, t);
}

ObservationTable read_observations(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  if (t.header.size() < 3 || t.header[0] != "x" || t.header[1] != "y" || t.header[2] != "value")
    throw ConfigError(path.string() + ": header must start with x,y,value");
  if (t.rows.empty()) throw ConfigError(path.string() + ": no observations");
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  const auto q = static_cast<Eigen::Index>(t.header.size() - 3);
  ObservationTable obs;
  obs.locations.resize(n, 2);
  obs.values.resize(n);
  obs.covariates.resize(n, q);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = static_cast<std::size_t>(i);
    obs.locations(i, 0) = t.number(row, 0);
    obs.locations(i, 1) = t.number(row, 1);
    obs.values(i) = t.number(row, 2);
    for (Eigen::Index j = 0; j < q; ++j) obs.covariates(i, j) = t.number(row, static_cast<std::size_t>(3 + j));
  }
  if (!obs.locations.allFinite() || !obs.values.allFinite() || !obs.covariates.allFinite())
    throw ConfigError(path.string() + ": missing or non-finite values");
  return obs;
}

void write_observations(const std::filesystem::path& path, const ObservationTable& obs) {
  CsvTable t{{"x", "y", "value"}, {}};
  for (Eigen::Index j = 0; j < obs.covariates.cols(); ++j) t.header.push_back("cov" + std::to_string(j + 1));
  for (Eigen::Index i = 0; i < obs.size(); ++i) {
    std::vector<std::string> row{format_double(obs.locations(i, 0)), format_double(obs.locations(i, 1)),
                                 format_double(obs.values(i))};
    for (Eigen::Index j = 0; j < obs.covariates.cols(); ++j) row.push_back(format_double(obs.covariates(i, j)));
    t.rows.push_back(std::move(row));
  }
  write_csv(path, t);
}

}  // namespace llgm::pipeline
