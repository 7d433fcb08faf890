#pragma once

// Plain comma-separated tables: header line, no quoting, '.' decimals.
// Numbers are written in shortest round-trip form.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "llgm/region.hpp"

namespace llgm::pipeline {

std::string format_double(double v);
/// Throws ConfigError naming `context` on anything but a complete number.
double parse_double(std::string_view text, std::string_view context);
long long parse_int(std::string_view text, std::string_view context);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a named column; ConfigError if absent.
  std::size_t column(std::string_view name) const;
  double number(std::size_t row, std::size_t col) const;
  long long integer(std::size_t row, std::size_t col) const;
};

CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

/// `region,t,value` with 1-based region and time; regions and times must be
/// contiguous. Returned series are indexed by 0-based region.
std::vector<Eigen::VectorXd> read_series(const std::filesystem::path& path);
void write_series(const std::filesystem::path& path, const std::vector<Eigen::VectorXd>& series);

/// `x,y,value[,cov1,...]`.
ObservationTable read_observations(const std::filesystem::path& path);
void write_observations(const std::filesystem::path& path, const ObservationTable& table);

}  // namespace llgm::pipeline
