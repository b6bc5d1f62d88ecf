#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scamsim/json.hpp"

namespace scamsim::stats {

/// Rectangular participant table: a header and string cells, one row per participant.
struct ObservationTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> find_column(std::string_view name) const;
  /// Throws ParseError naming the column when it is absent.
  std::size_t column(std::string_view name) const;
  /// Throws ParseError naming the column and row on empty or non-numeric cells.
  std::vector<double> numeric(std::string_view name) const;
  std::vector<std::string> text(std::string_view name) const;

  void add_column(std::string name, const std::vector<std::string>& values);
  void add_column(std::string name, const std::vector<double>& values);
};

ObservationTable parse_csv(std::string_view text);
ObservationTable read_csv(const std::filesystem::path& path);
std::string to_csv(const ObservationTable& table);

/// Array of flat objects sharing the same keys.
ObservationTable table_from_json(const Json& rows);
Json to_json(const ObservationTable& table);

/// Rows whose `included` column is 1 (all rows when the column is absent).
ObservationTable included_rows(const ObservationTable& table);

std::string format_number(double v);

}  // namespace scamsim::stats
