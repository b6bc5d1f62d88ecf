#include "scamsim/stats/table.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "scamsim/error.hpp"
#include "scamsim/text.hpp"

namespace scamsim::stats {

std::optional<std::size_t> ObservationTable::find_column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t ObservationTable::column(std::string_view name) const {
  if (auto i = find_column(name)) return *i;
  fail(ErrorCode::ParseError, "missing column '" + std::string(name) + "'");
}

std::vector<double> ObservationTable::numeric(std::string_view name) const {
  const std::size_t c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::string cell = trim(rows[r].at(c));
    double v = 0.0;
    const auto* end = cell.data() + cell.size();
    const auto res = std::from_chars(cell.data(), end, v);
    if (cell.empty() || res.ec != std::errc{} || res.ptr != end || !std::isfinite(v)) {
      fail(ErrorCode::ParseError, "column '" + std::string(name) + "' row " + std::to_string(r + 1) +
                                      ": not a number: '" + cell + "'");
    }
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> ObservationTable::text(std::string_view name) const {
  const std::size_t c = column(name);
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::string cell = trim(rows[r].at(c));
    if (cell.empty()) {
      fail(ErrorCode::ParseError, "column '" + std::string(name) + "' row " + std::to_string(r + 1) + " is empty");
    }
    out.push_back(std::move(cell));
  }
  return out;
}

void ObservationTable::add_column(std::string name, const std::vector<std::string>& values) {
  if (!rows.empty() && values.size() != rows.size()) {
    fail(ErrorCode::InvalidArgument, "column '" + name + "' length differs from the table");
  }
  if (rows.empty()) rows.resize(values.size());
  header.push_back(std::move(name));
  for (std::size_t i = 0; i < values.size(); ++i) rows[i].push_back(values[i]);
}

void ObservationTable::add_column(std::string name, const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_number(v));
  add_column(std::move(name), cells);
}

std::string format_number(double v) {
  if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 1e15) {
    return std::to_string(static_cast<long long>(v));
  }
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<std::vector<std::string>> parse_records(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
      continue;
    }
    if (ch == '"') {
      quoted = true;
      any = true;
    } else if (ch == ',') {
      record.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (ch == '\n' || ch == '\r') {
      if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        record.push_back(std::move(field));
        records.push_back(std::move(record));
      }
      record.clear();
      field.clear();
      any = false;
    } else {
      field += ch;
      any = true;
    }
  }
  if (quoted) fail(ErrorCode::ParseError, "unterminated quoted field");
  if (any || !field.empty()) {
    record.push_back(std::move(field));
    records.push_back(std::move(record));
  }
  return records;
}

std::string quote(const std::string& cell) {
  if (cell.find_first_of(",\"\n\r") == std::string::npos) return cell;
  std::string out = "\"";
  for (char ch : cell) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

ObservationTable parse_csv(std::string_view text) {
  auto records = parse_records(text);
  if (records.empty()) fail(ErrorCode::ParseError, "table is empty");
  ObservationTable t;
  for (auto& h : records.front()) t.header.push_back(trim(h));
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].size() != t.header.size()) {
      fail(ErrorCode::ParseError, "row " + std::to_string(i) + " has " + std::to_string(records[i].size()) +
                                      " cells, header has " + std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(records[i]));
  }
  return t;
}

ObservationTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

std::string to_csv(const ObservationTable& table) {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += quote(cells[i]);
    }
    out += '\n';
  };
  line(table.header);
  for (const auto& r : table.rows) line(r);
  return out;
}

ObservationTable table_from_json(const Json& rows) {
  if (!rows.is_array()) fail(ErrorCode::ParseError, "table document must be an array of rows");
  ObservationTable t;
  if (rows.empty()) return t;
  for (auto it = rows.front().begin(); it != rows.front().end(); ++it) t.header.push_back(it.key());
  for (const auto& r : rows) {
    std::vector<std::string> cells;
    for (const auto& h : t.header) {
      if (!r.contains(h)) fail(ErrorCode::ParseError, "row lacks column '" + h + "'");
      const Json& v = r.at(h);
      if (v.is_string()) {
        cells.push_back(v.get<std::string>());
      } else if (v.is_boolean()) {
        cells.push_back(v.get<bool>() ? "1" : "0");
      } else if (v.is_number()) {
        cells.push_back(format_number(v.get<double>()));
      } else if (v.is_null()) {
        cells.emplace_back();
      } else {
        cells.push_back(v.dump());
      }
    }
    t.rows.push_back(std::move(cells));
  }
  return t;
}

Json to_json(const ObservationTable& table) {
  Json out = Json::array();
  for (const auto& r : table.rows) {
    Json row = Json::object();
    for (std::size_t i = 0; i < table.header.size(); ++i) row[table.header[i]] = r[i];
    out.push_back(std::move(row));
  }
  return out;
}

ObservationTable included_rows(const ObservationTable& table) {
  const auto c = table.find_column("included");
  if (!c) return table;
  ObservationTable out;
  out.header = table.header;
  for (const auto& r : table.rows) {
    const std::string v = trim(r[*c]);
    if (v == "1" || iequals(v, "true")) out.rows.push_back(r);
  }
  return out;
}

}  // namespace scamsim::stats
