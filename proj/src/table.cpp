#include "mixedboot/table.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "mixedboot/error.hpp"

namespace mixedboot {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_double(const std::string& s) {
  double value = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

}  // namespace

DataTable::DataTable(std::vector<Column> columns) : columns_(std::move(columns)) {
  if (!columns_.empty()) rows_ = columns_.front().labels.size();
  for (const auto& col : columns_) {
    if (col.labels.size() != rows_ || (col.numeric && col.values.size() != rows_)) {
      throw Error(ErrorCode::DimensionMismatch, "column '" + col.name + "' has a different row count");
    }
  }
}

const Column* DataTable::find(const std::string& name) const noexcept {
  for (const auto& col : columns_) {
    if (col.name == name) return &col;
  }
  return nullptr;
}

const Column& DataTable::column(const std::string& name) const {
  if (const Column* col = find(name)) return *col;
  throw Error(ErrorCode::MissingColumn, "column '" + name + "' not found in data");
}

DataTable parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::InvalidData, "empty CSV input");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

  std::vector<Column> columns;
  for (auto& name : split_csv_line(line)) {
    Column col;
    col.name = trim(name);
    columns.push_back(std::move(col));
  }

  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    auto fields = split_csv_line(line);
    if (fields.size() != columns.size()) {
      throw Error(ErrorCode::InvalidData, "row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                                              " fields, expected " + std::to_string(columns.size()));
    }
    for (std::size_t j = 0; j < fields.size(); ++j) {
      std::string cell = trim(fields[j]);
      if (cell.empty() || cell == "NA") {
        throw Error(ErrorCode::MissingValue,
                    "missing value at row " + std::to_string(row) + ", column '" + columns[j].name + "'");
      }
      columns[j].labels.push_back(std::move(cell));
    }
  }
  if (row == 0) throw Error(ErrorCode::InvalidData, "CSV has no data rows");

  for (auto& col : columns) {
    std::vector<double> values;
    values.reserve(col.labels.size());
    bool numeric = true;
    for (const auto& cell : col.labels) {
      auto v = parse_double(cell);
      if (!v) {
        numeric = false;
        break;
      }
      values.push_back(*v);
    }
    col.numeric = numeric;
    if (numeric) col.values = std::move(values);
  }
  return DataTable(std::move(columns));
}

DataTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  return parse_csv(in);
}

Column numeric_column(std::string name, std::vector<double> values) {
  Column col;
  col.name = std::move(name);
  col.numeric = true;
  col.labels.reserve(values.size());
  for (double v : values) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    col.labels.push_back(os.str());
  }
  col.values = std::move(values);
  return col;
}

Column categorical_column(std::string name, std::vector<std::string> labels) {
  Column col;
  col.name = std::move(name);
  col.numeric = false;
  col.labels = std::move(labels);
  return col;
}

}  // namespace mixedboot
