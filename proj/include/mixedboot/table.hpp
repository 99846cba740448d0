#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace mixedboot {

// A column is numeric when every cell parses as a float; otherwise it is
// categorical and keeps its raw labels. Raw text is retained for both kinds
// so a numeric column can still serve as a grouping factor.
struct Column {
  std::string name;
  bool numeric = false;
  std::vector<double> values;
  std::vector<std::string> labels;
};

class DataTable {
 public:
  DataTable() = default;
  explicit DataTable(std::vector<Column> columns);

  std::size_t rows() const noexcept { return rows_; }
  const std::vector<Column>& columns() const noexcept { return columns_; }

  // nullptr when absent.
  const Column* find(const std::string& name) const noexcept;

  // Throws MissingColumn.
  const Column& column(const std::string& name) const;

 private:
  std::vector<Column> columns_;
  std::size_t rows_ = 0;
};

// Header row required, comma separated, double quotes for fields containing
// commas. Empty cells and "NA" abort with a row/column diagnostic.
DataTable parse_csv(std::istream& in);
DataTable read_csv(const std::string& path);

// Builds a table from already-typed columns (tests and simulations).
Column numeric_column(std::string name, std::vector<double> values);
Column categorical_column(std::string name, std::vector<std::string> labels);

}  // namespace mixedboot
