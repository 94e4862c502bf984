#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace ncsim {

// CSV emission with '#'-prefixed metadata lines. Floats are printed with 9
// significant digits so identical runs reproduce files byte-for-byte.
class ResultsTable {
public:
  using Cell = std::variant<std::string, double, std::int64_t, std::uint64_t>;

  explicit ResultsTable(std::vector<std::string> columns)
      : columns_(std::move(columns)) {}

  void add_meta(const std::string& key, const std::string& value) {
    meta_.emplace_back(key, value);
  }
  void add_meta(const std::string& key, double value) {
    meta_.emplace_back(key, format_double(value));
  }
  void add_meta(const std::string& key, std::uint64_t value) {
    meta_.emplace_back(key, std::to_string(value));
  }

  void add_row(std::vector<Cell> row) {
    if (row.size() != columns_.size())
      throw std::logic_error("ResultsTable: row width mismatch");
    rows_.push_back(std::move(row));
  }

  static std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
  }

  std::string to_string() const {
    std::string out;
    for (const auto& [k, v] : meta_) out += "# " + k + " = " + v + "\n";
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      if (c) out += ',';
      out += columns_[c];
    }
    out += '\n';
    for (const auto& row : rows_) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) out += ',';
        std::visit(
            [&out](const auto& cell) {
              using T = std::decay_t<decltype(cell)>;
              if constexpr (std::is_same_v<T, std::string>)
                out += cell;
              else if constexpr (std::is_same_v<T, double>)
                out += format_double(cell);
              else
                out += std::to_string(cell);
            },
            row[c]);
      }
      out += '\n';
    }
    return out;
  }

  void write(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open output file: " + path);
    f << to_string();
    if (!f) throw std::runtime_error("failed writing output file: " + path);
  }

private:
  std::vector<std::string> columns_;
  std::vector<std::pair<std::string, std::string>> meta_;
  std::vector<std::vector<Cell>> rows_;
};

} // namespace ncsim
