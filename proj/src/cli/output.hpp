#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "smd/cli.hpp"

namespace smd::cli {

/// Shortest round-trip text for a double ("%.17g"); non-finite values print
/// as nan, inf, -inf.
std::string format_double(double value);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  CsvTable& row() {
    rows_.emplace_back();
    return *this;
  }
  CsvTable& add(const std::string& cell);
  CsvTable& add(const char* cell) { return add(std::string(cell)); }
  CsvTable& add(double value) { return add(format_double(value)); }
  CsvTable& add(long long value) { return add(std::to_string(value)); }
  CsvTable& add(long value) { return add(static_cast<long long>(value)); }
  CsvTable& add(int value) { return add(static_cast<long long>(value)); }
  CsvTable& add(bool value) { return add(std::string(value ? "1" : "0")); }

  std::size_t size() const { return rows_.size(); }
  void write(std::ostream& os) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Writes the CSV to `path` plus `<path>.meta.json` holding the command, its
/// resolved config and a summary; with an empty path the CSV goes to `out`.
void emit(const CsvTable& table, const std::string& path, const std::string& command, const nlohmann::json& config,
          const nlohmann::json& summary, std::ostream& out);

}  // namespace smd::cli
