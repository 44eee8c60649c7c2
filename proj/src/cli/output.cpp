#include "output.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "smd/cli.hpp"

namespace smd::cli {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

CsvTable& CsvTable::add(const std::string& cell) {
  if (rows_.empty()) rows_.emplace_back();
  if (cell.find_first_of(",\"\n") == std::string::npos) {
    rows_.back().push_back(cell);
  } else {
    std::string quoted = "\"";
    for (char c : cell) {
      if (c == '"') quoted += '"';
      quoted += c;
    }
    rows_.back().push_back(quoted + "\"");
  }
  return *this;
}

void CsvTable::write(std::ostream& os) const {
  auto line = [&os](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
    os << '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
}

std::string sidecar_path(const std::string& csv_path) { return csv_path + ".meta.json"; }

void emit(const CsvTable& table, const std::string& path, const std::string& command, const nlohmann::json& config,
          const nlohmann::json& summary, std::ostream& out) {
  if (path.empty()) {
    table.write(out);
    return;
  }
  {
    std::ofstream csv(path, std::ios::binary);
    if (!csv) throw std::runtime_error("cannot write " + path);
    table.write(csv);
  }
  nlohmann::json meta;
  meta["tool"] = "smd";
  meta["version"] = kVersion;
  meta["command"] = command;
  meta["config"] = config;
  meta["summary"] = summary;
  meta["csv"] = path;
  std::ofstream side(sidecar_path(path), std::ios::binary);
  if (!side) throw std::runtime_error("cannot write " + sidecar_path(path));
  side << meta.dump(2) << '\n';
  out << "wrote " << path << " (" << table.size() << " rows) and " << sidecar_path(path) << '\n';
}

}  // namespace smd::cli
