#include "olpi/serialization.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <system_error>

namespace olpi {

std::string format_double(double v) {
  // Try increasing precision until the value round-trips exactly.
  char buf[64];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string cost_table_csv(const CostToGoTable& table) {
  std::string out = "stage,state_encoding,value\n";
  for (int k = 0; k <= table.horizon(); ++k) {
    // Rows sorted by encoding within a stage so the output is reproducible.
    std::vector<std::pair<std::string, double>> rows(table.values[static_cast<std::size_t>(k)].begin(),
                                                     table.values[static_cast<std::size_t>(k)].end());
    std::sort(rows.begin(), rows.end());
    for (const auto& [enc, value] : rows) {
      out += std::to_string(k);
      out += ',';
      out += to_hex(enc);
      out += ',';
      out += format_double(value);
      out += '\n';
    }
  }
  return out;
}

}  // namespace olpi
