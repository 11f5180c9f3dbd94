#include "winfree/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <ostream>

namespace winfree::csv {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) return "0";
  const double a = std::abs(x);
  const auto fmt = (a >= 1e16 || a <= 1e-4) ? std::chars_format::scientific
                                            : std::chars_format::fixed;
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x, fmt);
  return std::string(buf.data(), res.ptr);
}

std::string Table::body() const {
  std::string out;
  auto emit = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  emit(columns);
  for (const auto& r : rows) emit(r);
  return out;
}

void write(std::ostream& out, const Table& table, const nlohmann::json& metadata) {
  for (const auto& [key, value] : metadata.items())
    out << "# " << key << ": " << (value.is_string() ? value.get<std::string>() : value.dump())
        << '\n';
  out << table.body();
}

}  // namespace winfree::csv
