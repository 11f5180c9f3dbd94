#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace winfree::csv {

/// Shortest round-trip text; scientific notation when |x| >= 1e16 or
/// 0 < |x| <= 1e-4, plain decimal otherwise.
std::string format_number(double x);

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  /// Header line plus rows, '\n' terminated. No metadata.
  std::string body() const;
};

/// `#`-prefixed metadata lines followed by the body.
void write(std::ostream& out, const Table& table, const nlohmann::json& metadata);

}  // namespace winfree::csv
