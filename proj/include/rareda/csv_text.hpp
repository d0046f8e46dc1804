#pragma once

#include <charconv>
#include <string>
#include <string_view>
#include <vector>

#include "rareda/numcore/matrix.hpp"

namespace rareda::csv {

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

std::vector<std::string_view> split_commas(std::string_view line);

template <typename T>
T parse_number(std::string_view tok, std::size_t line_no, std::string_view column) {
  T v{};
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    throw Error("csv line " + std::to_string(line_no) + ": cannot parse " + std::string(column) +
                " value '" + std::string(tok) + "'");
  }
  return v;
}

/// Splits text into lines, dropping a trailing '\r' and a final empty line.
std::vector<std::string_view> lines(std::string_view text);

}  // namespace rareda::csv
