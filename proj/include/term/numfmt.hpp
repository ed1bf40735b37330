#pragma once

#include <string>

namespace term {

// Shortest decimal text that parses back to the same double.
std::string format_number(double x);

// strtod over the whole string; false on trailing junk or empty input.
bool parse_number(const std::string& text, double& out);

}  // namespace term
