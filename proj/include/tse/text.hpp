#pragma once

#include <string>
#include <vector>

namespace tse {

// Shortest decimal representation of x that parses back to the identical
// double (std::to_chars). Locale-independent; the CSV round-trip contract
// depends on this.
std::string format_double(double x);

// Strict full-string parse; on failure throws IoError mentioning `context`.
double parse_double(const std::string& s, const std::string& context);

long parse_long(const std::string& s, const std::string& context);

// Splits on a delimiter without trimming; an empty string yields one empty field.
std::vector<std::string> split(const std::string& line, char delim);

}  // namespace tse
