#include "tse/text.hpp"

#include <charconv>
#include <cstdlib>
#include <system_error>

#include "tse/errors.hpp"

namespace tse {

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const std::string& context) {
  double value = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last || s.empty()) {
    throw IoError(context + ": cannot parse '" + s + "' as a number");
  }
  return value;
}

long parse_long(const std::string& s, const std::string& context) {
  long value = 0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last || s.empty()) {
    throw IoError(context + ": cannot parse '" + s + "' as an integer");
  }
  return value;
}

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delim, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

}  // namespace tse
