#pragma once

// Minimal `key = value` configuration files. `#` starts a comment, list values
// are whitespace separated, and tuples inside a list element use commas or a
// colon ("3,2" or "1:7").

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace frfnet {

class KeyValueFile {
 public:
  static KeyValueFile parse(const std::string& text, const std::string& origin = "<text>");
  static KeyValueFile load(const std::string& path);

  bool has(const std::string& key) const;
  const std::string& origin() const { return origin_; }

  std::string text(const std::string& key) const;
  double number(const std::string& key) const;
  long long integer(const std::string& key) const;
  std::uint64_t unsigned_integer(const std::string& key) const;
  std::vector<std::string> tokens(const std::string& key) const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<long long> integers(const std::string& key) const;

  /// Throws ConfigError naming the first key not in `known`.
  void reject_unknown(const std::set<std::string>& known) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::string origin_;
  std::map<std::string, std::string> entries_;
};

double parse_double(const std::string& token, const std::string& context);
long long parse_integer(const std::string& token, const std::string& context);

}  // namespace frfnet
