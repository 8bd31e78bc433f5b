#include "frfnet/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "frfnet/errors.hpp"

namespace frfnet {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

double parse_double(const std::string& token, const std::string& context) {
  double value = 0.0;
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ConfigError(context + ": '" + token + "' is not a number");
  return value;
}

long long parse_integer(const std::string& token, const std::string& context) {
  long long value = 0;
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ConfigError(context + ": '" + token + "' is not an integer");
  return value;
}

KeyValueFile KeyValueFile::parse(const std::string& text, const std::string& origin) {
  KeyValueFile file;
  file.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
    if (file.entries_.count(key)) throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
    file.entries_[key] = trim(line.substr(eq + 1));
  }
  return file;
}

KeyValueFile KeyValueFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path);
}

bool KeyValueFile::has(const std::string& key) const { return entries_.count(key) != 0; }

std::string KeyValueFile::text(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError(origin_ + ": missing key '" + key + "'");
  return it->second;
}

double KeyValueFile::number(const std::string& key) const { return parse_double(text(key), origin_ + ": " + key); }

long long KeyValueFile::integer(const std::string& key) const {
  return parse_integer(text(key), origin_ + ": " + key);
}

std::uint64_t KeyValueFile::unsigned_integer(const std::string& key) const {
  const std::string token = text(key);
  std::uint64_t value = 0;
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ConfigError(origin_ + ": " + key + ": '" + token + "' is not an unsigned integer");
  return value;
}

std::vector<std::string> KeyValueFile::tokens(const std::string& key) const {
  std::istringstream in(text(key));
  std::vector<std::string> out;
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

std::vector<double> KeyValueFile::numbers(const std::string& key) const {
  std::vector<double> out;
  for (const auto& t : tokens(key)) out.push_back(parse_double(t, origin_ + ": " + key));
  return out;
}

std::vector<long long> KeyValueFile::integers(const std::string& key) const {
  std::vector<long long> out;
  for (const auto& t : tokens(key)) out.push_back(parse_integer(t, origin_ + ": " + key));
  return out;
}

void KeyValueFile::reject_unknown(const std::set<std::string>& known) const {
  for (const auto& [key, value] : entries_)
    if (!known.count(key)) throw ConfigError(origin_ + ": unknown key '" + key + "'");
}

}  // namespace frfnet
