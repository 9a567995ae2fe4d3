#include "reid/kvconfig.hpp"

#include "reid/errors.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace reid {
namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

KeyValueConfig KeyValueConfig::parse(std::string_view text) {
  KeyValueConfig cfg;
  std::istringstream is{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value', got '" + t + "'", lineno);
    auto key = trim(std::string_view(t).substr(0, eq));
    if (key.empty()) throw ParseError("empty key", lineno);
    cfg.entries_[key] = trim(std::string_view(t).substr(eq + 1));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void KeyValueConfig::set(const std::string& key, double value) { entries_[key] = format_double(value); }
void KeyValueConfig::set(const std::string& key, long long value) { entries_[key] = std::to_string(value); }

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  double out = 0.0;
  auto res = std::from_chars(v->data(), v->data() + v->size(), out);
  if (res.ec != std::errc() || res.ptr != v->data() + v->size()) throw ConfigError(key, "expected a number, got '" + *v + "'");
  return out;
}

long long KeyValueConfig::get_int(const std::string& key, long long fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  long long out = 0;
  auto res = std::from_chars(v->data(), v->data() + v->size(), out);
  if (res.ec != std::errc() || res.ptr != v->data() + v->size()) throw ConfigError(key, "expected an integer, got '" + *v + "'");
  return out;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  std::string s = *v;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError(key, "expected a boolean, got '" + *v + "'");
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

std::vector<double> KeyValueConfig::get_doubles(const std::string& key, const std::vector<double>& fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  std::vector<double> out;
  std::string item;
  std::istringstream is(*v);
  while (std::getline(is, item, ',')) {
    const auto t = trim(item);
    double d = 0.0;
    auto res = std::from_chars(t.data(), t.data() + t.size(), d);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size()) throw ConfigError(key, "expected comma-separated numbers");
    out.push_back(d);
  }
  return out;
}

std::vector<std::string> KeyValueConfig::unknown_keys(const std::vector<std::string>& known) const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_)
    if (std::find(known.begin(), known.end(), k) == known.end()) out.push_back(k);
  return out;
}

std::string KeyValueConfig::to_string() const {
  std::ostringstream os;
  for (const auto& [k, v] : entries_) os << k << " = " << v << '\n';
  return os.str();
}

void KeyValueConfig::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  out << to_string();
  if (!out) throw std::runtime_error("cannot write config " + path.string());
}

KeyValueConfig KeyValueConfig::merged(const KeyValueConfig& overrides) const {
  KeyValueConfig out = *this;
  for (const auto& [k, v] : overrides.entries_) out.entries_[k] = v;
  return out;
}

}  // namespace reid
