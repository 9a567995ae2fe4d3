#include "reid/jsonl.hpp"

#include "reid/kvconfig.hpp"

#include <json.hpp>

#include <cmath>
#include <stdexcept>

namespace reid {

std::string to_json_line(const JsonRecord& record) {
  std::string out = "{";
  bool first = true;
  for (const auto& [key, value] : record) {
    if (!first) out += ',';
    first = false;
    out += nlohmann::json(key).dump();
    out += ':';
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, double>)
            out += std::isfinite(v) ? format_double(v) : "null";
          else if constexpr (std::is_same_v<T, bool>)
            out += v ? "true" : "false";
          else if constexpr (std::is_same_v<T, long long>)
            out += std::to_string(v);
          else
            out += nlohmann::json(v).dump();
        },
        value);
  }
  return out + "}";
}

JsonlLog::JsonlLog(const std::filesystem::path& path, bool append) : path_(path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, append ? std::ios::app : std::ios::trunc);
  if (!out_) throw std::runtime_error("cannot open log " + path.string());
}

void JsonlLog::write(const JsonRecord& record) {
  out_ << to_json_line(record) << '\n';
  out_.flush();
}

}  // namespace reid
