#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace reid {

using JsonValue = std::variant<long long, double, std::string, bool>;
using JsonRecord = std::vector<std::pair<std::string, JsonValue>>;

/// One JSON object per line in field order; doubles use the shortest round-trip form and
/// non-finite values are written as null.
std::string to_json_line(const JsonRecord& record);

/// Append-only line-delimited log, flushed after every record.
class JsonlLog {
 public:
  explicit JsonlLog(const std::filesystem::path& path, bool append = false);
  void write(const JsonRecord& record);
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

}  // namespace reid
