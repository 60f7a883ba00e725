#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>

#include <json.hpp>

namespace esg {

using Json = nlohmann::ordered_json;

/// Append-only newline-delimited JSON log. An empty path keeps the log in
/// memory only. A torn final line (crash mid-append) is ignored on replay.
class RecordLog {
 public:
  RecordLog() = default;
  explicit RecordLog(std::filesystem::path path);

  /// Starts appending to path (creating parent directories).
  void open(std::filesystem::path path);

  const std::filesystem::path& path() const { return path_; }
  bool persistent() const { return !path_.empty(); }

  void append(const Json& record);

  /// Calls visit for every complete record in order.
  void replay(const std::function<void(const Json&)>& visit) const;

  static void replay_file(const std::filesystem::path& path,
                          const std::function<void(const Json&)>& visit);

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::mutex mutex_;
};

}  // namespace esg
