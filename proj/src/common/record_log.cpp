#include "esg/common/record_log.hpp"

#include "esg/common/error.hpp"

namespace esg {

RecordLog::RecordLog(std::filesystem::path path) { open(std::move(path)); }

void RecordLog::open(std::filesystem::path path) {
  std::lock_guard lock(mutex_);
  path_ = std::move(path);
  if (path_.has_parent_path()) {
    std::filesystem::create_directories(path_.parent_path());
  }
  out_.open(path_, std::ios::app | std::ios::binary);
  if (!out_) {
    throw Error(Errc::unavailable, "cannot open log " + path_.string());
  }
}

void RecordLog::append(const Json& record) {
  if (!persistent()) return;
  std::lock_guard lock(mutex_);
  out_ << record.dump() << '\n';
  out_.flush();
  if (!out_) throw Error(Errc::unavailable, "log append failed: " + path_.string());
}

void RecordLog::replay(const std::function<void(const Json&)>& visit) const {
  if (persistent()) replay_file(path_, visit);
}

void RecordLog::replay_file(const std::filesystem::path& path,
                            const std::function<void(const Json&)>& visit) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (in.eof()) {
      // No trailing newline: the writer died mid-append.
      auto parsed = Json::parse(line, nullptr, false);
      if (parsed.is_discarded()) break;
      visit(parsed);
      break;
    }
    auto parsed = Json::parse(line, nullptr, false);
    if (parsed.is_discarded()) {
      throw Error(Errc::corrupt, "corrupt log record in " + path.string());
    }
    visit(parsed);
  }
}

}  // namespace esg
