#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "esg/common/clock.hpp"
#include "esg/common/record_log.hpp"
#include "esg/security/authority.hpp"

namespace esg::replica {

struct ReplicaEntry {
  std::string lfn;
  std::string pfn;
  Millis registered_at = 0;
  Millis renewed_at = 0;
  Millis ttl = 0;

  bool live_at(Millis now) const { return now - renewed_at < ttl; }
};

/// Soft-state map from logical to physical names. Entries lapse unless
/// re-added within their ttl; expiry is evaluated lazily on access.
class ReplicaService {
 public:
  static constexpr Millis kDefaultTtl = 24 * kHour;

  /// An empty log path keeps the index in memory only.
  ReplicaService(const Clock& clock, security::Authority& authority,
                 std::filesystem::path log_path = {}, Millis default_ttl = kDefaultTtl);

  ReplicaEntry add_replica(std::string_view lfn, std::string_view pfn, std::string_view token,
                           std::optional<Millis> ttl = std::nullopt);
  void remove_replica(std::string_view lfn, std::string_view pfn, std::string_view token);

  /// Live physical names, disk tier before archive tier, then by
  /// registration time and name.
  std::vector<std::string> lookup(std::string_view lfn);
  std::vector<ReplicaEntry> entries(std::string_view lfn);

 private:
  void authorize(std::string_view lfn, std::string_view token);
  void apply(const Json& event);
  void purge_expired(const std::string& lfn, Millis now);

  const Clock& clock_;
  security::Authority& authority_;
  Millis default_ttl_;
  std::mutex mutex_;
  std::map<std::string, std::vector<ReplicaEntry>> entries_;
  RecordLog log_;
};

}  // namespace esg::replica
