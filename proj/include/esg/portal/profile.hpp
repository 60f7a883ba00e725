#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "esg/common/clock.hpp"
#include "esg/common/record_log.hpp"
#include "esg/datamover/datamover.hpp"
#include "esg/security/authority.hpp"
#include "esg/storage/storage.hpp"

namespace esg::portal {

/// Deployment profile: which services run, which LFN prefix is served and
/// where state lives. Two portals can share code and differ only here.
struct Profile {
  std::string name = "esg";
  /// Only records and names under this prefix are visible ("lfn://" = all).
  std::string served_prefix = "lfn://";
  std::filesystem::path state_dir;
  std::filesystem::path storage_root;  // defaults to <state_dir>/sites
  std::string listen_host = "127.0.0.1";
  int listen_port = 8080;
  std::string service_key_hex;  // generated into <state_dir>/service.key when empty
  std::string admin_user = "admin@esg.local";
  int workers = 2;
  Millis token_ttl_ms = 12 * kHour;
  Millis heartbeat_interval_ms = 5 * kSecond;
  std::string portal_cache_site = "portal";
  bool republish = true;
  /// Boundary read check in front of virtual data; the inner check always runs.
  bool portal_authz_check = true;
  std::set<std::string> services{"security", "catalog", "replica", "storage",
                                 "datamover", "virtualdata", "monitor"};
  std::vector<storage::SiteConfig> sites;
  /// Group policies installed at startup; re-adding an existing one is a no-op.
  std::vector<security::GroupPolicy> policies;
  datamover::Policy transfer_policy;

  bool enabled(const std::string& service) const { return services.contains(service); }
  /// True when lfn is the served prefix itself or lies beneath it.
  bool serves(std::string_view lfn) const;
};

Profile profile_from_json(const Json& j, const std::filesystem::path& base_dir = {});
Profile load_profile(const std::filesystem::path& path);
Json to_json(const Profile& p);

}  // namespace esg::portal
