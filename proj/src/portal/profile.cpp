#include "esg/portal/profile.hpp"

#include <fstream>

#include "esg/common/error.hpp"
#include "esg/common/names.hpp"

namespace fs = std::filesystem;

namespace esg::portal {

bool Profile::serves(std::string_view lfn) const {
  if (!lfn.starts_with(served_prefix)) return false;
  if (served_prefix == kLfnScheme || served_prefix.ends_with('/')) return true;
  return lfn.size() == served_prefix.size() || lfn[served_prefix.size()] == '/';
}

Profile profile_from_json(const Json& j, const fs::path& base_dir) {
  Profile p;
  auto resolve = [&](const std::string& s) {
    fs::path path(s);
    return path.is_relative() && !base_dir.empty() ? fs::weakly_canonical(base_dir / path) : path;
  };
  try {
    p.name = j.value("name", p.name);
    p.served_prefix = j.value("served_prefix", p.served_prefix);
    p.state_dir = resolve(j.at("state_dir").get<std::string>());
    p.storage_root = j.contains("storage_root") ? resolve(j["storage_root"].get<std::string>()) : p.state_dir / "sites";
    p.listen_host = j.value("listen_host", p.listen_host);
    p.listen_port = j.value("listen_port", p.listen_port);
    p.service_key_hex = j.value("service_key_hex", p.service_key_hex);
    p.admin_user = j.value("admin_user", p.admin_user);
    p.workers = j.value("workers", p.workers);
    p.token_ttl_ms = j.value("token_ttl_ms", p.token_ttl_ms);
    p.heartbeat_interval_ms = j.value("heartbeat_interval_ms", p.heartbeat_interval_ms);
    p.portal_cache_site = j.value("portal_cache_site", p.portal_cache_site);
    p.republish = j.value("republish", p.republish);
    p.portal_authz_check = j.value("portal_authz_check", p.portal_authz_check);
    if (j.contains("services")) p.services = j["services"].get<std::set<std::string>>();
    for (const auto& s : j.value("sites", Json::array())) p.sites.push_back(storage::site_config_from_json(s));
    for (const auto& g : j.value("policies", Json::array())) {
      security::GroupPolicy policy{g.at("group").get<std::string>(), g.at("pattern").get<std::string>(), {}};
      for (const auto& a : g.at("actions")) {
        auto action = security::parse_action(a.get<std::string>());
        if (!action) throw Error(Errc::invalid_argument, "unknown action " + a.get<std::string>());
        policy.actions.insert(*action);
      }
      if (!security::valid_pattern(policy.pattern)) throw Error(Errc::invalid_argument, "bad pattern " + policy.pattern);
      p.policies.push_back(std::move(policy));
    }
    if (j.contains("datamover")) {
      const auto& d = j["datamover"];
      auto& t = p.transfer_policy;
      t.max_concurrent_files = d.value("max_concurrent_files", t.max_concurrent_files);
      t.max_retries = d.value("max_retries", t.max_retries);
      t.backoff_base_ms = d.value("backoff_base_ms", t.backoff_base_ms);
      t.backoff_factor = d.value("backoff_factor", t.backoff_factor);
      t.jitter = d.value("jitter", t.jitter);
      t.jitter_seed = d.value("jitter_seed", t.jitter_seed);
    }
  } catch (const Json::exception& e) {
    throw Error(Errc::invalid_argument, std::string("bad profile: ") + e.what());
  }
  if (p.served_prefix != kLfnScheme && !valid_lfn(p.served_prefix)) {
    throw Error(Errc::invalid_argument, "bad served_prefix " + p.served_prefix);
  }
  if (p.workers < 1) throw Error(Errc::invalid_argument, "workers must be positive");
  bool has_cache = false;
  for (const auto& s : p.sites) has_cache |= s.site_id == p.portal_cache_site;
  if (!has_cache) throw Error(Errc::invalid_argument, "no site named " + p.portal_cache_site + " for the portal cache");
  return p;
}

Profile load_profile(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::not_found, "cannot read profile " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(Errc::invalid_argument, "profile " + path.string() + ": " + e.what());
  }
  return profile_from_json(j, fs::absolute(path).parent_path());
}

Json to_json(const Profile& p) {
  Json sites = Json::array();
  for (const auto& s : p.sites) sites.push_back(storage::to_json(s));
  return Json{{"name", p.name},
              {"served_prefix", p.served_prefix},
              {"state_dir", p.state_dir.string()},
              {"storage_root", p.storage_root.string()},
              {"listen_host", p.listen_host},
              {"listen_port", p.listen_port},
              {"services", p.services},
              {"portal_cache_site", p.portal_cache_site},
              {"republish", p.republish},
              {"sites", sites}};
}

}  // namespace esg::portal
