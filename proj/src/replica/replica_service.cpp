#include "esg/replica/replica_service.hpp"

#include <algorithm>

#include "esg/common/error.hpp"
#include "esg/common/names.hpp"

namespace esg::replica {

ReplicaService::ReplicaService(const Clock& clock, security::Authority& authority,
                               std::filesystem::path log_path, Millis default_ttl)
    : clock_(clock), authority_(authority), default_ttl_(default_ttl) {
  if (!log_path.empty()) {
    RecordLog::replay_file(log_path, [this](const Json& e) { apply(e); });
    log_.open(log_path);
  }
}

void ReplicaService::authorize(std::string_view lfn, std::string_view token) {
  auto d = authority_.authorize(token, lfn, security::Action::publish);
  if (!d) throw Error(Errc::denied, "replica update denied: " + d.reason);
}

void ReplicaService::apply(const Json& e) {
  auto lfn = e.at("lfn").get<std::string>();
  auto pfn = e.at("pfn").get<std::string>();
  auto& list = entries_[lfn];
  auto it = std::find_if(list.begin(), list.end(), [&](const auto& r) { return r.pfn == pfn; });
  if (e.at("op") == "remove") {
    if (it != list.end()) list.erase(it);
    return;
  }
  auto at = e.at("at").get<Millis>();
  auto ttl = e.at("ttl").get<Millis>();
  if (it != list.end() && it->live_at(at)) {
    it->renewed_at = at;
    it->ttl = ttl;
  } else {
    if (it != list.end()) list.erase(it);
    list.push_back({lfn, pfn, at, at, ttl});
  }
}

ReplicaEntry ReplicaService::add_replica(std::string_view lfn, std::string_view pfn,
                                         std::string_view token, std::optional<Millis> ttl) {
  if (!valid_lfn(lfn)) throw Error(Errc::invalid_argument, "malformed LFN: " + std::string(lfn));
  if (!parse_pfn(pfn)) throw Error(Errc::invalid_argument, "malformed PFN: " + std::string(pfn));
  if (ttl && *ttl <= 0) throw Error(Errc::invalid_argument, "ttl must be positive");
  authorize(lfn, token);

  std::lock_guard lock(mutex_);
  auto now = clock_.now();
  purge_expired(std::string(lfn), now);
  Json e;
  e["op"] = "add";
  e["lfn"] = lfn;
  e["pfn"] = pfn;
  e["at"] = now;
  e["ttl"] = ttl.value_or(default_ttl_);
  apply(e);
  log_.append(e);
  const auto& list = entries_[std::string(lfn)];
  return *std::find_if(list.begin(), list.end(), [&](const auto& r) { return r.pfn == pfn; });
}

void ReplicaService::remove_replica(std::string_view lfn, std::string_view pfn,
                                    std::string_view token) {
  authorize(lfn, token);
  std::lock_guard lock(mutex_);
  purge_expired(std::string(lfn), clock_.now());
  auto it = entries_.find(std::string(lfn));
  bool known = it != entries_.end() &&
               std::any_of(it->second.begin(), it->second.end(),
                           [&](const auto& r) { return r.pfn == pfn; });
  if (!known) {
    throw Error(Errc::not_found,
                "no replica " + std::string(pfn) + " for " + std::string(lfn));
  }
  Json e;
  e["op"] = "remove";
  e["lfn"] = lfn;
  e["pfn"] = pfn;
  apply(e);
  log_.append(e);
}

void ReplicaService::purge_expired(const std::string& lfn, Millis now) {
  auto it = entries_.find(lfn);
  if (it == entries_.end()) return;
  std::erase_if(it->second, [&](const auto& r) { return !r.live_at(now); });
  if (it->second.empty()) entries_.erase(it);
}

std::vector<ReplicaEntry> ReplicaService::entries(std::string_view lfn) {
  std::lock_guard lock(mutex_);
  purge_expired(std::string(lfn), clock_.now());
  auto it = entries_.find(std::string(lfn));
  if (it == entries_.end()) return {};
  auto out = it->second;
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    auto ta = require_pfn(a.pfn).tier;
    auto tb = require_pfn(b.pfn).tier;
    if (ta != tb) return ta == Tier::disk;
    if (a.registered_at != b.registered_at) return a.registered_at < b.registered_at;
    return a.pfn < b.pfn;
  });
  return out;
}

std::vector<std::string> ReplicaService::lookup(std::string_view lfn) {
  std::vector<std::string> out;
  for (auto& e : entries(lfn)) out.push_back(std::move(e.pfn));
  return out;
}

}  // namespace esg::replica
