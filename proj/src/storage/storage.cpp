#include "esg/storage/storage.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "esg/common/error.hpp"

namespace fs = std::filesystem;

namespace esg::storage {
namespace {

Bytes read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::not_found, "cannot read " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

/// Writes next to the final name then renames, so readers never see a
/// partially written file.
void write_atomic(const fs::path& tmp, const fs::path& final_path,
                  std::span<const std::uint8_t> bytes) {
  fs::create_directories(tmp.parent_path());
  fs::create_directories(final_path.parent_path());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(Errc::unavailable, "write failed: " + tmp.string());
  }
  fs::rename(tmp, final_path);
}

std::string hex_digest(std::span<const std::uint8_t> bytes) { return to_hex(sha256(bytes)); }

std::string tmp_name() { return to_hex(random_bytes(8)) + ".part"; }

double probability(const Json& j, const char* key) {
  double p = j.value(key, 0.0);
  if (!(p >= 0.0 && p <= 1.0)) throw Error(Errc::invalid_argument, std::string(key) + " must be in [0,1]");
  return p;
}

}  // namespace

SiteConfig site_config_from_json(const Json& j) {
  SiteConfig c;
  try {
    c.site_id = j.at("site_id").get<std::string>();
    c.disk_capacity_bytes = j.at("disk_capacity_bytes").get<std::uint64_t>();
    c.stage_base_ms = j.value("stage_base_ms", Millis{0});
    c.stage_per_mb_ms = j.value("stage_per_mb_ms", 0.0);
    c.transfer_base_ms = j.value("transfer_base_ms", Millis{0});
    c.transfer_per_mb_ms = j.value("transfer_per_mb_ms", 0.0);
    c.seed = j.value("seed", std::uint64_t{0});
  } catch (const Json::exception& e) {
    throw Error(Errc::invalid_argument, std::string("bad site config: ") + e.what());
  }
  c.p_transient = probability(j, "p_transient");
  c.p_stage_fail = probability(j, "p_stage_fail");
  c.p_corrupt = probability(j, "p_corrupt");
  if (!valid_segment(c.site_id)) throw Error(Errc::invalid_argument, "bad site id " + c.site_id);
  if (c.stage_base_ms < 0 || c.stage_per_mb_ms < 0 || c.transfer_base_ms < 0 || c.transfer_per_mb_ms < 0) {
    throw Error(Errc::invalid_argument, "latencies must be non-negative");
  }
  return c;
}

Json to_json(const SiteConfig& c) {
  return Json{{"site_id", c.site_id},
              {"disk_capacity_bytes", c.disk_capacity_bytes},
              {"stage_base_ms", c.stage_base_ms},
              {"stage_per_mb_ms", c.stage_per_mb_ms},
              {"transfer_base_ms", c.transfer_base_ms},
              {"transfer_per_mb_ms", c.transfer_per_mb_ms},
              {"p_transient", c.p_transient},
              {"p_stage_fail", c.p_stage_fail},
              {"p_corrupt", c.p_corrupt},
              {"seed", c.seed}};
}

std::optional<std::vector<std::string>> choose_victims(std::vector<EvictionCandidate> candidates,
                                                       std::uint64_t needed) {
  std::uint64_t total = 0;
  for (const auto& c : candidates) total += c.size;
  if (total < needed) return std::nullopt;
  std::sort(candidates.begin(), candidates.end(),
            [](const auto& a, const auto& b) { return a.last_touch < b.last_touch; });
  std::vector<std::string> victims;
  std::uint64_t freed = 0;
  for (const auto& c : candidates) {
    if (freed >= needed) break;
    victims.push_back(c.path);
    freed += c.size;
  }
  return victims;
}

double failure_draw(std::uint64_t seed, std::string_view key, std::uint64_t attempt) {
  std::string material = std::to_string(seed) + "\n" + std::string(key) + "\n" + std::to_string(attempt);
  auto d = sha256(material);
  std::uint64_t x = 0;
  for (int i = 0; i < 8; ++i) x = (x << 8) | d[i];
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

Storage::Storage(const Clock& clock, fs::path root, std::vector<SiteConfig> sites)
    : clock_(clock), root_(std::move(root)) {
  for (auto& c : sites) add_site(std::move(c));
}

Storage::~Storage() = default;

void Storage::add_site(SiteConfig config) {
  if (!valid_segment(config.site_id)) throw Error(Errc::invalid_argument, "bad site id " + config.site_id);
  auto s = std::make_unique<Site>();
  s->dir = root_ / config.site_id;
  s->config = std::move(config);
  fs::create_directories(s->dir / "disk");
  fs::create_directories(s->dir / "archive");
  fs::remove_all(s->dir / "tmp");
  fs::create_directories(s->dir / "tmp");

  for (Tier tier : {Tier::disk, Tier::archive}) {
    auto base = s->dir / std::string(to_string(tier));
    std::vector<fs::path> found;
    for (const auto& entry : fs::recursive_directory_iterator(base)) {
      if (entry.is_regular_file()) found.push_back(entry.path());
    }
    std::sort(found.begin(), found.end());
    for (const auto& p : found) {
      auto rel = fs::relative(p, base).generic_string();
      auto bytes = read_all(p);
      FileEntry e{bytes.size(), hex_digest(bytes), 0, clock_.now(), ++s->touch_counter};
      if (tier == Tier::disk) s->resident += e.size;
      tier_map(*s, tier)[rel] = std::move(e);
    }
  }

  std::lock_guard lock(sites_mutex_);
  if (sites_.contains(s->config.site_id)) {
    throw Error(Errc::already_exists, "site " + s->config.site_id + " already configured");
  }
  auto id = s->config.site_id;
  sites_.emplace(id, std::move(s));
}

bool Storage::has_site(const std::string& id) const {
  std::lock_guard lock(sites_mutex_);
  return sites_.contains(id);
}

std::vector<std::string> Storage::sites() const {
  std::lock_guard lock(sites_mutex_);
  std::vector<std::string> out;
  for (const auto& [id, _] : sites_) out.push_back(id);
  return out;
}

SiteConfig Storage::config(const std::string& id) const { return site(id).config; }

Storage::Site& Storage::site(const std::string& id) const {
  std::lock_guard lock(sites_mutex_);
  auto it = sites_.find(id);
  if (it == sites_.end()) throw Error(Errc::not_found, "unknown site " + id);
  return *it->second;
}

Storage::Site& Storage::site_for_reservation(const std::string& reservation_id) const {
  std::vector<Site*> all;
  {
    std::lock_guard lock(sites_mutex_);
    for (auto& [_, s] : sites_) all.push_back(s.get());
  }
  for (auto* s : all) {
    std::lock_guard lock(s->mutex);
    if (s->reservations.contains(reservation_id)) return *s;
  }
  throw Error(Errc::not_found, "unknown reservation " + reservation_id);
}

std::map<std::string, Storage::FileEntry>& Storage::tier_map(Site& s, Tier tier) const {
  return tier == Tier::disk ? s.disk : s.archive;
}

fs::path Storage::file_path(const Site& s, Tier tier, const std::string& path) const {
  return s.dir / std::string(to_string(tier)) / path;
}

StoredFile Storage::describe(const Site& s, Tier tier, const std::string& path, const FileEntry& e) const {
  return {Pfn{s.config.site_id, tier, path}.str(), e.size, e.digest, tier, e.pins > 0, e.last_access};
}

void Storage::touch(Site& s, FileEntry& e) const {
  e.last_access = clock_.now();
  e.touch = ++s.touch_counter;
}

bool Storage::draw(Site& s, const std::string& key, double p) {
  if (p <= 0.0) return false;
  auto attempt = s.attempts[key]++;
  return failure_draw(s.config.seed, key, attempt) < p;
}

void Storage::set_event_sink(std::function<void(const StorageEvent&)> sink) {
  std::lock_guard lock(events_mutex_);
  sink_ = std::move(sink);
}

void Storage::emit(const std::string& site, const std::string& kind, const std::string& path,
                   std::uint64_t bytes, Millis at) {
  std::lock_guard lock(events_mutex_);
  events_.push_back({at, site, kind, path, bytes});
  if (sink_) sink_(events_.back());
}

std::vector<StorageEvent> Storage::events() const {
  std::lock_guard lock(events_mutex_);
  return events_;
}

std::size_t Storage::event_count(const std::string& site, const std::string& kind) const {
  std::lock_guard lock(events_mutex_);
  return static_cast<std::size_t>(std::count_if(events_.begin(), events_.end(), [&](const auto& e) {
    return e.site == site && e.kind == kind;
  }));
}

void Storage::ensure_space(Site& s, std::uint64_t needed) {
  auto used = s.resident + s.reserved;
  auto cap = s.config.disk_capacity_bytes;
  if (used <= cap && needed <= cap - used) return;
  std::uint64_t shortfall = used + needed - cap;
  std::vector<EvictionCandidate> candidates;
  for (const auto& [path, e] : s.disk) {
    if (e.pins == 0) candidates.push_back({path, e.size, e.touch});
  }
  auto victims = choose_victims(std::move(candidates), shortfall);
  if (!victims) {
    throw Error(Errc::no_space, "insufficient space on " + s.config.site_id + " for " +
                                    std::to_string(needed) + " bytes");
  }
  for (const auto& path : *victims) drop_disk_file(s, path, "evicted");
}

void Storage::drop_disk_file(Site& s, const std::string& path, const char* event_kind) {
  auto it = s.disk.find(path);
  if (it == s.disk.end()) return;
  fs::remove(file_path(s, Tier::disk, path));
  s.resident -= it->second.size;
  auto size = it->second.size;
  s.disk.erase(it);
  emit(s.config.site_id, event_kind, path, size, clock_.now());
}

StoredFile Storage::commit(Site& s, Tier tier, const std::string& path, std::span<const std::uint8_t> bytes,
                           const std::string& digest) {
  write_atomic(s.dir / "tmp" / tmp_name(), file_path(s, tier, path), bytes);
  auto& e = tier_map(s, tier)[path];
  e.size = bytes.size();
  e.digest = digest;
  touch(s, e);
  if (tier == Tier::disk) s.resident += e.size;
  return describe(s, tier, path, e);
}

SpaceReservation Storage::reserve_space(const std::string& site_id, std::uint64_t bytes) {
  if (bytes == 0) throw Error(Errc::invalid_argument, "reservation must be positive");
  auto& s = site(site_id);
  std::lock_guard lock(s.mutex);
  ensure_space(s, bytes);
  SpaceReservation r;
  {
    std::lock_guard ids(sites_mutex_);
    r.reservation_id = "res-" + std::to_string(next_reservation_++);
  }
  r.site_id = site_id;
  r.bytes = bytes;
  r.created_at = clock_.now();
  s.reserved += bytes;
  s.reservations[r.reservation_id] = r;
  emit(site_id, "reserved", r.reservation_id, bytes, r.created_at);
  return r;
}

void Storage::release_reservation(const std::string& reservation_id) {
  auto& s = site_for_reservation(reservation_id);
  std::lock_guard lock(s.mutex);
  auto it = s.reservations.find(reservation_id);
  if (it == s.reservations.end()) throw Error(Errc::not_found, "unknown reservation " + reservation_id);
  s.reserved -= it->second.remaining();
  emit(s.config.site_id, "released", reservation_id, it->second.remaining(), clock_.now());
  s.reservations.erase(it);
}

std::optional<SpaceReservation> Storage::reservation(const std::string& reservation_id) const {
  try {
    auto& s = site_for_reservation(reservation_id);
    std::lock_guard lock(s.mutex);
    auto it = s.reservations.find(reservation_id);
    if (it != s.reservations.end()) return it->second;
  } catch (const Error&) {
  }
  return std::nullopt;
}

StoredFile Storage::stage(const std::string& site_id, const std::string& archive_path,
                          const std::string& reservation_id) {
  auto& s = site(site_id);
  std::lock_guard lock(s.mutex);
  auto now = clock_.now();
  auto src = s.archive.find(archive_path);
  if (src == s.archive.end()) throw Error(Errc::not_found, "unknown archive path " + archive_path);
  auto res = s.reservations.find(reservation_id);
  if (res == s.reservations.end()) throw Error(Errc::not_found, "unknown reservation " + reservation_id);
  auto size = src->second.size;
  if (res->second.remaining() < size) {
    throw Error(Errc::no_space, "reservation " + reservation_id + " does not cover " + archive_path);
  }
  emit(site_id, "queued", archive_path, size, now);
  if (draw(s, "stage:" + archive_path, s.config.p_stage_fail)) {
    emit(site_id, "stage_failed", archive_path, size, now);
    throw Error(Errc::transient, "stage transient failure for " + archive_path);
  }
  emit(site_id, "staging", archive_path, size, now);
  auto bytes = read_all(file_path(s, Tier::archive, archive_path));
  auto digest = hex_digest(bytes);
  if (digest != src->second.digest) throw Error(Errc::corrupt, "archive copy of " + archive_path + " is damaged");
  touch(s, src->second);

  int pins = 0;
  if (auto old = s.disk.find(archive_path); old != s.disk.end()) {
    pins = old->second.pins;
    drop_disk_file(s, archive_path, "replaced");
  }
  res->second.used += size;
  s.reserved -= size;
  auto stored = commit(s, Tier::disk, archive_path, bytes, digest);
  s.disk[archive_path].pins = pins + 1;
  stored.pinned = true;
  emit(site_id, "staged", archive_path, size, now + stage_latency(site_id, size));
  return stored;
}

StoredFile Storage::archive_put(const std::string& site_id, const std::string& disk_path) {
  auto& s = site(site_id);
  std::lock_guard lock(s.mutex);
  auto now = clock_.now();
  auto src = s.disk.find(disk_path);
  if (src == s.disk.end()) throw Error(Errc::not_found, "no disk copy of " + disk_path);
  auto size = src->second.size;
  emit(site_id, "archive_queued", disk_path, size, now);
  if (draw(s, "archive:" + disk_path, s.config.p_stage_fail)) {
    emit(site_id, "archive_failed", disk_path, size, now);
    throw Error(Errc::transient, "archive transient failure for " + disk_path);
  }
  auto bytes = read_all(file_path(s, Tier::disk, disk_path));
  auto digest = hex_digest(bytes);
  if (digest != src->second.digest) throw Error(Errc::corrupt, "disk copy of " + disk_path + " is damaged");
  touch(s, src->second);
  auto stored = commit(s, Tier::archive, disk_path, bytes, digest);
  emit(site_id, "archived", disk_path, size, now + stage_latency(site_id, size));
  return stored;
}

TransferResult Storage::transfer(const std::string& src_pfn, const std::string& dst_pfn,
                                 const std::optional<std::string>& expected_digest,
                                 const std::optional<std::string>& reservation_id) {
  auto src = require_pfn(src_pfn);
  auto dst = require_pfn(dst_pfn);
  if (src == dst) throw Error(Errc::invalid_argument, "source and destination are the same");
  auto& from = site(src.site);
  auto& to = site(dst.site);

  Bytes bytes;
  std::string source_digest;
  auto now = clock_.now();
  {
    std::lock_guard lock(from.mutex);
    auto& files = tier_map(from, src.tier);
    auto it = files.find(src.path);
    if (it == files.end()) throw Error(Errc::not_found, "no such file " + src_pfn);
    bytes = read_all(file_path(from, src.tier, src.path));
    source_digest = it->second.digest;
    touch(from, it->second);
    auto key = "transfer:" + src_pfn + ">" + dst_pfn;
    if (draw(from, key, from.config.p_transient)) {
      emit(src.site, "transfer_failed", src.path, bytes.size(), now);
      throw Error(Errc::transient, "transient network failure " + src_pfn + " -> " + dst_pfn);
    }
    if (draw(from, "corrupt:" + key, from.config.p_corrupt) && !bytes.empty()) {
      bytes[bytes.size() / 2] ^= 0x5a;
    }
  }

  auto received = hex_digest(bytes);
  const auto& expected = expected_digest ? *expected_digest : source_digest;
  if (received != expected) {
    emit(dst.site, "checksum_mismatch", dst.path, bytes.size(), now);
    throw Error(Errc::checksum_mismatch, "digest mismatch delivering " + dst_pfn);
  }

  std::lock_guard lock(to.mutex);
  int pins = 0;
  if (dst.tier == Tier::disk) {
    if (auto old = to.disk.find(dst.path); old != to.disk.end()) {
      pins = old->second.pins;
      drop_disk_file(to, dst.path, "replaced");
    }
    if (reservation_id) {
      auto res = to.reservations.find(*reservation_id);
      if (res == to.reservations.end()) throw Error(Errc::not_found, "unknown reservation " + *reservation_id);
      if (res->second.remaining() < bytes.size()) {
        throw Error(Errc::no_space, "reservation " + *reservation_id + " does not cover " + dst_pfn);
      }
      res->second.used += bytes.size();
      to.reserved -= bytes.size();
    } else {
      ensure_space(to, bytes.size());
    }
  }
  commit(to, dst.tier, dst.path, bytes, received);
  if (dst.tier == Tier::disk) to.disk[dst.path].pins = pins;
  auto latency = transfer_latency(src.site, bytes.size());
  emit(dst.site, "transfer", dst.path, bytes.size(), now + latency);
  return {bytes.size(), received, latency};
}

TransferResult Storage::transfer_to_local(const std::string& src_pfn, const fs::path& dest,
                                          const std::optional<std::string>& expected_digest) {
  auto src = require_pfn(src_pfn);
  auto& from = site(src.site);
  Bytes bytes;
  std::string source_digest;
  auto now = clock_.now();
  {
    std::lock_guard lock(from.mutex);
    auto& files = tier_map(from, src.tier);
    auto it = files.find(src.path);
    if (it == files.end()) throw Error(Errc::not_found, "no such file " + src_pfn);
    bytes = read_all(file_path(from, src.tier, src.path));
    source_digest = it->second.digest;
    touch(from, it->second);
    auto key = "transfer:" + src_pfn + ">" + dest.generic_string();
    if (draw(from, key, from.config.p_transient)) {
      emit(src.site, "transfer_failed", src.path, bytes.size(), now);
      throw Error(Errc::transient, "transient network failure " + src_pfn + " -> " + dest.string());
    }
    if (draw(from, "corrupt:" + key, from.config.p_corrupt) && !bytes.empty()) {
      bytes[bytes.size() / 2] ^= 0x5a;
    }
  }
  auto received = hex_digest(bytes);
  if (received != (expected_digest ? *expected_digest : source_digest)) {
    emit("local", "checksum_mismatch", dest.generic_string(), bytes.size(), now);
    throw Error(Errc::checksum_mismatch, "digest mismatch delivering " + dest.string());
  }
  auto parent = dest.has_parent_path() ? dest.parent_path() : fs::path(".");
  write_atomic(parent / ("." + tmp_name()), dest, bytes);
  auto latency = transfer_latency(src.site, bytes.size());
  emit("local", "transfer", dest.generic_string(), bytes.size(), now + latency);
  return {bytes.size(), received, latency};
}

StoredFile Storage::put_file(const std::string& pfn, std::span<const std::uint8_t> bytes) {
  auto p = require_pfn(pfn);
  auto& s = site(p.site);
  std::lock_guard lock(s.mutex);
  int pins = 0;
  if (p.tier == Tier::disk) {
    if (auto old = s.disk.find(p.path); old != s.disk.end()) {
      pins = old->second.pins;
      drop_disk_file(s, p.path, "replaced");
    }
    ensure_space(s, bytes.size());
  }
  auto stored = commit(s, p.tier, p.path, bytes, hex_digest(bytes));
  if (p.tier == Tier::disk) {
    s.disk[p.path].pins = pins;
    stored.pinned = pins > 0;
  }
  emit(p.site, "put", p.path, bytes.size(), clock_.now());
  return stored;
}

Bytes Storage::read_file(const std::string& pfn) {
  auto p = require_pfn(pfn);
  auto& s = site(p.site);
  std::lock_guard lock(s.mutex);
  auto& files = tier_map(s, p.tier);
  auto it = files.find(p.path);
  if (it == files.end()) throw Error(Errc::not_found, "no such file " + pfn);
  touch(s, it->second);
  return read_all(file_path(s, p.tier, p.path));
}

std::optional<StoredFile> Storage::stat(const std::string& pfn) const {
  auto p = parse_pfn(pfn);
  if (!p || !has_site(p->site)) return std::nullopt;
  auto& s = site(p->site);
  std::lock_guard lock(s.mutex);
  auto& files = tier_map(s, p->tier);
  auto it = files.find(p->path);
  if (it == files.end()) return std::nullopt;
  return describe(s, p->tier, p->path, it->second);
}

std::vector<StoredFile> Storage::list(const std::string& dir_pfn) const {
  auto p = require_pfn(dir_pfn, true);
  auto& s = site(p.site);
  std::lock_guard lock(s.mutex);
  auto& files = tier_map(s, p.tier);
  std::string prefix = p.path.empty() ? "" : p.path + "/";
  std::vector<StoredFile> out;
  for (auto it = files.lower_bound(prefix); it != files.end() && it->first.starts_with(prefix); ++it) {
    out.push_back(describe(s, p.tier, it->first, it->second));
  }
  return out;
}

bool Storage::is_directory(const std::string& pfn) const {
  auto p = parse_pfn(pfn, true);
  if (!p || !has_site(p->site)) return false;
  return fs::is_directory(file_path(site(p->site), p->tier, p->path));
}

void Storage::make_directory(const std::string& pfn) {
  auto p = require_pfn(pfn, true);
  auto& s = site(p.site);
  std::lock_guard lock(s.mutex);
  auto path = file_path(s, p.tier, p.path);
  if (fs::is_regular_file(path)) throw Error(Errc::already_exists, pfn + " is a file");
  fs::create_directories(path);
}

void Storage::pin(const std::string& pfn) {
  auto p = require_pfn(pfn);
  if (p.tier != Tier::disk) throw Error(Errc::invalid_argument, "only disk files can be pinned");
  auto& s = site(p.site);
  std::lock_guard lock(s.mutex);
  auto it = s.disk.find(p.path);
  if (it == s.disk.end()) throw Error(Errc::not_found, "no such file " + pfn);
  ++it->second.pins;
  touch(s, it->second);
}

void Storage::unpin(const std::string& pfn) {
  auto p = require_pfn(pfn);
  auto& s = site(p.site);
  std::lock_guard lock(s.mutex);
  auto it = s.disk.find(p.path);
  if (it == s.disk.end()) throw Error(Errc::not_found, "no such file " + pfn);
  if (it->second.pins > 0) --it->second.pins;
}

void Storage::evict(const std::string& pfn) {
  auto p = require_pfn(pfn);
  if (p.tier != Tier::disk) throw Error(Errc::invalid_argument, "only disk files can be evicted");
  auto& s = site(p.site);
  std::lock_guard lock(s.mutex);
  auto it = s.disk.find(p.path);
  if (it == s.disk.end()) throw Error(Errc::not_found, "no such file " + pfn);
  if (it->second.pins > 0) throw Error(Errc::failed_precondition, pfn + " is pinned");
  drop_disk_file(s, p.path, "evicted");
}

void Storage::remove(const std::string& pfn) {
  auto p = require_pfn(pfn);
  auto& s = site(p.site);
  std::lock_guard lock(s.mutex);
  if (p.tier == Tier::disk) {
    if (!s.disk.contains(p.path)) throw Error(Errc::not_found, "no such file " + pfn);
    drop_disk_file(s, p.path, "removed");
    return;
  }
  if (s.archive.erase(p.path) == 0) throw Error(Errc::not_found, "no such file " + pfn);
  fs::remove(file_path(s, Tier::archive, p.path));
  emit(p.site, "removed", p.path, 0, clock_.now());
}

std::uint64_t Storage::capacity(const std::string& id) const { return site(id).config.disk_capacity_bytes; }

std::uint64_t Storage::disk_usage(const std::string& id) const {
  auto& s = site(id);
  std::lock_guard lock(s.mutex);
  return s.resident + s.reserved;
}

std::uint64_t Storage::resident_bytes(const std::string& id) const {
  auto& s = site(id);
  std::lock_guard lock(s.mutex);
  return s.resident;
}

std::uint64_t Storage::reserved_bytes(const std::string& id) const {
  auto& s = site(id);
  std::lock_guard lock(s.mutex);
  return s.reserved;
}

Millis Storage::stage_latency(const std::string& id, std::uint64_t size) const {
  auto c = config(id);
  return c.stage_base_ms + std::llround(static_cast<double>(size) / kMegabyte * c.stage_per_mb_ms);
}

Millis Storage::transfer_latency(const std::string& id, std::uint64_t size) const {
  auto c = config(id);
  return c.transfer_base_ms + std::llround(static_cast<double>(size) / kMegabyte * c.transfer_per_mb_ms);
}

fs::path Storage::local_path(const std::string& pfn) const {
  auto p = require_pfn(pfn, true);
  return file_path(site(p.site), p.tier, p.path);
}

}  // namespace esg::storage
