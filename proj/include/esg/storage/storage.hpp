#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "esg/common/clock.hpp"
#include "esg/common/crypto.hpp"
#include "esg/common/names.hpp"
#include "esg/common/record_log.hpp"

namespace esg::storage {

constexpr double kMegabyte = 1024.0 * 1024.0;

struct SiteConfig {
  std::string site_id;
  std::uint64_t disk_capacity_bytes = 0;
  Millis stage_base_ms = 0;
  double stage_per_mb_ms = 0;
  Millis transfer_base_ms = 0;
  double transfer_per_mb_ms = 0;
  double p_transient = 0;   // per transfer attempt
  double p_stage_fail = 0;  // per stage or archive attempt
  double p_corrupt = 0;     // per transfer attempt, detected by digest check
  std::uint64_t seed = 0;
};

SiteConfig site_config_from_json(const Json& j);
Json to_json(const SiteConfig& c);

struct SpaceReservation {
  std::string reservation_id;
  std::string site_id;
  std::uint64_t bytes = 0;
  std::uint64_t used = 0;
  Millis created_at = 0;
  bool released = false;

  std::uint64_t remaining() const { return released ? 0 : bytes - used; }
};

struct StoredFile {
  std::string pfn;
  std::uint64_t size = 0;
  std::string digest;  // hex SHA-256
  Tier tier = Tier::disk;
  bool pinned = false;
  Millis last_access = 0;
};

struct TransferResult {
  std::uint64_t bytes = 0;
  std::string digest;
  Millis latency_ms = 0;
};

struct StorageEvent {
  Millis at = 0;
  std::string site;
  std::string kind;  // queued, staging, staged, stage_failed, transfer, ...
  std::string path;
  std::uint64_t bytes = 0;
};

/// Unpinned disk file considered for eviction.
struct EvictionCandidate {
  std::string path;
  std::uint64_t size = 0;
  std::uint64_t last_touch = 0;
};

/// LRU victim choice: least recently touched first until `needed` bytes are
/// covered. Returns nothing when even evicting everything would not suffice.
std::optional<std::vector<std::string>> choose_victims(std::vector<EvictionCandidate> candidates,
                                                       std::uint64_t needed);

/// Deterministic uniform draw in [0,1) for a keyed attempt.
double failure_draw(std::uint64_t seed, std::string_view key, std::uint64_t attempt);

/// Simulated hierarchical storage for a set of sites. Bytes live under
/// <root>/<site>/{disk,archive}; the disk tier is capacity limited.
class Storage {
 public:
  Storage(const Clock& clock, std::filesystem::path root, std::vector<SiteConfig> sites = {});
  ~Storage();
  Storage(const Storage&) = delete;
  Storage& operator=(const Storage&) = delete;

  /// Adds a site, picking up any files already present under its directory.
  void add_site(SiteConfig config);
  bool has_site(const std::string& site) const;
  std::vector<std::string> sites() const;
  SiteConfig config(const std::string& site) const;
  const std::filesystem::path& root() const { return root_; }

  void set_event_sink(std::function<void(const StorageEvent&)> sink);
  std::vector<StorageEvent> events() const;
  std::size_t event_count(const std::string& site, const std::string& kind) const;

  SpaceReservation reserve_space(const std::string& site, std::uint64_t bytes);
  void release_reservation(const std::string& reservation_id);
  std::optional<SpaceReservation> reservation(const std::string& reservation_id) const;

  /// Archive -> disk copy charged against the reservation. The staged copy is
  /// pinned; callers unpin when done with it.
  StoredFile stage(const std::string& site, const std::string& archive_path,
                   const std::string& reservation_id);
  /// Disk -> archive copy on the same site.
  StoredFile archive_put(const std::string& site, const std::string& disk_path);
  /// Checksummed copy. The destination appears only after verification.
  /// Disk destinations draw from the reservation when given, otherwise space
  /// is acquired (evicting if needed).
  TransferResult transfer(const std::string& src_pfn, const std::string& dst_pfn,
                          const std::optional<std::string>& expected_digest = std::nullopt,
                          const std::optional<std::string>& reservation_id = std::nullopt);
  /// Same contract, delivering into a plain local file outside the grid.
  TransferResult transfer_to_local(const std::string& src_pfn, const std::filesystem::path& dest,
                                   const std::optional<std::string>& expected_digest = std::nullopt);

  StoredFile put_file(const std::string& pfn, std::span<const std::uint8_t> bytes);
  Bytes read_file(const std::string& pfn);
  std::optional<StoredFile> stat(const std::string& pfn) const;
  /// Files under a directory pfn (recursive), sorted by path.
  std::vector<StoredFile> list(const std::string& dir_pfn) const;
  bool is_directory(const std::string& pfn) const;
  void make_directory(const std::string& pfn);

  void pin(const std::string& pfn);
  void unpin(const std::string& pfn);
  /// Removes an unpinned disk file.
  void evict(const std::string& pfn);
  /// Removes a file from either tier regardless of pins.
  void remove(const std::string& pfn);

  std::uint64_t capacity(const std::string& site) const;
  /// Resident disk bytes plus unused reserved bytes.
  std::uint64_t disk_usage(const std::string& site) const;
  std::uint64_t resident_bytes(const std::string& site) const;
  std::uint64_t reserved_bytes(const std::string& site) const;

  Millis stage_latency(const std::string& site, std::uint64_t size) const;
  Millis transfer_latency(const std::string& site, std::uint64_t size) const;
  std::filesystem::path local_path(const std::string& pfn) const;

 private:
  struct FileEntry {
    std::uint64_t size = 0;
    std::string digest;
    int pins = 0;
    Millis last_access = 0;
    std::uint64_t touch = 0;
  };
  struct Site {
    SiteConfig config;
    std::filesystem::path dir;
    mutable std::mutex mutex;
    std::map<std::string, FileEntry> disk;
    std::map<std::string, FileEntry> archive;
    std::map<std::string, SpaceReservation> reservations;
    std::uint64_t resident = 0;
    std::uint64_t reserved = 0;
    std::uint64_t touch_counter = 0;
    std::map<std::string, std::uint64_t> attempts;
  };

  Site& site(const std::string& id) const;
  Site& site_for_reservation(const std::string& reservation_id) const;
  std::map<std::string, FileEntry>& tier_map(Site& s, Tier tier) const;
  std::filesystem::path file_path(const Site& s, Tier tier, const std::string& path) const;
  StoredFile describe(const Site& s, Tier tier, const std::string& path, const FileEntry& e) const;
  void touch(Site& s, FileEntry& e) const;
  bool draw(Site& s, const std::string& key, double p);
  // The following expect s.mutex held.
  void ensure_space(Site& s, std::uint64_t needed);
  void drop_disk_file(Site& s, const std::string& path, const char* event_kind);
  StoredFile commit(Site& s, Tier tier, const std::string& path, std::span<const std::uint8_t> bytes,
                    const std::string& digest);
  void emit(const std::string& site, const std::string& kind, const std::string& path,
            std::uint64_t bytes, Millis at);

  const Clock& clock_;
  std::filesystem::path root_;
  mutable std::mutex sites_mutex_;
  std::map<std::string, std::unique_ptr<Site>> sites_;
  std::uint64_t next_reservation_ = 1;
  mutable std::mutex events_mutex_;
  std::vector<StorageEvent> events_;
  std::function<void(const StorageEvent&)> sink_;
};

}  // namespace esg::storage
