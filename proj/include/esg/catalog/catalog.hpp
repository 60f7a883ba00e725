#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "esg/catalog/record.hpp"
#include "esg/common/record_log.hpp"
#include "esg/security/authority.hpp"

namespace esg::catalog {

struct SearchQuery {
  /// Whitespace-separated terms; all must occur (case-insensitive) in the
  /// title, summary or parameter descriptions.
  std::string text;
  /// Exact-match filters: investigation_kind, dataset_kind, model_name,
  /// model_version, software_config, hardware_config, prefix, or a relation
  /// name (isDerivedFrom, ...) whose value is the target. Unknown keys match
  /// nothing.
  std::map<std::string, std::string> filters;
};

struct BrowseNode {
  std::string name;
  std::string path;
  std::size_t count = 0;

  bool operator==(const BrowseNode&) const = default;
};

/// Returns PFNs for an LFN; may throw when the location service is down.
using ReplicaLookup = std::function<std::vector<std::string>(const std::string& lfn)>;

class Catalog {
 public:
  struct Options {
    /// Append-only record log; empty keeps the catalog in memory.
    std::filesystem::path log_path;
    /// Service names (svc://...) that relationships may target.
    std::set<std::string> services;
    std::string data_base = "/data/";
  };

  Catalog(security::Authority& authority, Options options);

  /// Stores the record at version 1. A virtual record carries its recipe
  /// text, which the catalog houses under the record's recipe_ref.
  std::string publish(MetadataRecord record, std::string_view token,
                      std::optional<std::string> recipe_text = std::nullopt);

  std::uint64_t update(std::string_view id, const RecordPatch& patch, std::string_view token,
                       std::optional<std::uint64_t> expected_version = std::nullopt);

  std::optional<MetadataRecord> get(std::string_view id) const;
  std::optional<MetadataRecord> get(std::string_view id, std::uint64_t version) const;
  std::optional<MetadataRecord> find_by_name(std::string_view logical_name) const;
  std::optional<std::string> recipe(std::string_view recipe_ref) const;
  std::size_t size() const;

  /// Matching ids, ordered by logical name.
  std::vector<std::string> search(const SearchQuery& query) const;
  std::vector<MetadataRecord> search_records(const SearchQuery& query) const;

  /// Children of an LFN prefix ("lfn://", "lfn://pcm", ...) with the number
  /// of records beneath each.
  std::vector<BrowseNode> browse(std::string_view path) const;

  /// THREDDS-style XML for every record strictly below prefix.
  std::string export_thredds(std::string_view prefix, const ReplicaLookup& lookup) const;

 private:
  struct Entry {
    std::vector<MetadataRecord> versions;  // versions[i].version == i + 1
  };

  void validate(const MetadataRecord& record) const;
  std::vector<const MetadataRecord*> under_prefix(std::string_view prefix) const;
  void apply(const Json& event);

  security::Authority& authority_;
  Options options_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, Entry> entries_;
  std::map<std::string, std::string> by_name_;
  std::map<std::string, std::string> recipes_;
  std::uint64_t next_id_ = 1;
  RecordLog log_;
};

/// "lfn://pcm/" -> "pcm"; "lfn://" or "" -> "".
std::string normalize_prefix(std::string_view path);

}  // namespace esg::catalog
