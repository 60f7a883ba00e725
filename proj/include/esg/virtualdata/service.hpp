#pragma once

#include <functional>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "esg/catalog/catalog.hpp"
#include "esg/gridfmt/dataset.hpp"
#include "esg/replica/replica_service.hpp"
#include "esg/security/authority.hpp"
#include "esg/storage/storage.hpp"
#include "esg/virtualdata/recipe.hpp"

namespace esg::virtualdata {

struct CacheEntry {
  std::string key;
  std::string pfn;
  std::string digest;
  Millis created_at = 0;
  std::map<std::string, std::uint64_t> source_versions;
};

struct CacheStats {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t builds = 0;
  std::uint64_t invalidations = 0;
  std::uint64_t entries = 0;
  std::uint64_t fetches = 0;
};

/// One read of an input file during materialization.
struct FetchEvent {
  std::string lfn;
  std::string pfn;
  std::uint64_t bytes = 0;
};

struct Materialized {
  gridfmt::GridDataset dataset;
  Bytes bytes;
  std::string pfn;
  std::string key;
  bool cache_hit = false;
};

/// Canonical cache key: name plus the normalized constraint.
std::string cache_key(std::string_view name, std::optional<std::string_view> constraint);

class VirtualDataService {
 public:
  struct Options {
    std::string cache_site = "portal";
    /// Publish materialized locations of unconstrained results as replicas.
    bool republish = true;
    /// Supplies the credential used for republication; unset disables it.
    std::function<std::string()> service_token;
  };

  VirtualDataService(catalog::Catalog& catalog, replica::ReplicaService& replicas, storage::Storage& storage,
                     security::Authority& authority, Options options);

  /// Publishes a virtual record for `metadata.logical_name` holding the
  /// recipe; returns the record id.
  std::string define_virtual(catalog::MetadataRecord metadata, const ExprPtr& expr, std::string_view token);
  /// Logical names of records matching the query, physical and virtual alike.
  std::vector<std::string> discover(const catalog::SearchQuery& query) const;
  Materialized instantiate(const std::string& name, std::optional<std::string> constraint, std::string_view token);
  bool cache_lookup(const std::string& name, std::optional<std::string> constraint) const;

  CacheStats stats() const;
  std::vector<FetchEvent> fetch_events() const;
  std::optional<CacheEntry> cache_entry(const std::string& key) const;

 private:
  struct Graph {
    std::map<std::string, catalog::MetadataRecord> records;
    std::map<std::string, ExprPtr> recipes;
  };

  void resolve(const std::string& name, Graph& g, std::vector<std::string>& stack) const;
  std::map<std::string, std::uint64_t> current_versions(const std::map<std::string, std::uint64_t>& names) const;
  bool valid(const CacheEntry& e) const;
  gridfmt::GridDataset evaluate(const Expr& e, const Graph& g, std::map<std::string, gridfmt::GridDataset>& loaded);
  gridfmt::GridDataset load_physical(const catalog::MetadataRecord& record);
  Materialized build(const std::string& name, const std::optional<std::string>& constraint,
                     const std::string& key, const Graph& g);

  catalog::Catalog& catalog_;
  replica::ReplicaService& replicas_;
  storage::Storage& storage_;
  security::Authority& authority_;
  Options options_;
  mutable std::mutex mutex_;
  std::map<std::string, CacheEntry> cache_;
  std::map<std::string, std::shared_future<Materialized>> inflight_;
  mutable CacheStats stats_;
  std::vector<FetchEvent> fetches_;
};

}  // namespace esg::virtualdata
