#include "esg/virtualdata/service.hpp"

#include <algorithm>

#include "esg/common/error.hpp"
#include "esg/common/names.hpp"
#include "esg/gridfmt/codec.hpp"
#include "esg/gridfmt/constraint.hpp"
#include "esg/gridfmt/kernels.hpp"

namespace esg::virtualdata {
namespace {

std::optional<std::string> canonical(const std::optional<std::string>& constraint) {
  if (!constraint || constraint->find_first_not_of(" \t\r\n") == std::string::npos) return std::nullopt;
  auto c = gridfmt::parse_constraint(*constraint);
  if (c.projections.empty()) return std::nullopt;
  return gridfmt::render(c);
}

}  // namespace

std::string cache_key(std::string_view name, std::optional<std::string_view> constraint) {
  auto c = canonical(constraint ? std::optional<std::string>(std::string(*constraint)) : std::nullopt);
  return std::string(name) + "?" + c.value_or("");
}

VirtualDataService::VirtualDataService(catalog::Catalog& catalog, replica::ReplicaService& replicas,
                                       storage::Storage& storage, security::Authority& authority, Options options)
    : catalog_(catalog), replicas_(replicas), storage_(storage), authority_(authority), options_(std::move(options)) {}

void VirtualDataService::resolve(const std::string& name, Graph& g, std::vector<std::string>& stack) const {
  if (std::find(stack.begin(), stack.end(), name) != stack.end()) {
    throw Error(Errc::invalid_argument, "recipe cycle through " + name);
  }
  if (g.records.contains(name)) return;
  auto record = catalog_.find_by_name(name);
  if (!record) throw Error(Errc::not_found, "unknown input " + name);
  g.records[name] = *record;
  if (!record->is_virtual()) return;
  auto text = catalog_.recipe(*record->recipe_ref);
  if (!text) throw Error(Errc::corrupt, "missing recipe for " + name);
  auto expr = parse_recipe(*text);
  g.recipes[name] = expr;
  stack.push_back(name);
  for (const auto& r : references(*expr)) resolve(r, g, stack);
  stack.pop_back();
}

std::string VirtualDataService::define_virtual(catalog::MetadataRecord metadata, const ExprPtr& expr,
                                               std::string_view token) {
  const auto name = metadata.logical_name;
  if (!valid_lfn(name)) throw Error(Errc::invalid_argument, "malformed name " + name);
  auto decision = authority_.authorize(token, name, security::Action::publish);
  if (!decision) throw Error(Errc::denied, decision.reason);
  // Round-trip validates the tree the same way a stored recipe is read back.
  auto text = recipe_text(*expr);
  auto checked = parse_recipe(text);

  Graph g;
  std::vector<std::string> stack{name};
  auto refs = references(*checked);
  for (const auto& r : refs) resolve(r, g, stack);

  metadata.recipe_ref = name;
  metadata.constituent_files.clear();
  for (const auto& r : refs) {
    auto& from = metadata.pedigree.derived_from;
    if (std::find(from.begin(), from.end(), r) == from.end()) from.push_back(r);
  }
  return catalog_.publish(std::move(metadata), token, text);
}

std::vector<std::string> VirtualDataService::discover(const catalog::SearchQuery& query) const {
  std::vector<std::string> names;
  for (const auto& r : catalog_.search_records(query)) names.push_back(r.logical_name);
  return names;
}

std::map<std::string, std::uint64_t> VirtualDataService::current_versions(
    const std::map<std::string, std::uint64_t>& names) const {
  std::map<std::string, std::uint64_t> out;
  for (const auto& [name, _] : names) {
    auto r = catalog_.find_by_name(name);
    out[name] = r ? r->version : 0;
  }
  return out;
}

bool VirtualDataService::valid(const CacheEntry& e) const {
  if (current_versions(e.source_versions) != e.source_versions) return false;
  auto st = storage_.stat(e.pfn);
  return st && st->digest == e.digest;
}

bool VirtualDataService::cache_lookup(const std::string& name, std::optional<std::string> constraint) const {
  auto key = cache_key(name, constraint ? std::optional<std::string_view>(*constraint) : std::nullopt);
  std::lock_guard lock(mutex_);
  auto it = cache_.find(key);
  return it != cache_.end() && valid(it->second);
}

gridfmt::GridDataset VirtualDataService::load_physical(const catalog::MetadataRecord& record) {
  std::vector<gridfmt::GridDataset> parts;
  for (const auto& file : record.constituent_files) {
    std::optional<Bytes> bytes;
    std::string from;
    for (const auto& pfn : replicas_.lookup(file)) {
      try {
        bytes = storage_.read_file(pfn);
        from = pfn;
        break;
      } catch (const Error&) {
        // Try the next replica.
      }
    }
    if (!bytes) throw Error(Errc::unavailable, "input unreadable: " + file);
    {
      std::lock_guard lock(mutex_);
      fetches_.push_back({file, from, bytes->size()});
    }
    parts.push_back(gridfmt::read_dataset(*bytes));
  }
  if (parts.size() == 1) return std::move(parts.front());
  auto axis = parts.front().unlimited_dimension();
  if (!axis) throw Error(Errc::invalid_argument, record.logical_name + " has several files but no record axis");
  return gridfmt::concat(parts, axis->name);
}

gridfmt::GridDataset VirtualDataService::evaluate(const Expr& e, const Graph& g,
                                                  std::map<std::string, gridfmt::GridDataset>& loaded) {
  switch (e.kind) {
    case Expr::Kind::ref: {
      if (auto it = loaded.find(e.name); it != loaded.end()) return it->second;
      const auto& record = g.records.at(e.name);
      auto ds = record.is_virtual() ? evaluate(*g.recipes.at(e.name), g, loaded) : load_physical(record);
      loaded[e.name] = ds;
      return ds;
    }
    case Expr::Kind::subset:
      return gridfmt::subset(evaluate(*e.inputs.at(0), g, loaded), gridfmt::parse_constraint(e.constraint));
    case Expr::Kind::concat: {
      std::vector<gridfmt::GridDataset> parts;
      for (const auto& in : e.inputs) parts.push_back(evaluate(*in, g, loaded));
      return gridfmt::concat(parts, e.axis);
    }
  }
  throw Error(Errc::invalid_argument, "bad expression");
}

Materialized VirtualDataService::build(const std::string& name, const std::optional<std::string>& constraint,
                                       const std::string& key, const Graph& g) {
  std::map<std::string, gridfmt::GridDataset> loaded;
  auto ds = evaluate(*ref(name), g, loaded);
  if (constraint) ds = gridfmt::subset(ds, gridfmt::parse_constraint(*constraint));
  Materialized m;
  m.bytes = gridfmt::write_dataset(ds);
  m.dataset = std::move(ds);
  m.key = key;
  auto digest = to_hex(sha256(as_bytes(key)));
  m.pfn = Pfn{options_.cache_site, Tier::disk, "vds/" + lfn_path(name) + "/" + digest.substr(0, 16) + ".esgn"}.str();
  storage_.put_file(m.pfn, m.bytes);
  if (options_.republish && !constraint && options_.service_token && g.records.at(name).is_virtual()) {
    try {
      replicas_.add_replica(name, m.pfn, options_.service_token());
    } catch (const Error&) {
      // Republication is best effort; the cache entry still serves.
    }
  }
  return m;
}

Materialized VirtualDataService::instantiate(const std::string& name, std::optional<std::string> constraint,
                                             std::string_view token) {
  auto decision = authority_.authorize(token, name, security::Action::read);
  if (!decision) throw Error(Errc::denied, decision.reason);
  Graph g;
  std::vector<std::string> stack;
  resolve(name, g, stack);
  // Every input is checked before anything is fetched.
  for (const auto& [input, _] : g.records) {
    if (input == name) continue;
    auto d = authority_.authorize(token, input, security::Action::read);
    if (!d) throw Error(Errc::denied, d.reason + " for " + input);
  }

  auto canon = canonical(constraint);
  auto key = name + "?" + canon.value_or("");
  std::map<std::string, std::uint64_t> versions;
  for (const auto& [n, r] : g.records) versions[n] = r.version;

  std::promise<Materialized> promise;
  {
    std::unique_lock lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) {
      auto st = storage_.stat(it->second.pfn);
      if (it->second.source_versions == versions && st && st->digest == it->second.digest) {
        Materialized m;
        m.bytes = storage_.read_file(it->second.pfn);
        m.dataset = gridfmt::read_dataset(m.bytes);
        m.pfn = it->second.pfn;
        m.key = key;
        m.cache_hit = true;
        ++stats_.hits;
        return m;
      }
      cache_.erase(it);
      ++stats_.invalidations;
    }
    if (auto it = inflight_.find(key); it != inflight_.end()) {
      auto pending = it->second;
      ++stats_.hits;
      lock.unlock();
      auto m = pending.get();
      m.cache_hit = true;
      return m;
    }
    ++stats_.misses;
    inflight_[key] = promise.get_future().share();
  }

  try {
    auto m = build(name, canon, key, g);
    std::lock_guard lock(mutex_);
    cache_[key] = {key, m.pfn, to_hex(sha256(m.bytes)), authority_.clock().now(), versions};
    ++stats_.builds;
    inflight_.erase(key);
    promise.set_value(m);
    return m;
  } catch (...) {
    std::lock_guard lock(mutex_);
    inflight_.erase(key);
    promise.set_exception(std::current_exception());
    throw;
  }
}

CacheStats VirtualDataService::stats() const {
  std::lock_guard lock(mutex_);
  auto s = stats_;
  s.entries = cache_.size();
  s.fetches = fetches_.size();
  return s;
}

std::vector<FetchEvent> VirtualDataService::fetch_events() const {
  std::lock_guard lock(mutex_);
  return fetches_;
}

std::optional<CacheEntry> VirtualDataService::cache_entry(const std::string& key) const {
  std::lock_guard lock(mutex_);
  auto it = cache_.find(key);
  if (it == cache_.end()) return std::nullopt;
  return it->second;
}

}  // namespace esg::virtualdata
