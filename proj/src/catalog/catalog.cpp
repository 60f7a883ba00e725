#include "esg/catalog/catalog.hpp"

#include <algorithm>
#include <charconv>
#include <mutex>
#include <sstream>

#include "esg/common/error.hpp"
#include "esg/common/names.hpp"

namespace esg::catalog {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<std::string> terms_of(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string term;
  while (in >> term) out.push_back(lower(term));
  return out;
}

std::string haystack(const MetadataRecord& r) {
  std::string text = r.title + "\n" + r.summary;
  for (const auto& p : r.parameters) {
    text += "\n" + p.name + "\n" + p.units + "\n" + p.standard_name;
  }
  return lower(text);
}

bool under(std::string_view logical_name, std::string_view prefix_path) {
  auto path = std::string_view(logical_name).substr(kLfnScheme.size());
  if (prefix_path.empty()) return true;
  return path.size() > prefix_path.size() && path.starts_with(prefix_path) &&
         path[prefix_path.size()] == '/';
}

bool filter_matches(const MetadataRecord& r, const std::string& key, const std::string& value) {
  if (key == "investigation_kind") return to_string(r.classification.investigation) == value;
  if (key == "dataset_kind") return to_string(r.classification.dataset) == value;
  if (key == "model_name") return r.pedigree.model_name == value;
  if (key == "model_version") return r.pedigree.model_version == value;
  if (key == "software_config") return r.pedigree.software_config == value;
  if (key == "hardware_config") return r.pedigree.hardware_config == value;
  if (key == "prefix") return under(r.logical_name, normalize_prefix(value));
  for (const auto& rel : r.relationships()) {
    if (to_string(rel.relation) == key && rel.target == value) return true;
  }
  return false;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20 && c != '\n' && c != '\t') {
          out += ' ';
        } else {
          out += c;
        }
    }
  }
  return out;
}

std::string number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

}  // namespace

std::string normalize_prefix(std::string_view path) {
  if (path.starts_with(kLfnScheme)) path.remove_prefix(kLfnScheme.size());
  while (!path.empty() && path.back() == '/') path.remove_suffix(1);
  while (!path.empty() && path.front() == '/') path.remove_prefix(1);
  return std::string(path);
}

Catalog::Catalog(security::Authority& authority, Options options)
    : authority_(authority), options_(std::move(options)) {
  if (!options_.log_path.empty()) {
    RecordLog::replay_file(options_.log_path, [this](const Json& e) { apply(e); });
    log_.open(options_.log_path);
  }
}

void Catalog::apply(const Json& e) {
  auto record = record_from_json(e.at("record"));
  auto& entry = entries_[record.id];
  if (e.at("op") == "publish") {
    by_name_[record.logical_name] = record.id;
    if (e.contains("recipe")) recipes_[*record.recipe_ref] = e["recipe"].get<std::string>();
    next_id_ = std::max<std::uint64_t>(next_id_, std::stoull(record.id.substr(4)) + 1);
  }
  entry.versions.push_back(std::move(record));
}

void Catalog::validate(const MetadataRecord& r) const {
  auto bad = [&](const std::string& what) {
    return Error(Errc::invalid_argument, "record " + r.logical_name + ": " + what);
  };
  if (!valid_lfn(r.logical_name)) throw bad("logical name is not a valid LFN");
  if (r.constituent_files.empty() == !r.recipe_ref.has_value()) {
    throw bad("exactly one of constituent_files and recipe_ref is required");
  }
  for (const auto& f : r.constituent_files) {
    if (!valid_lfn(f)) throw bad("constituent file '" + f + "' is not a valid LFN");
  }
  for (const auto& f : r.pedigree.derived_from) {
    if (!valid_lfn(f)) throw bad("pedigree source '" + f + "' is not a valid LFN");
  }
  for (const auto& rel : r.classification.relationships) {
    bool resolves = entries_.contains(rel.target) || by_name_.contains(rel.target) ||
                    options_.services.contains(rel.target) || rel.target == r.logical_name;
    if (rel.relation == Relation::has_parameter) {
      resolves = resolves || std::any_of(r.parameters.begin(), r.parameters.end(),
                                         [&](const auto& p) { return p.name == rel.target; });
    }
    if (!resolves) {
      throw bad(std::string(to_string(rel.relation)) + " target '" + rel.target +
                "' does not resolve");
    }
  }
  if (r.time_coverage.min > r.time_coverage.max ||
      r.space_coverage.lat.min > r.space_coverage.lat.max ||
      r.space_coverage.lon.min > r.space_coverage.lon.max) {
    throw bad("coverage range is inverted");
  }
}

std::string Catalog::publish(MetadataRecord record, std::string_view token,
                             std::optional<std::string> recipe_text) {
  if (!valid_lfn(record.logical_name)) {
    throw Error(Errc::invalid_argument, "logical name is not a valid LFN: " + record.logical_name);
  }
  auto d = authority_.authorize(token, record.logical_name, security::Action::publish);
  if (!d) throw Error(Errc::denied, "publish denied: " + d.reason);
  if (record.recipe_ref.has_value() != recipe_text.has_value()) {
    throw Error(Errc::invalid_argument, "a virtual record must be published with its recipe");
  }

  std::unique_lock lock(mutex_);
  if (by_name_.contains(record.logical_name)) {
    throw Error(Errc::already_exists, "duplicate logical name " + record.logical_name);
  }
  record.id = "rec-" + std::to_string(next_id_);
  record.version = 1;
  validate(record);
  Json e;
  e["op"] = "publish";
  e["record"] = to_json(record);
  if (recipe_text) e["recipe"] = *recipe_text;
  log_.append(e);
  apply(e);
  return record.id;
}

std::uint64_t Catalog::update(std::string_view id, const RecordPatch& patch,
                              std::string_view token,
                              std::optional<std::uint64_t> expected_version) {
  std::string logical_name;
  {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(std::string(id));
    if (it == entries_.end()) throw Error(Errc::not_found, "unknown record " + std::string(id));
    logical_name = it->second.versions.back().logical_name;
  }
  auto d = authority_.authorize(token, logical_name, security::Action::publish);
  if (!d) throw Error(Errc::denied, "update denied: " + d.reason);

  std::unique_lock lock(mutex_);
  auto& entry = entries_.at(std::string(id));
  auto next = entry.versions.back();
  if (expected_version && *expected_version != next.version) {
    throw Error(Errc::conflict, "record " + next.id + " is at version " +
                                    std::to_string(next.version) + ", expected " +
                                    std::to_string(*expected_version));
  }
  if (patch.title) next.title = *patch.title;
  if (patch.summary) next.summary = *patch.summary;
  if (patch.classification) next.classification = *patch.classification;
  if (patch.pedigree) next.pedigree = *patch.pedigree;
  if (patch.parameters) next.parameters = *patch.parameters;
  if (patch.time_coverage) next.time_coverage = *patch.time_coverage;
  if (patch.space_coverage) next.space_coverage = *patch.space_coverage;
  if (patch.constituent_files) next.constituent_files = *patch.constituent_files;
  next.version += 1;
  validate(next);
  Json e;
  e["op"] = "update";
  e["record"] = to_json(next);
  log_.append(e);
  apply(e);
  return next.version;
}

std::optional<MetadataRecord> Catalog::get(std::string_view id) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(std::string(id));
  if (it == entries_.end()) return std::nullopt;
  return it->second.versions.back();
}

std::optional<MetadataRecord> Catalog::get(std::string_view id, std::uint64_t version) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(std::string(id));
  if (it == entries_.end() || version == 0 || version > it->second.versions.size()) {
    return std::nullopt;
  }
  return it->second.versions[version - 1];
}

std::optional<MetadataRecord> Catalog::find_by_name(std::string_view logical_name) const {
  std::shared_lock lock(mutex_);
  auto it = by_name_.find(std::string(logical_name));
  if (it == by_name_.end()) return std::nullopt;
  return entries_.at(it->second).versions.back();
}

std::optional<std::string> Catalog::recipe(std::string_view recipe_ref) const {
  std::shared_lock lock(mutex_);
  auto it = recipes_.find(std::string(recipe_ref));
  if (it == recipes_.end()) return std::nullopt;
  return it->second;
}

std::size_t Catalog::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

std::vector<MetadataRecord> Catalog::search_records(const SearchQuery& query) const {
  auto terms = terms_of(query.text);
  std::shared_lock lock(mutex_);
  std::vector<MetadataRecord> out;
  for (const auto& [name, id] : by_name_) {  // ordered by logical name
    const auto& r = entries_.at(id).versions.back();
    auto text = haystack(r);
    bool ok = std::all_of(terms.begin(), terms.end(),
                          [&](const auto& t) { return text.find(t) != std::string::npos; });
    for (const auto& [key, value] : query.filters) {
      ok = ok && filter_matches(r, key, value);
    }
    if (ok) out.push_back(r);
  }
  return out;
}

std::vector<std::string> Catalog::search(const SearchQuery& query) const {
  std::vector<std::string> ids;
  for (const auto& r : search_records(query)) ids.push_back(r.id);
  return ids;
}

std::vector<const MetadataRecord*> Catalog::under_prefix(std::string_view prefix) const {
  auto base = normalize_prefix(prefix);
  std::vector<const MetadataRecord*> out;
  for (const auto& [name, id] : by_name_) {
    if (under(name, base)) out.push_back(&entries_.at(id).versions.back());
  }
  return out;
}

std::vector<BrowseNode> Catalog::browse(std::string_view path) const {
  auto base = normalize_prefix(path);
  std::shared_lock lock(mutex_);
  std::map<std::string, std::size_t> counts;
  for (const auto* r : under_prefix(base)) {
    auto rest = std::string_view(r->logical_name).substr(kLfnScheme.size());
    if (!base.empty()) rest.remove_prefix(base.size() + 1);
    counts[std::string(rest.substr(0, rest.find('/')))] += 1;
  }
  std::vector<BrowseNode> out;
  for (const auto& [child, count] : counts) {
    out.push_back({child, std::string(kLfnScheme) + (base.empty() ? "" : base + "/") + child,
                   count});
  }
  return out;
}

std::string Catalog::export_thredds(std::string_view prefix, const ReplicaLookup& lookup) const {
  std::vector<MetadataRecord> records;
  {
    std::shared_lock lock(mutex_);
    for (const auto* r : under_prefix(prefix)) records.push_back(*r);
  }

  std::ostringstream xml;
  xml << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<catalog xmlns=\"http://www.unidata.ucar.edu/namespaces/thredds/InvCatalog/v1.0\""
      << " name=\"" << xml_escape("ESG holdings under " + std::string(kLfnScheme) +
                                  normalize_prefix(prefix))
      << "\" version=\"1.0.1\">\n"
      << "  <service name=\"data\" serviceType=\"OPeNDAP\" base=\""
      << xml_escape(options_.data_base) << "\"/>\n";
  for (const auto& r : records) {
    std::vector<std::string> replicas;
    bool reachable = true;
    try {
      std::vector<std::string> names{r.logical_name};
      names.insert(names.end(), r.constituent_files.begin(), r.constituent_files.end());
      for (const auto& n : names) {
        for (auto& p : lookup(n)) {
          if (std::find(replicas.begin(), replicas.end(), p) == replicas.end()) {
            replicas.push_back(std::move(p));
          }
        }
      }
    } catch (const std::exception&) {
      reachable = false;
      replicas.clear();
    }
    bool online = reachable && !replicas.empty();
    xml << "  <dataset name=\"" << xml_escape(r.title.empty() ? r.logical_name : r.title)
        << "\" ID=\"" << xml_escape(r.logical_name) << "\" urlPath=\""
        << xml_escape(lfn_path(r.logical_name)) << "\" serviceName=\"data\" status=\""
        << (online ? "online" : "offline") << "\">\n"
        << "    <metadata inherited=\"false\">\n";
    if (!r.summary.empty()) {
      xml << "      <documentation type=\"summary\">" << xml_escape(r.summary)
          << "</documentation>\n";
    }
    xml << "      <timeCoverage><start>" << number(r.time_coverage.min) << "</start><end>"
        << number(r.time_coverage.max) << "</end></timeCoverage>\n"
        << "      <geospatialCoverage>"
        << "<northsouth><start>" << number(r.space_coverage.lat.min) << "</start><size>"
        << number(r.space_coverage.lat.max - r.space_coverage.lat.min)
        << "</size><units>degrees_north</units></northsouth>"
        << "<eastwest><start>" << number(r.space_coverage.lon.min) << "</start><size>"
        << number(r.space_coverage.lon.max - r.space_coverage.lon.min)
        << "</size><units>degrees_east</units></eastwest>"
        << "</geospatialCoverage>\n";
    if (!r.parameters.empty()) {
      xml << "      <variables vocabulary=\"CF-1.0\">\n";
      for (const auto& p : r.parameters) {
        xml << "        <variable name=\"" << xml_escape(p.name) << "\" units=\""
            << xml_escape(p.units) << "\" vocabulary_name=\"" << xml_escape(p.standard_name)
            << "\"/>\n";
      }
      xml << "      </variables>\n";
    }
    xml << "      <property name=\"investigation_kind\" value=\""
        << to_string(r.classification.investigation) << "\"/>\n";
    for (const auto& p : replicas) {
      xml << "      <property name=\"replica\" value=\"" << xml_escape(p) << "\"/>\n";
    }
    if (!reachable) {
      xml << "      <property name=\"replica_service\" value=\"unreachable\"/>\n";
    }
    xml << "    </metadata>\n  </dataset>\n";
  }
  xml << "</catalog>\n";
  return xml.str();
}

}  // namespace esg::catalog
