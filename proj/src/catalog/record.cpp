#include "esg/catalog/record.hpp"

#include "esg/common/error.hpp"

namespace esg::catalog {
namespace {

template <typename E, std::size_t N>
E parse_enum(const std::string& text, const E (&values)[N], const char* what) {
  for (auto v : values) {
    if (to_string(v) == text) return v;
  }
  throw Error(Errc::invalid_argument, std::string("unknown ") + what + " '" + text + "'");
}

constexpr InvestigationKind kInvestigations[] = {
    InvestigationKind::simulation, InvestigationKind::observation,
    InvestigationKind::experiment, InvestigationKind::analysis};
constexpr DatasetKind kDatasetKinds[] = {DatasetKind::campaign, DatasetKind::ensemble,
                                         DatasetKind::plain};
constexpr Relation kRelations[] = {Relation::is_part_of, Relation::is_generated_by,
                                   Relation::is_derived_from, Relation::has_parameter,
                                   Relation::uses_service};

Json range_json(const Range& r) { return Json{{"min", r.min}, {"max", r.max}}; }

Range range_from(const Json& j) { return {j.at("min").get<double>(), j.at("max").get<double>()}; }

Json classification_json(const OntologyClass& c) {
  Json rel = Json::array();
  for (const auto& r : c.relationships) {
    rel.push_back(Json{{"relation", to_string(r.relation)}, {"target", r.target}});
  }
  return Json{{"investigation_kind", to_string(c.investigation)},
              {"dataset_kind", to_string(c.dataset)},
              {"relationships", rel}};
}

OntologyClass classification_from(const Json& j) {
  OntologyClass c;
  c.investigation = parse_enum(j.value("investigation_kind", "simulation"), kInvestigations,
                               "investigation kind");
  c.dataset = parse_enum(j.value("dataset_kind", "plain"), kDatasetKinds, "dataset kind");
  for (const auto& r : j.value("relationships", Json::array())) {
    c.relationships.push_back({parse_enum(r.at("relation").get<std::string>(), kRelations,
                                          "relation"),
                               r.at("target").get<std::string>()});
  }
  return c;
}

Json pedigree_json(const Pedigree& p) {
  return Json{{"model_name", p.model_name},           {"model_version", p.model_version},
              {"software_config", p.software_config}, {"hardware_config", p.hardware_config},
              {"derived_from", p.derived_from}};
}

Pedigree pedigree_from(const Json& j) {
  return {j.value("model_name", ""), j.value("model_version", ""),
          j.value("software_config", ""), j.value("hardware_config", ""),
          j.value("derived_from", std::vector<std::string>{})};
}

Json parameters_json(const std::vector<Parameter>& params) {
  Json out = Json::array();
  for (const auto& p : params) {
    out.push_back(Json{{"name", p.name}, {"units", p.units}, {"standard_name", p.standard_name}});
  }
  return out;
}

std::vector<Parameter> parameters_from(const Json& j) {
  std::vector<Parameter> out;
  for (const auto& p : j) {
    out.push_back({p.at("name").get<std::string>(), p.value("units", ""),
                   p.value("standard_name", "")});
  }
  return out;
}

Json space_json(const SpaceCoverage& s) {
  return Json{{"lat", range_json(s.lat)}, {"lon", range_json(s.lon)}};
}

SpaceCoverage space_from(const Json& j) {
  return {range_from(j.at("lat")), range_from(j.at("lon"))};
}

}  // namespace

std::string_view to_string(InvestigationKind kind) {
  switch (kind) {
    case InvestigationKind::simulation: return "simulation";
    case InvestigationKind::observation: return "observation";
    case InvestigationKind::experiment: return "experiment";
    case InvestigationKind::analysis: return "analysis";
  }
  return "?";
}

std::string_view to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::campaign: return "campaign";
    case DatasetKind::ensemble: return "ensemble";
    case DatasetKind::plain: return "plain";
  }
  return "?";
}

std::string_view to_string(Relation relation) {
  switch (relation) {
    case Relation::is_part_of: return "isPartOf";
    case Relation::is_generated_by: return "isGeneratedBy";
    case Relation::is_derived_from: return "isDerivedFrom";
    case Relation::has_parameter: return "hasParameter";
    case Relation::uses_service: return "usesService";
  }
  return "?";
}

std::vector<Relationship> MetadataRecord::relationships() const {
  auto out = classification.relationships;
  for (const auto& src : pedigree.derived_from) {
    out.push_back({Relation::is_derived_from, src});
  }
  return out;
}

Json to_json(const MetadataRecord& r) {
  Json j;
  j["id"] = r.id;
  j["logical_name"] = r.logical_name;
  j["title"] = r.title;
  j["summary"] = r.summary;
  j["classification"] = classification_json(r.classification);
  j["pedigree"] = pedigree_json(r.pedigree);
  j["parameters"] = parameters_json(r.parameters);
  j["time_coverage"] = range_json(r.time_coverage);
  j["space_coverage"] = space_json(r.space_coverage);
  j["constituent_files"] = r.constituent_files;
  if (r.recipe_ref) j["recipe_ref"] = *r.recipe_ref;
  j["version"] = r.version;
  return j;
}

MetadataRecord record_from_json(const Json& j) {
  try {
    MetadataRecord r;
    r.id = j.value("id", "");
    r.logical_name = j.at("logical_name").get<std::string>();
    r.title = j.value("title", "");
    r.summary = j.value("summary", "");
    if (j.contains("classification")) r.classification = classification_from(j["classification"]);
    if (j.contains("pedigree")) r.pedigree = pedigree_from(j["pedigree"]);
    if (j.contains("parameters")) r.parameters = parameters_from(j["parameters"]);
    if (j.contains("time_coverage")) r.time_coverage = range_from(j["time_coverage"]);
    if (j.contains("space_coverage")) r.space_coverage = space_from(j["space_coverage"]);
    r.constituent_files = j.value("constituent_files", std::vector<std::string>{});
    if (j.contains("recipe_ref")) r.recipe_ref = j["recipe_ref"].get<std::string>();
    r.version = j.value("version", std::uint64_t{0});
    return r;
  } catch (const Json::exception& e) {
    throw Error(Errc::invalid_argument, std::string("malformed record: ") + e.what());
  }
}

RecordPatch patch_from_json(const Json& j) {
  try {
    RecordPatch p;
    if (j.contains("title")) p.title = j["title"].get<std::string>();
    if (j.contains("summary")) p.summary = j["summary"].get<std::string>();
    if (j.contains("classification")) p.classification = classification_from(j["classification"]);
    if (j.contains("pedigree")) p.pedigree = pedigree_from(j["pedigree"]);
    if (j.contains("parameters")) p.parameters = parameters_from(j["parameters"]);
    if (j.contains("time_coverage")) p.time_coverage = range_from(j["time_coverage"]);
    if (j.contains("space_coverage")) p.space_coverage = space_from(j["space_coverage"]);
    if (j.contains("constituent_files")) {
      p.constituent_files = j["constituent_files"].get<std::vector<std::string>>();
    }
    return p;
  } catch (const Json::exception& e) {
    throw Error(Errc::invalid_argument, std::string("malformed patch: ") + e.what());
  }
}

}  // namespace esg::catalog
