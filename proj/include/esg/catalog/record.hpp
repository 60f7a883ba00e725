#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "esg/common/record_log.hpp"

namespace esg::catalog {

enum class InvestigationKind { simulation, observation, experiment, analysis };
enum class DatasetKind { campaign, ensemble, plain };
enum class Relation { is_part_of, is_generated_by, is_derived_from, has_parameter, uses_service };

std::string_view to_string(InvestigationKind kind);
std::string_view to_string(DatasetKind kind);
/// Ontology spelling: isPartOf, isGeneratedBy, ...
std::string_view to_string(Relation relation);

struct Relationship {
  Relation relation = Relation::is_part_of;
  std::string target;

  bool operator==(const Relationship&) const = default;
};

struct OntologyClass {
  InvestigationKind investigation = InvestigationKind::simulation;
  DatasetKind dataset = DatasetKind::plain;
  std::vector<Relationship> relationships;

  bool operator==(const OntologyClass&) const = default;
};

struct Pedigree {
  std::string model_name;
  std::string model_version;
  std::string software_config;
  std::string hardware_config;
  std::vector<std::string> derived_from;  // LFNs

  bool operator==(const Pedigree&) const = default;
};

struct Parameter {
  std::string name;
  std::string units;
  std::string standard_name;

  bool operator==(const Parameter&) const = default;
};

struct Range {
  double min = 0;
  double max = 0;

  bool operator==(const Range&) const = default;
};

struct SpaceCoverage {
  Range lat;
  Range lon;

  bool operator==(const SpaceCoverage&) const = default;
};

/// Catalog entry. A physical dataset lists its constituent files; a virtual
/// one names the recipe it is materialized from.
struct MetadataRecord {
  std::string id;
  std::string logical_name;
  std::string title;
  std::string summary;
  OntologyClass classification;
  Pedigree pedigree;
  std::vector<Parameter> parameters;
  Range time_coverage;
  SpaceCoverage space_coverage;
  std::vector<std::string> constituent_files;
  std::optional<std::string> recipe_ref;
  std::uint64_t version = 0;

  bool is_virtual() const { return recipe_ref.has_value(); }
  /// Declared relationships plus isDerivedFrom for each pedigree source.
  std::vector<Relationship> relationships() const;

  bool operator==(const MetadataRecord&) const = default;
};

/// Fields to replace on update; identity and version are not patchable.
struct RecordPatch {
  std::optional<std::string> title;
  std::optional<std::string> summary;
  std::optional<OntologyClass> classification;
  std::optional<Pedigree> pedigree;
  std::optional<std::vector<Parameter>> parameters;
  std::optional<Range> time_coverage;
  std::optional<SpaceCoverage> space_coverage;
  std::optional<std::vector<std::string>> constituent_files;
};

Json to_json(const MetadataRecord& record);
MetadataRecord record_from_json(const Json& j);
RecordPatch patch_from_json(const Json& j);

}  // namespace esg::catalog
