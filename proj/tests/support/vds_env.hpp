#pragma once

#include <memory>
#include <string>
#include <vector>

#include "catalog_fixtures.hpp"
#include "grid_env.hpp"
#include "grid_fixtures.hpp"
#include "temp_dir.hpp"
#include "esg/catalog/catalog.hpp"
#include "esg/gridfmt/codec.hpp"
#include "esg/gridfmt/kernels.hpp"
#include "esg/replica/replica_service.hpp"
#include "esg/virtualdata/service.hpp"

namespace esg::testing {

inline const std::string kD1 = "lfn://pcm/b06.22/D1";
inline const std::string kD2 = "lfn://pcm/b06.22/D2";
inline const std::string kD3 = "lfn://pcm/derived/D3";

/// Two physical PCM series, D1 split across two files and D2 in one, with
/// replicas at site A; a catalog, replica service and virtual data service.
struct VdsWorld {
  TempDir dir{"esg-vds"};
  SecurityFixture sec;
  std::string reader = sec.authority.mint_token("carol", {"climate"}, security::CredentialKind::moderate);
  std::string d1_only = sec.authority.mint_token("dave", {"d1-readers"}, security::CredentialKind::moderate);
  std::string publisher = sec.authority.mint_token("pat", {"pcm-pub", "climate"}, security::CredentialKind::full);
  std::string service = sec.authority.mint_token("vds", {"esg-services"}, security::CredentialKind::full);
  storage::Storage storage{sec.clock, dir / "sites", {site_config("A"), site_config("portal", 64ull << 20)}};
  replica::ReplicaService replicas{sec.clock, sec.authority};
  catalog::Catalog catalog{sec.authority, {}};
  std::unique_ptr<virtualdata::VirtualDataService> vds;

  gridfmt::GridDataset d1 = make_series(12, 0, 0);
  gridfmt::GridDataset d2 = make_series(15, 12, 5000);

  explicit VdsWorld(bool republish = true) {
    using security::Action;
    auto& a = sec.authority;
    a.add_policy({"climate", "lfn://pcm/**", {Action::read}}, sec.admin);
    a.add_policy({"d1-readers", kD1, {Action::read}}, sec.admin);
    a.add_policy({"d1-readers", "lfn://pcm/derived/**", {Action::read}}, sec.admin);
    a.add_policy({"pcm-pub", "lfn://pcm/**", {Action::publish}}, sec.admin);
    a.add_policy({"esg-services", "lfn://**", {Action::publish, Action::read}}, sec.admin);

    auto first = gridfmt::subset(d1, gridfmt::parse_constraint("time[0:1:6],lat,lon,PS[0:1:6],step[0:1:6]"));
    auto second = gridfmt::subset(d1, gridfmt::parse_constraint("time[7:1:11],lat,lon,PS[7:1:11],step[7:1:11]"));
    add_file(kD1 + "/part0.esgn", "site://A/archive/pcm/D1/part0.esgn", first);
    add_file(kD1 + "/part1.esgn", "site://A/archive/pcm/D1/part1.esgn", second);
    add_file(kD2 + "/all.esgn", "site://A/disk/pcm/D2/all.esgn", d2);
    catalog.publish(physical_record(kD1, "PCM run D1", {kD1 + "/part0.esgn", kD1 + "/part1.esgn"}), publisher);
    catalog.publish(physical_record(kD2, "PCM run D2", {kD2 + "/all.esgn"}), publisher);

    virtualdata::VirtualDataService::Options o;
    o.republish = republish;
    o.service_token = [this] { return service; };
    vds = std::make_unique<virtualdata::VirtualDataService>(catalog, replicas, storage, sec.authority, o);
  }

  void add_file(const std::string& lfn, const std::string& pfn, const gridfmt::GridDataset& ds) {
    storage.put_file(pfn, gridfmt::write_dataset(ds));
    replicas.add_replica(lfn, pfn, publisher);
  }

  static virtualdata::ExprPtr d3_recipe() {
    using namespace virtualdata;
    return concat({subset(ref(kD1), "PS[0:1:9]"), subset(ref(kD2), "PS[0:1:9]")}, "time");
  }

  static catalog::MetadataRecord d3_metadata() {
    catalog::MetadataRecord r;
    r.logical_name = kD3;
    r.title = "PS for 20 time periods";
    r.summary = "Surface pressure from D1 and D2 joined along time";
    r.parameters = {{"PS", "Pa", "surface_air_pressure"}};
    r.pedigree.model_name = "PCM";
    r.classification.investigation = catalog::InvestigationKind::analysis;
    r.time_coverage = {0, 21};
    r.space_coverage = {{-90, 90}, {0, 360}};
    return r;
  }

  void define_d3() { vds->define_virtual(d3_metadata(), d3_recipe(), publisher); }

  /// D3 computed straight from the source arrays with the kernels.
  gridfmt::GridDataset d3_oracle() const {
    std::vector<gridfmt::GridDataset> parts{gridfmt::subset(d1, gridfmt::parse_constraint("PS[0:1:9]")),
                                            gridfmt::subset(d2, gridfmt::parse_constraint("PS[0:1:9]"))};
    return gridfmt::concat(parts, "time");
  }
};

}  // namespace esg::testing
