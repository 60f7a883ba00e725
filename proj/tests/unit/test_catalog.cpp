#include <doctest.h>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "esg/catalog/catalog.hpp"
#include "esg/common/error.hpp"
#include "support/catalog_fixtures.hpp"

using namespace esg;
using namespace esg::catalog;
using namespace esg::security;
using esg::testing::physical_record;

namespace {

struct Fixture {
  ManualClock clock{0};
  Authority authority{clock, {Bytes{4, 2}, 1000 * kHour, 365 * 24 * kHour, {}}};
  std::string admin;
  std::string publisher;
  std::string reader;

  Fixture() {
    admin = authority.mint_token("root", {std::string(kAdminGroup)}, CredentialKind::full);
    authority.add_policy({"publishers", "lfn://**", {Action::publish}}, admin);
    publisher = authority.mint_token("pub", {"publishers"}, CredentialKind::moderate);
    reader = authority.mint_token("reader", {"climate"}, CredentialKind::moderate);
  }
};

boost::property_tree::ptree parse_xml(const std::string& text) {
  std::istringstream in(text);
  boost::property_tree::ptree tree;
  boost::property_tree::read_xml(in, tree);
  return tree;
}

std::vector<boost::property_tree::ptree> datasets_of(const boost::property_tree::ptree& doc) {
  std::vector<boost::property_tree::ptree> out;
  for (const auto& [tag, child] : doc.get_child("catalog")) {
    if (tag == "dataset") out.push_back(child);
  }
  return out;
}

}  // namespace

TEST_CASE("publish, duplicates and authorization") {
  Fixture f;
  Catalog cat{f.authority, {}};
  auto id = cat.publish(physical_record("lfn://pcm/b06.22/ocean", "PCM B06.22 ocean temperature"),
                        f.publisher);
  CHECK(cat.get(id)->version == 1);
  CHECK_THROWS_WITH_AS(
      cat.publish(physical_record("lfn://pcm/b06.22/ocean", "again"), f.publisher),
      doctest::Contains("duplicate"), Error);
  CHECK_THROWS_WITH_AS(cat.publish(physical_record("lfn://pcm/x", "x"), f.reader),
                       doctest::Contains("denied"), Error);

  auto both = physical_record("lfn://pcm/y", "y");
  both.recipe_ref = "lfn://pcm/y";
  CHECK_THROWS_AS(cat.publish(both, f.publisher, "{}"), Error);
  auto neither = physical_record("lfn://pcm/z", "z");
  neither.constituent_files.clear();
  CHECK_THROWS_AS(cat.publish(neither, f.publisher), Error);

  auto dangling = physical_record("lfn://pcm/w", "w");
  dangling.classification.relationships = {{Relation::is_part_of, "lfn://nowhere"}};
  CHECK_THROWS_WITH_AS(cat.publish(dangling, f.publisher), doctest::Contains("does not resolve"),
                       Error);
  auto part = physical_record("lfn://pcm/v", "v");
  part.classification.relationships = {{Relation::is_part_of, "lfn://pcm/b06.22/ocean"},
                                       {Relation::has_parameter, "PS"}};
  CHECK_NOTHROW(cat.publish(part, f.publisher));
}

TEST_CASE("updates are versioned with optimistic concurrency") {
  Fixture f;
  Catalog cat{f.authority, {}};
  auto id = cat.publish(physical_record("lfn://pcm/run1", "PCM run one"), f.publisher);

  RecordPatch patch;
  patch.summary = "corrected summary";
  CHECK(cat.update(id, patch, f.publisher, 1) == 2);
  CHECK(cat.get(id)->summary == "corrected summary");
  CHECK(cat.get(id, 1)->summary == "Monthly fields from PCM run one");
  CHECK(cat.get(id)->title == "PCM run one");

  CHECK_THROWS_WITH_AS(cat.update(id, patch, f.publisher, 1), doctest::Contains("version 2"),
                       Error);
  CHECK_THROWS_AS(cat.update("rec-99", patch, f.publisher), Error);
  CHECK_THROWS_AS(cat.update(id, patch, f.reader), Error);

  RecordPatch lineage;
  auto pedigree = cat.get(id)->pedigree;
  pedigree.derived_from.push_back("lfn://pcm/raw/run1");
  lineage.pedigree = pedigree;
  cat.update(id, lineage, f.publisher);
  CHECK(cat.search({"", {{"isDerivedFrom", "lfn://pcm/raw/run1"}}}) ==
        std::vector<std::string>{id});

  pedigree.derived_from.push_back("not an lfn");
  lineage.pedigree = pedigree;
  CHECK_THROWS_AS(cat.update(id, lineage, f.publisher), Error);
  CHECK(cat.get(id)->version == 3);
}

TEST_CASE("search is conjunctive, case-insensitive and ordered by name") {
  Fixture f;
  Catalog cat{f.authority, {}};
  auto ocean = cat.publish(physical_record("lfn://pcm/b06.22/ocean", "PCM B06.22 ocean temperature"),
                           f.publisher);
  auto atm = physical_record("lfn://ccsm/run3/atm", "CCSM atmosphere");
  atm.classification.investigation = InvestigationKind::observation;
  auto atm_id = cat.publish(atm, f.publisher);

  CHECK(cat.search({"ocean temperature", {}}) == std::vector<std::string>{ocean});
  CHECK(cat.search({"OCEAN", {}}) == std::vector<std::string>{ocean});
  CHECK(cat.search({"nonexistentterm", {}}).empty());
  CHECK(cat.search({"surface_air_pressure", {}}) == std::vector<std::string>{atm_id, ocean});
  CHECK(cat.search({"", {{"investigation_kind", "simulation"}}}) == std::vector<std::string>{ocean});
  CHECK(cat.search({"", {{"prefix", "lfn://ccsm"}}}) == std::vector<std::string>{atm_id});
  CHECK(cat.search({"", {{"no_such_field", "x"}}}).empty());
}

TEST_CASE("filtered search matches a linear-scan oracle") {
  Fixture f;
  Catalog cat{f.authority, {}};
  std::mt19937_64 rng(8);
  const std::vector<std::string> words{"ocean", "Temperature", "ice", "wind", "PCM", "ccsm"};
  struct Row { std::string id, name, text; InvestigationKind kind; std::string model; };
  std::vector<Row> rows;
  for (int i = 0; i < 2000; ++i) {
    std::string title;
    for (int w = 0; w < 3; ++w) title += words[rng() % words.size()] + " ";
    auto r = physical_record("lfn://p" + std::to_string(rng() % 7) + "/r" + std::to_string(i),
                             title);
    r.parameters.clear();
    r.summary.clear();
    r.classification.investigation = static_cast<InvestigationKind>(rng() % 4);
    r.pedigree.model_name = rng() % 2 ? "PCM" : "CCSM";
    auto id = cat.publish(r, f.publisher);
    std::string lowered = title;
    for (auto& c : lowered) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    rows.push_back({id, r.logical_name, lowered, r.classification.investigation, r.pedigree.model_name});
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.name < b.name; });
  for (int q = 0; q < 50; ++q) {
    std::string w1 = words[rng() % words.size()];
    std::string w2 = words[rng() % words.size()];
    auto kind = static_cast<InvestigationKind>(rng() % 4);
    std::string l1 = w1, l2 = w2;
    for (auto* s : {&l1, &l2})
      for (auto& c : *s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    std::vector<std::string> expected;
    for (const auto& row : rows) {
      if (row.text.find(l1) != std::string::npos && row.text.find(l2) != std::string::npos &&
          row.kind == kind && row.model == "PCM") {
        expected.push_back(row.id);
      }
    }
    REQUIRE(cat.search({w1 + " " + w2,
                        {{"investigation_kind", std::string(to_string(kind))},
                         {"model_name", "PCM"}}}) == expected);
  }
}

TEST_CASE("browse derives the hierarchy from logical names") {
  Fixture f;
  Catalog cat{f.authority, {}};
  cat.publish(physical_record("lfn://pcm/run1/a", "a"), f.publisher);
  cat.publish(physical_record("lfn://pcm/run1/b", "b"), f.publisher);
  cat.publish(physical_record("lfn://pcm/run2/c", "c"), f.publisher);
  cat.publish(physical_record("lfn://ccsm/run9", "d"), f.publisher);

  auto nodes = cat.browse("lfn://pcm");
  REQUIRE(nodes.size() == 2);
  CHECK(nodes[0] == BrowseNode{"run1", "lfn://pcm/run1", 2});
  CHECK(nodes[1] == BrowseNode{"run2", "lfn://pcm/run2", 1});
  CHECK(cat.browse("lfn://pcm/").size() == 2);
  CHECK(cat.browse("lfn://nothing").empty());
  auto root = cat.browse("lfn://");
  REQUIRE(root.size() == 2);
  CHECK(root[0].name == "ccsm");
  CHECK(root[1].count == 3);
}

TEST_CASE("THREDDS export") {
  Fixture f;
  Catalog cat{f.authority, {}};
  cat.publish(physical_record("lfn://pcm/run1/a", "PCM <a> & \"b\""), f.publisher);
  cat.publish(physical_record("lfn://pcm/run2/b", "b"), f.publisher);
  cat.publish(physical_record("lfn://ccsm/c", "c"), f.publisher);

  ReplicaLookup lookup = [](const std::string& lfn) -> std::vector<std::string> {
    if (lfn == "lfn://pcm/run1/a") return {"site://ncar/disk/pcm/run1/a"};
    return {};
  };
  auto doc = parse_xml(cat.export_thredds("lfn://pcm", lookup));
  CHECK(doc.get<std::string>("catalog.service.<xmlattr>.base") == "/data/");
  CHECK(doc.get<std::string>("catalog.service.<xmlattr>.name") == "data");
  auto datasets = datasets_of(doc);
  std::size_t browse_count = 0;
  for (const auto& n : cat.browse("lfn://pcm")) browse_count += n.count;
  REQUIRE(datasets.size() == browse_count);
  CHECK(datasets[0].get<std::string>("<xmlattr>.name") == "PCM <a> & \"b\"");
  CHECK(datasets[0].get<std::string>("<xmlattr>.urlPath") == "pcm/run1/a");
  CHECK(datasets[0].get<std::string>("<xmlattr>.status") == "online");
  CHECK(datasets[1].get<std::string>("<xmlattr>.status") == "offline");
  CHECK(datasets[0].get<double>("metadata.timeCoverage.end") == 20.0);

  auto empty = parse_xml(cat.export_thredds("lfn://nothing", lookup));
  CHECK(datasets_of(empty).empty());

  ReplicaLookup down = [](const std::string&) -> std::vector<std::string> {
    throw Error(Errc::unavailable, "replica service unreachable");
  };
  auto offline = datasets_of(parse_xml(cat.export_thredds("lfn://", down)));
  CHECK(offline.size() == 3);
  for (const auto& d : offline) CHECK(d.get<std::string>("<xmlattr>.status") == "offline");
}

TEST_CASE("record log is append-only and replays") {
  Fixture f;
  auto path = std::filesystem::temp_directory_path() / "esg_catalog_test.log";
  std::filesystem::remove(path);
  std::string id;
  std::string before;
  {
    Catalog cat{f.authority, {path, {}, "/data/"}};
    id = cat.publish(physical_record("lfn://pcm/run1", "run one"), f.publisher);
    cat.publish(physical_record("lfn://pcm/run2", "run two"), f.publisher);
    std::ifstream in(path);
    before.assign(std::istreambuf_iterator<char>(in), {});
    RecordPatch p;
    p.title = "run one, corrected";
    cat.update(id, p, f.publisher);
  }
  std::ifstream in(path);
  std::string after(std::istreambuf_iterator<char>(in), {});
  CHECK(after.substr(0, before.size()) == before);

  Catalog again{f.authority, {path, {}, "/data/"}};
  CHECK(again.get(id)->title == "run one, corrected");
  CHECK(again.get(id, 1)->title == "run one");
  CHECK(again.size() == 2);
  auto next = again.publish(physical_record("lfn://pcm/run3", "run three"), f.publisher);
  CHECK(next == "rec-3");
  std::filesystem::remove(path);
}

TEST_CASE("record JSON round trip") {
  auto r = physical_record("lfn://pcm/run1", "t");
  r.classification.relationships = {{Relation::uses_service, "svc://vds"}};
  r.pedigree.derived_from = {"lfn://a/b"};
  r.id = "rec-1";
  r.version = 4;
  CHECK(record_from_json(to_json(r)) == r);
  auto v = r;
  v.constituent_files.clear();
  v.recipe_ref = "lfn://pcm/run1";
  CHECK(record_from_json(to_json(v)) == v);
}
