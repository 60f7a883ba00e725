#include <doctest.h>

#include <random>
#include <thread>

#include "../support/vds_env.hpp"
#include "esg/common/error.hpp"
#include "esg/gridfmt/kernels.hpp"

using namespace esg;
using namespace esg::virtualdata;
using esg::testing::kD1;
using esg::testing::kD2;
using esg::testing::kD3;
using esg::testing::VdsWorld;

TEST_CASE("recipe serialization") {
  auto e = VdsWorld::d3_recipe();
  auto text = recipe_text(*e);
  CHECK(text ==
        R"({"concat":{"inputs":[{"subset":{"input":{"ref":"lfn://pcm/b06.22/D1"},"constraint":"PS[0:1:9]"}},)"
        R"({"subset":{"input":{"ref":"lfn://pcm/b06.22/D2"},"constraint":"PS[0:1:9]"}}],"axis":"time"}})");
  CHECK(recipe_text(*parse_recipe(text)) == text);
  CHECK(references(*e) == std::set<std::string>{kD1, kD2});
  for (auto bad : {R"({"ref":"D1"})", R"({"subset":{"input":{"ref":"lfn://a"},"constraint":"PS[1:"}})",
                   R"({"concat":{"inputs":[],"axis":"time"}})", R"({"map":{}})", R"({"ref":"lfn://a","x":1})",
                   R"([1,2])", "not json"}) {
    CHECK_THROWS_AS(parse_recipe(bad), Error);
  }
}

TEST_CASE("cache keys use the canonical constraint") {
  CHECK(cache_key(kD3, "PS[0:1:1]") == cache_key(kD3, "PS[0:1:1],"));
  CHECK(cache_key(kD3, " PS [ 0 : 1 : 1 ] ") == cache_key(kD3, "PS[0:1:1]"));
  CHECK(cache_key(kD3, std::nullopt) == cache_key(kD3, ""));
  CHECK(cache_key(kD3, "PS[0:1:1]") != cache_key(kD3, "PS[0:1:2]"));
}

TEST_CASE("define and discover") {
  VdsWorld w;
  w.define_d3();
  auto rec = w.catalog.find_by_name(kD3);
  REQUIRE(rec);
  CHECK(rec->is_virtual());
  CHECK(w.catalog.recipe(*rec->recipe_ref) == recipe_text(*VdsWorld::d3_recipe()));

  CHECK(w.vds->discover({"20 time periods", {}}) == std::vector<std::string>{kD3});
  CHECK(w.vds->discover({"PCM run", {}}) == std::vector<std::string>{kD1, kD2});
  CHECK(w.vds->discover({"pressure", {}}) == std::vector<std::string>{kD1, kD2, kD3});
  CHECK(w.vds->discover({"nothing-like-this", {}}).empty());

  auto self = VdsWorld::d3_metadata();
  self.logical_name = "lfn://pcm/derived/D4";
  CHECK_THROWS_WITH_AS(w.vds->define_virtual(self, ref("lfn://pcm/derived/D4"), w.publisher),
                       doctest::Contains("cycle"), Error);
  auto unknown = VdsWorld::d3_metadata();
  unknown.logical_name = "lfn://pcm/derived/D5";
  try {
    w.vds->define_virtual(unknown, concat({ref(kD1), ref("lfn://pcm/D9")}, "time"), w.publisher);
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::not_found);
  }
  auto denied = VdsWorld::d3_metadata();
  denied.logical_name = "lfn://pcm/derived/D6";
  try {
    w.vds->define_virtual(denied, ref(kD1), w.reader);
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::denied);
  }
  CHECK_FALSE(w.catalog.find_by_name("lfn://pcm/derived/D6"));
}

TEST_CASE("instantiate D3 matches the kernel oracle") {
  VdsWorld w;
  w.define_d3();
  auto oracle = w.d3_oracle();
  auto m = w.vds->instantiate(kD3, std::nullopt, w.reader);
  CHECK_FALSE(m.cache_hit);
  CHECK(m.bytes == gridfmt::write_dataset(oracle));
  CHECK(m.dataset.find_dimension("time")->size == 20);
  // Brute-force view: the first ten records of each source, in order.
  const auto& ps = std::get<std::vector<double>>(m.dataset.find_variable("PS")->data);
  const auto& ps1 = std::get<std::vector<double>>(w.d1.find_variable("PS")->data);
  const auto& ps2 = std::get<std::vector<double>>(w.d2.find_variable("PS")->data);
  const std::size_t per = 12;
  REQUIRE(ps.size() == 20 * per);
  for (std::size_t i = 0; i < 10 * per; ++i) {
    REQUIRE(ps[i] == ps1[i]);
    REQUIRE(ps[10 * per + i] == ps2[i]);
  }
  CHECK(w.storage.stat(m.pfn)->digest == to_hex(sha256(m.bytes)));

  auto one = w.vds->instantiate(kD3, "PS[0:1:0]", w.reader);
  CHECK(one.dataset.find_dimension("time")->size == 1);
  CHECK(one.bytes == gridfmt::write_dataset(gridfmt::subset(oracle, gridfmt::parse_constraint("PS[0:1:0]"))));

  CHECK_THROWS_AS(w.vds->instantiate(kD3, "PS[0:1:20]", w.reader), Error);
  CHECK_THROWS_AS(w.vds->instantiate(kD3, "NOPE", w.reader), Error);
  CHECK_THROWS_AS(w.vds->instantiate("lfn://pcm/missing", std::nullopt, w.reader), Error);
}

TEST_CASE("cache hits fetch nothing; version bumps rebuild") {
  VdsWorld w;
  w.define_d3();
  auto first = w.vds->instantiate(kD3, std::nullopt, w.reader);
  auto fetched = w.vds->stats().fetches;
  CHECK(fetched == 3);
  CHECK(w.vds->cache_lookup(kD3, std::nullopt));
  auto second = w.vds->instantiate(kD3, std::nullopt, w.reader);
  CHECK(second.cache_hit);
  CHECK(second.bytes == first.bytes);
  CHECK(w.vds->stats().fetches == fetched);

  w.vds->instantiate(kD3, "PS[0:1:1]", w.reader);
  CHECK(w.vds->instantiate(kD3, "PS[0:1:1],", w.reader).cache_hit);
  fetched = w.vds->stats().fetches;

  auto id = w.catalog.find_by_name(kD1)->id;
  catalog::RecordPatch patch;
  patch.title = "PCM run D1 (corrected)";
  w.catalog.update(id, patch, w.publisher);
  CHECK_FALSE(w.vds->cache_lookup(kD3, std::nullopt));
  auto third = w.vds->instantiate(kD3, std::nullopt, w.reader);
  CHECK_FALSE(third.cache_hit);
  CHECK(third.bytes == first.bytes);
  CHECK(w.vds->stats().fetches == fetched + 3);
  CHECK(w.vds->stats().invalidations == 1);

  // A cached file lost from the cache site is rebuilt rather than served.
  w.storage.evict(third.pfn);
  CHECK_FALSE(w.vds->instantiate(kD3, std::nullopt, w.reader).cache_hit);
}

TEST_CASE("authorization happens before any fetch") {
  VdsWorld w;
  w.define_d3();
  try {
    w.vds->instantiate(kD3, std::nullopt, w.d1_only);
    FAIL("expected denial");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::denied);
  }
  CHECK(w.vds->fetch_events().empty());
  CHECK_THROWS_AS(w.vds->instantiate(kD3, std::nullopt, "bogus"), Error);
  CHECK(w.vds->instantiate(kD1, std::nullopt, w.d1_only).dataset.find_dimension("time")->size == 12);
}

TEST_CASE("republication of unconstrained results") {
  VdsWorld w;
  w.define_d3();
  CHECK(w.replicas.lookup(kD3).empty());
  w.vds->instantiate(kD3, "PS[0:1:3]", w.reader);
  CHECK(w.replicas.lookup(kD3).empty());
  auto m = w.vds->instantiate(kD3, std::nullopt, w.reader);
  CHECK(w.replicas.lookup(kD3) == std::vector<std::string>{m.pfn});

  VdsWorld quiet(false);
  quiet.define_d3();
  quiet.vds->instantiate(kD3, std::nullopt, quiet.reader);
  CHECK(quiet.replicas.lookup(kD3).empty());
}

TEST_CASE("transparency: ref(D) equals D under any constraint") {
  VdsWorld w;
  auto meta = VdsWorld::d3_metadata();
  meta.logical_name = "lfn://pcm/derived/V";
  w.vds->define_virtual(meta, ref(kD2), w.publisher);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 30; ++i) {
    auto slab = esg::testing::random_slab(rng, 15);
    auto c = "PS[" + std::to_string(slab.start) + ":" + std::to_string(slab.stride) + ":" + std::to_string(slab.stop) + "]";
    auto v = w.vds->instantiate(meta.logical_name, c, w.reader);
    auto d = w.vds->instantiate(kD2, c, w.reader);
    REQUIRE(v.bytes == d.bytes);
    REQUIRE(v.bytes == gridfmt::write_dataset(gridfmt::subset(w.d2, gridfmt::parse_constraint(c))));
  }
}

TEST_CASE("subset of virtual equals virtual of subset on random trees") {
  VdsWorld w;
  std::mt19937_64 rng(17);
  auto time_slab = [&](std::uint64_t n) {
    auto s = esg::testing::random_slab(rng, n);
    return "PS[" + std::to_string(s.start) + ":" + std::to_string(s.stride) + ":" + std::to_string(s.stop) + "]";
  };
  auto records = [](const std::string& c) {
    return gridfmt::parse_constraint(c).projections.at(0).slabs.at(0).count();
  };
  for (int t = 0; t < 25; ++t) {
    // Tree: concat of 1-3 leaves, each optionally subset along time.
    std::vector<ExprPtr> leaves;
    std::uint64_t total = 0;
    auto count = 1 + rng() % 3;
    for (std::uint64_t i = 0; i < count; ++i) {
      bool first = rng() % 2;
      auto name = first ? kD1 : kD2;
      std::uint64_t n = first ? 12 : 15;
      // Leaves share one schema (PS plus coordinates), whole or sliced.
      auto c = rng() % 2 ? time_slab(n) : "PS[0:1:" + std::to_string(n - 1) + "]";
      leaves.push_back(subset(ref(name), c));
      total += records(c);
    }
    auto meta = VdsWorld::d3_metadata();
    meta.logical_name = "lfn://pcm/derived/T" + std::to_string(t);
    w.vds->define_virtual(meta, concat(leaves, "time"), w.publisher);
    auto whole = w.vds->instantiate(meta.logical_name, std::nullopt, w.reader);
    REQUIRE(whole.dataset.find_dimension("time")->size == total);
    auto c = time_slab(total);
    auto part = w.vds->instantiate(meta.logical_name, c, w.reader);
    REQUIRE(part.bytes == gridfmt::write_dataset(gridfmt::subset(whole.dataset, gridfmt::parse_constraint(c))));
  }
}

TEST_CASE("virtual datasets can build on other virtual datasets") {
  VdsWorld w;
  w.define_d3();
  auto meta = VdsWorld::d3_metadata();
  meta.logical_name = "lfn://pcm/derived/D3tail";
  w.vds->define_virtual(meta, subset(ref(kD3), "PS[15:1:19]"), w.publisher);
  auto m = w.vds->instantiate(meta.logical_name, std::nullopt, w.reader);
  CHECK(m.bytes == gridfmt::write_dataset(gridfmt::subset(w.d3_oracle(), gridfmt::parse_constraint("PS[15:1:19]"))));
  CHECK(w.catalog.find_by_name(meta.logical_name)->pedigree.derived_from == std::vector<std::string>{kD3});
}

TEST_CASE("concurrent requests for one key build once") {
  VdsWorld w;
  w.define_d3();
  std::vector<std::thread> threads;
  std::vector<Bytes> results(8);
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&, i] { results[i] = w.vds->instantiate(kD3, "PS[2:2:18]", w.reader).bytes; });
  }
  for (auto& t : threads) t.join();
  for (const auto& r : results) CHECK(r == results[0]);
  CHECK(w.vds->stats().builds == 1);
  CHECK(w.vds->stats().fetches == 3);
}
