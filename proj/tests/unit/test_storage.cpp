#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "../support/temp_dir.hpp"
#include "esg/common/error.hpp"
#include "esg/storage/storage.hpp"

using namespace esg;
using namespace esg::storage;
namespace fs = std::filesystem;

namespace {

SiteConfig site(std::string id, std::uint64_t capacity) {
  SiteConfig c;
  c.site_id = std::move(id);
  c.disk_capacity_bytes = capacity;
  return c;
}

Bytes pattern(std::size_t n, std::uint8_t salt = 0) {
  Bytes b(n);
  for (std::size_t i = 0; i < n; ++i) b[i] = static_cast<std::uint8_t>(i * 31 + salt);
  return b;
}

std::set<std::string> tree(const fs::path& dir) {
  std::set<std::string> out;
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out.insert(fs::relative(e.path(), dir).generic_string());
  }
  return out;
}

std::uint64_t tree_bytes(const fs::path& dir) {
  std::uint64_t total = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) total += e.file_size();
  }
  return total;
}

}  // namespace

TEST_CASE("reservation arithmetic and LRU eviction") {
  testing::TempDir dir;
  ManualClock clock;
  Storage st(clock, dir.path(), {site("A", 1024)});

  auto r = st.reserve_space("A", 1000);
  CHECK(r.bytes == 1000);
  try {
    st.reserve_space("A", 100);
    FAIL("expected no_space");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::no_space);
    CHECK_FALSE(e.retryable());
  }
  st.release_reservation(r.reservation_id);
  CHECK(st.disk_usage("A") == 0);

  st.put_file("site://A/disk/old.nc", pattern(600));
  auto r2 = st.reserve_space("A", 1000);
  CHECK_FALSE(st.stat("site://A/disk/old.nc"));
  CHECK(st.event_count("A", "evicted") == 1);
  st.release_reservation(r2.reservation_id);

  st.put_file("site://A/disk/keep.nc", pattern(600));
  st.pin("site://A/disk/keep.nc");
  CHECK_THROWS_AS(st.reserve_space("A", 1000), Error);
  CHECK(st.stat("site://A/disk/keep.nc"));
  CHECK_THROWS_AS(st.evict("site://A/disk/keep.nc"), Error);
  CHECK_THROWS_AS(st.reserve_space("A", 0), Error);
}

TEST_CASE("choose_victims is LRU and refuses infeasible requests") {
  std::vector<EvictionCandidate> c{{"a", 10, 3}, {"b", 10, 1}, {"c", 10, 2}};
  CHECK(*choose_victims(c, 15) == std::vector<std::string>{"b", "c"});
  CHECK(*choose_victims(c, 0) == std::vector<std::string>{});
  CHECK_FALSE(choose_victims(c, 31));
}

TEST_CASE("eviction does not happen when it cannot make room") {
  testing::TempDir dir;
  ManualClock clock;
  Storage st(clock, dir.path(), {site("A", 1000)});
  st.put_file("site://A/disk/a", pattern(300));
  st.put_file("site://A/disk/b", pattern(300));
  st.pin("site://A/disk/b");
  CHECK_THROWS_AS(st.reserve_space("A", 800), Error);
  CHECK(st.stat("site://A/disk/a"));
}

TEST_CASE("stage latency, digest equality and progress events") {
  testing::TempDir dir;
  ManualClock clock(5000);
  auto cfg = site("A", 8 << 20);
  cfg.stage_base_ms = 100;
  cfg.stage_per_mb_ms = 50;
  Storage st(clock, dir.path(), {cfg});
  auto data = pattern(2 << 20);
  auto archived = st.put_file("site://A/archive/run1/f.nc", data);
  CHECK(st.stage_latency("A", 2 << 20) == 200);

  auto r = st.reserve_space("A", 2 << 20);
  auto staged = st.stage("A", "run1/f.nc", r.reservation_id);
  CHECK(staged.digest == archived.digest);
  CHECK(staged.tier == Tier::disk);
  CHECK(staged.pinned);
  CHECK(st.reservation(r.reservation_id)->remaining() == 0);
  CHECK(st.disk_usage("A") == (2u << 20));

  std::vector<std::string> kinds;
  Millis staged_at = 0;
  for (const auto& e : st.events()) {
    if (e.path != "run1/f.nc" || e.site != "A") continue;
    if (e.kind == "queued" || e.kind == "staging" || e.kind == "staged") kinds.push_back(e.kind);
    if (e.kind == "staged") staged_at = e.at;
  }
  CHECK(kinds == std::vector<std::string>{"queued", "staging", "staged"});
  CHECK(staged_at == 5200);

  std::ifstream in(st.local_path(staged.pfn), std::ios::binary);
  CHECK(Bytes(std::istreambuf_iterator<char>(in), {}) == data);
}

TEST_CASE("stage failures: forced transient vs unknown path") {
  testing::TempDir dir;
  ManualClock clock;
  auto cfg = site("A", 1 << 20);
  cfg.p_stage_fail = 1.0;
  Storage st(clock, dir.path(), {cfg});
  st.put_file("site://A/archive/x", pattern(100));
  auto r = st.reserve_space("A", 100);
  try {
    st.stage("A", "x", r.reservation_id);
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::transient);
    CHECK(e.retryable());
  }
  CHECK_FALSE(st.stat("site://A/disk/x"));
  try {
    st.stage("A", "missing", r.reservation_id);
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::not_found);
    CHECK_FALSE(e.retryable());
  }
  auto small = st.reserve_space("A", 10);
  CHECK_THROWS_AS(st.stage("A", "x", small.reservation_id), Error);
}

TEST_CASE("archive_put mirrors stage") {
  testing::TempDir dir;
  ManualClock clock;
  Storage st(clock, dir.path(), {site("A", 1 << 20)});
  auto disk = st.put_file("site://A/disk/out/y.nc", pattern(4096, 9));
  auto arch = st.archive_put("A", "out/y.nc");
  CHECK(arch.digest == disk.digest);
  CHECK(arch.tier == Tier::archive);
  CHECK(st.stat("site://A/disk/out/y.nc"));
  CHECK_THROWS_AS(st.archive_put("A", "nope"), Error);

  testing::TempDir dir2;
  auto cfg = site("B", 1 << 20);
  cfg.p_stage_fail = 1.0;
  Storage failing(clock, dir2.path(), {cfg});
  failing.put_file("site://B/disk/z", pattern(10));
  try {
    failing.archive_put("B", "z");
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.retryable());
  }
  CHECK_FALSE(failing.stat("site://B/archive/z"));
}

TEST_CASE("transfer contract and atomic visibility") {
  testing::TempDir dir;
  ManualClock clock;
  auto a = site("A", 1 << 20);
  auto b = site("B", 1 << 20);
  Storage st(clock, dir.path(), {a, b});
  auto src = st.put_file("site://A/disk/t1.esgn", pattern(5000, 3));
  auto result = st.transfer("site://A/disk/t1.esgn", "site://B/disk/copy/t1.esgn", src.digest);
  CHECK(result.digest == src.digest);
  CHECK(result.bytes == 5000);
  CHECK(st.stat("site://B/disk/copy/t1.esgn")->digest == src.digest);

  // Wrong expected digest: nothing appears.
  auto bad = std::string(64, '0');
  CHECK_THROWS_AS(st.transfer("site://A/disk/t1.esgn", "site://B/disk/other", bad), Error);
  CHECK_FALSE(st.stat("site://B/disk/other"));

  testing::TempDir dir2;
  auto flaky = site("A", 1 << 20);
  flaky.p_transient = 1.0;
  Storage fs2(clock, dir2.path(), {flaky, b});
  auto s2 = fs2.put_file("site://A/disk/f", pattern(100));
  auto before = tree(dir2 / "B");
  try {
    fs2.transfer("site://A/disk/f", "site://B/disk/f", s2.digest);
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::transient);
  }
  CHECK(tree(dir2 / "B") == before);

  testing::TempDir dir3;
  auto corrupt = site("A", 1 << 20);
  corrupt.p_corrupt = 1.0;
  Storage fs3(clock, dir3.path(), {corrupt, b});
  auto s3 = fs3.put_file("site://A/disk/f", pattern(100));
  try {
    fs3.transfer("site://A/disk/f", "site://B/archive/f", s3.digest);
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::checksum_mismatch);
    CHECK(e.retryable());
  }
  CHECK(tree(dir3 / "B").empty());
}

TEST_CASE("transfer to a full site is NoSpace; local delivery") {
  testing::TempDir dir;
  ManualClock clock;
  Storage st(clock, dir.path(), {site("A", 1 << 20), site("B", 100)});
  auto src = st.put_file("site://A/disk/big", pattern(1000));
  try {
    st.transfer("site://A/disk/big", "site://B/disk/big");
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::no_space);
    CHECK_FALSE(e.retryable());
  }
  auto local = dir / "out/big";
  auto r = st.transfer_to_local("site://A/disk/big", local, src.digest);
  CHECK(r.digest == src.digest);
  CHECK(fs::file_size(local) == 1000);
  CHECK(tree(dir / "out") == std::set<std::string>{"big"});
}

TEST_CASE("failure draws are deterministic per seed") {
  auto run = [](std::uint64_t seed) {
    testing::TempDir dir;
    ManualClock clock;
    auto a = site("A", 1 << 20);
    a.p_transient = 0.5;
    a.seed = seed;
    Storage st(clock, dir.path(), {a, site("B", 1 << 20)});
    std::string trace;
    for (int i = 0; i < 20; ++i) {
      auto pfn = "site://A/disk/f" + std::to_string(i);
      st.put_file(pfn, pattern(64, static_cast<std::uint8_t>(i)));
      for (int attempt = 0; attempt < 3; ++attempt) {
        try {
          st.transfer(pfn, "site://B/disk/f" + std::to_string(i));
          trace += 'o';
          break;
        } catch (const Error&) {
          trace += 'x';
        }
      }
    }
    return trace;
  };
  CHECK(run(7) == run(7));
  CHECK(run(7) != run(8));
  for (int i = 0; i < 1000; ++i) {
    auto u = failure_draw(1, "k", static_cast<std::uint64_t>(i));
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("restart recovers files and accounting from disk") {
  testing::TempDir dir;
  ManualClock clock;
  std::string digest;
  {
    Storage st(clock, dir.path(), {site("A", 4096)});
    digest = st.put_file("site://A/archive/d/x", pattern(1000)).digest;
    st.put_file("site://A/disk/d/y", pattern(500));
    fs::create_directories(dir / "A/tmp");
    std::ofstream(dir / "A/tmp/leftover.part") << "torn";
  }
  Storage st(clock, dir.path(), {site("A", 4096)});
  CHECK(st.stat("site://A/archive/d/x")->digest == digest);
  CHECK(st.resident_bytes("A") == 500);
  CHECK(st.list("site://A/archive").size() == 1);
  CHECK(st.list("site://A/disk/d").size() == 1);
  CHECK(tree(dir / "A/tmp").empty());
  CHECK(st.is_directory("site://A/archive/d"));
  CHECK_FALSE(st.is_directory("site://A/archive/d/x"));
}

TEST_CASE("randomized reserve/stage/evict never exceeds capacity or evicts pins") {
  testing::TempDir dir;
  ManualClock clock;
  const std::uint64_t capacity = 64 * 1024;
  Storage st(clock, dir.path(), {site("A", capacity)});
  std::mt19937_64 rng(99);
  for (int i = 0; i < 40; ++i) {
    st.put_file("site://A/archive/f" + std::to_string(i), pattern(512 + rng() % 8192, static_cast<std::uint8_t>(i)));
  }
  std::set<std::string> pinned;
  std::map<std::string, std::uint64_t> live;  // reservation -> remaining
  std::set<std::string> evicted_while_pinned;
  st.set_event_sink([&](const StorageEvent& e) {
    if (e.kind == "evicted" && pinned.contains(e.path)) evicted_while_pinned.insert(e.path);
  });

  for (int op = 0; op < 1500; ++op) {
    clock.advance(1);
    auto pick = rng() % 5;
    try {
      if (pick == 0) {
        auto r = st.reserve_space("A", 1 + rng() % 20000);
        live[r.reservation_id] = r.bytes;
      } else if (pick == 1 && !live.empty()) {
        auto it = std::next(live.begin(), static_cast<long>(rng() % live.size()));
        auto name = "f" + std::to_string(rng() % 40);
        auto size = st.stat("site://A/archive/" + name)->size;
        auto was_pinned = pinned.contains(name);
        st.stage("A", name, it->first);
        it->second -= size;
        pinned.insert(name);
        (void)was_pinned;
      } else if (pick == 2 && !pinned.empty()) {
        auto it = std::next(pinned.begin(), static_cast<long>(rng() % pinned.size()));
        auto pfn = "site://A/disk/" + *it;
        st.unpin(pfn);
        if (!st.stat(pfn)->pinned) pinned.erase(it);
      } else if (pick == 3) {
        auto files = st.list("site://A/disk");
        if (!files.empty()) st.evict(files[rng() % files.size()].pfn);
      } else if (pick == 4 && !live.empty()) {
        auto it = std::next(live.begin(), static_cast<long>(rng() % live.size()));
        st.release_reservation(it->first);
        live.erase(it);
      }
    } catch (const Error& e) {
      REQUIRE((e.code() == Errc::no_space || e.code() == Errc::failed_precondition));
    }
    std::uint64_t reserved = 0;
    for (const auto& [_, rem] : live) reserved += rem;
    auto on_disk = tree_bytes(dir / "A/disk");
    REQUIRE(on_disk + reserved <= capacity);
    REQUIRE(st.disk_usage("A") == on_disk + reserved);
    for (const auto& name : pinned) REQUIRE(fs::exists(dir / "A/disk" / name));
  }
  CHECK(evicted_while_pinned.empty());
  CHECK(st.event_count("A", "evicted") > 0);
}
