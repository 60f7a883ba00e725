#include <doctest.h>

#include <map>
#include <random>
#include <set>

#include "esg/common/error.hpp"
#include "esg/replica/replica_service.hpp"

using namespace esg;
using namespace esg::security;
using esg::replica::ReplicaService;

namespace {

struct Fixture {
  ManualClock clock{0};
  Authority authority{clock, {Bytes{1, 1}, 1000 * kHour}};
  ReplicaService rls{clock, authority};
  std::string publisher;
  std::string reader;

  Fixture() {
    auto admin = authority.mint_token("root", {std::string(kAdminGroup)}, CredentialKind::full);
    authority.add_policy({"pub", "lfn://**", {Action::publish, Action::read}}, admin);
    publisher = authority.mint_token("p", {"pub"}, CredentialKind::moderate);
    reader = authority.mint_token("r", {"readers"}, CredentialKind::moderate);
  }
};

}  // namespace

TEST_CASE("add, renew and remove") {
  Fixture f;
  const std::string lfn = "lfn://pcm/run1/f1";
  const std::string pfn = "site://ncar/archive/pcm/run1/f1";
  f.rls.add_replica(lfn, pfn, f.publisher);
  CHECK(f.rls.lookup(lfn) == std::vector<std::string>{pfn});

  f.clock.advance(kHour);
  auto renewed = f.rls.add_replica(lfn, pfn, f.publisher);
  CHECK(f.rls.lookup(lfn).size() == 1);
  CHECK(renewed.registered_at == 0);
  CHECK(renewed.renewed_at == kHour);

  CHECK_THROWS_AS(f.rls.add_replica(lfn, "ftp://x", f.publisher), Error);
  CHECK_THROWS_AS(f.rls.add_replica("pcm/run1", pfn, f.publisher), Error);
  CHECK_THROWS_WITH_AS(f.rls.remove_replica(lfn, pfn, f.reader), doctest::Contains("denied"),
                       Error);
  f.rls.remove_replica(lfn, pfn, f.publisher);
  CHECK(f.rls.lookup(lfn).empty());
  CHECK_THROWS_AS(f.rls.remove_replica(lfn, pfn, f.publisher), Error);
  CHECK_THROWS_AS(f.rls.add_replica(lfn, pfn, f.reader), Error);
}

TEST_CASE("disk replicas are listed before archive replicas") {
  Fixture f;
  f.rls.add_replica("lfn://a/b", "site://ncar/archive/a/b", f.publisher);
  f.rls.add_replica("lfn://a/b", "site://lbnl/disk/a/b", f.publisher);
  CHECK(f.rls.lookup("lfn://a/b") ==
        std::vector<std::string>{"site://lbnl/disk/a/b", "site://ncar/archive/a/b"});
  CHECK(f.rls.lookup("lfn://unknown").empty());
}

TEST_CASE("soft state expiry") {
  Fixture f;
  f.rls.add_replica("lfn://a/b", "site://ncar/disk/a/b", f.publisher, 5 * kSecond);
  f.clock.advance(4 * kSecond);
  CHECK(f.rls.lookup("lfn://a/b").size() == 1);
  f.clock.advance(2 * kSecond);
  CHECK(f.rls.lookup("lfn://a/b").empty());
}

TEST_CASE("randomized operations agree with a map oracle; expiry is monotone") {
  Fixture f;
  std::mt19937_64 rng(314);
  const std::vector<std::string> lfns{"lfn://a/1", "lfn://a/2", "lfn://b/1"};
  const std::vector<std::string> pfns{"site://s1/disk/x", "site://s1/archive/x",
                                      "site://s2/disk/y"};
  struct OracleEntry { Millis renewed; Millis ttl; };
  std::map<std::pair<std::string, std::string>, OracleEntry> oracle;
  std::set<std::pair<std::string, std::string>> stale;  // excluded, not re-added since

  for (int step = 0; step < 3000; ++step) {
    const auto& lfn = lfns[rng() % lfns.size()];
    const auto& pfn = pfns[rng() % pfns.size()];
    auto now = f.clock.now();
    auto live = [&](const std::pair<std::string, std::string>& k) {
      auto it = oracle.find(k);
      return it != oracle.end() && now - it->second.renewed < it->second.ttl;
    };
    switch (rng() % 4) {
      case 0:
      case 1: {
        Millis ttl = static_cast<Millis>(1 + rng() % 20) * kSecond;
        f.rls.add_replica(lfn, pfn, f.publisher, ttl);
        oracle[{lfn, pfn}] = {now, ttl};
        stale.erase({lfn, pfn});
        break;
      }
      case 2: {
        bool expected = live({lfn, pfn});
        bool threw = false;
        try {
          f.rls.remove_replica(lfn, pfn, f.publisher);
        } catch (const Error& e) {
          threw = true;
          CHECK(e.code() == Errc::not_found);
        }
        REQUIRE(threw == !expected);
        oracle.erase({lfn, pfn});
        break;
      }
      default:
        f.clock.advance(static_cast<Millis>(rng() % 3000));
    }
    now = f.clock.now();
    for (const auto& l : lfns) {
      auto got = f.rls.lookup(l);
      std::set<std::string> got_set(got.begin(), got.end());
      std::set<std::string> want;
      for (const auto& p : pfns) {
        if (live({l, p})) {
          want.insert(p);
        } else if (oracle.contains({l, p})) {
          stale.insert({l, p});
        }
      }
      REQUIRE(got_set == want);
      REQUIRE(got.size() == got_set.size());
      for (const auto& p : got) REQUIRE_FALSE(stale.contains({l, p}));
    }
  }
}

TEST_CASE("index is rebuilt from the log") {
  auto path = std::filesystem::temp_directory_path() / "esg_rls_test.log";
  std::filesystem::remove(path);
  ManualClock clock{0};
  Authority authority{clock, {Bytes{3}}};
  auto admin = authority.mint_token("root", {std::string(kAdminGroup)}, CredentialKind::full);
  authority.add_policy({"pub", "lfn://**", {Action::publish}}, admin);
  auto token = authority.mint_token("p", {"pub"}, CredentialKind::moderate);
  {
    ReplicaService rls{clock, authority, path};
    rls.add_replica("lfn://a/b", "site://s/disk/a", token);
    rls.add_replica("lfn://a/b", "site://s/archive/a", token);
    rls.remove_replica("lfn://a/b", "site://s/disk/a", token);
  }
  ReplicaService again{clock, authority, path};
  CHECK(again.lookup("lfn://a/b") == std::vector<std::string>{"site://s/archive/a"});
  std::filesystem::remove(path);
}
