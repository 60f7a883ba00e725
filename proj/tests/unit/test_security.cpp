#include <doctest.h>

#include <filesystem>
#include <random>

#include "esg/common/error.hpp"
#include "esg/security/authority.hpp"
#include "support/authz_oracle.hpp"

using namespace esg;
using namespace esg::security;

namespace {

struct Fixture {
  ManualClock clock{1'000'000};
  Authority authority{clock, {Bytes{1, 2, 3, 4, 5, 6, 7, 8}}};
  std::string admin;

  Fixture() {
    auto pass = authority.bootstrap_user("root@esg.org", {std::string(kAdminGroup)},
                                         CredentialKind::full);
    admin = authority.login("root@esg.org", pass);
  }

  std::string user_token(std::vector<std::string> groups, CredentialKind kind) {
    return authority.mint_token("u@x.org", std::move(groups), kind);
  }
};

}  // namespace

TEST_CASE("glob patterns") {
  CHECK(pattern_matches("lfn://pcm/**", "lfn://pcm/run1/f.esgn"));
  CHECK(pattern_matches("lfn://pcm/**", "lfn://pcm"));
  CHECK_FALSE(pattern_matches("lfn://pcm/**", "lfn://pcmx/a"));
  CHECK(pattern_matches("lfn://pcm/*", "lfn://pcm/run1"));
  CHECK_FALSE(pattern_matches("lfn://pcm/*", "lfn://pcm/run1/f"));
  CHECK_FALSE(pattern_matches("lfn://pcm/*", "lfn://pcm"));
  CHECK(pattern_matches("svc://datamover", "svc://datamover"));
  CHECK_FALSE(pattern_matches("lfn://**", "svc://datamover"));
  CHECK_FALSE(valid_pattern("lfn://**/x"));
  CHECK_FALSE(valid_pattern("http://x"));
  CHECK(valid_pattern("lfn://*/run1/**"));
}

TEST_CASE("registration lifecycle") {
  Fixture f;
  auto req = f.authority.register_user({"Ann", "ann@ucar.edu", "NCAR", {"climate"}});
  CHECK(req.status == RegistrationStatus::pending);
  CHECK_THROWS_WITH_AS(f.authority.login("ann@ucar.edu", "anything"),
                       "authentication failed", Error);
  CHECK_THROWS_AS(f.authority.register_user({"Ann", "ANN@ucar.edu", "NCAR", {}}), Error);
  CHECK(f.authority.pending(f.admin).size() == 1);

  auto outcome = f.authority.review(req.id, true, f.admin);
  REQUIRE(outcome.passphrase);
  CHECK(outcome.status == RegistrationStatus::accepted);
  auto token = f.authority.login("ann@ucar.edu", *outcome.passphrase);
  auto t = f.authority.verify(token);
  REQUIRE(t);
  CHECK(t->groups == std::vector<std::string>{"climate"});
  CHECK(t->kind == CredentialKind::moderate);
  CHECK(t->expires_at - t->issued_at == 12 * kHour);

  CHECK_THROWS_WITH_AS(f.authority.review(req.id, false, f.admin),
                       doctest::Contains("not pending"), Error);
  CHECK(f.authority.pending(f.admin).empty());
}

TEST_CASE("rejection and non-admin review") {
  Fixture f;
  auto req = f.authority.register_user({"Bob", "bob@llnl.gov", "LLNL", {}});
  auto member = f.user_token({"climate"}, CredentialKind::full);
  CHECK_THROWS_WITH_AS(f.authority.review(req.id, true, member),
                       "administrator token required", Error);
  auto outcome = f.authority.review(req.id, false, f.admin);
  CHECK(outcome.status == RegistrationStatus::rejected);
  CHECK_FALSE(outcome.passphrase);
  CHECK_THROWS_AS(f.authority.login("bob@llnl.gov", ""), Error);
  // A rejected applicant may apply again.
  CHECK_NOTHROW(f.authority.register_user({"Bob", "bob@llnl.gov", "LLNL", {}}));
  CHECK_THROWS_AS(f.authority.register_user({"Eve", "not-an-email", "", {}}), Error);
}

TEST_CASE("wrong passphrase is indistinguishable from unknown user") {
  Fixture f;
  f.authority.bootstrap_user("c@x.org", {}, CredentialKind::moderate);
  std::string wrong, unknown;
  try { f.authority.login("c@x.org", "bad"); } catch (const Error& e) { wrong = e.what(); }
  try { f.authority.login("nobody@x.org", "bad"); } catch (const Error& e) { unknown = e.what(); }
  CHECK(wrong == unknown);
  CHECK(wrong == "authentication failed");
}

TEST_CASE("credential and token expiry") {
  ManualClock clock{0};
  Authority authority{clock, {Bytes{9}, 12 * kHour, 24 * kHour, {}}};
  auto pass = authority.bootstrap_user("d@x.org", {"climate"}, CredentialKind::moderate);
  auto token = authority.login("d@x.org", pass);
  CHECK(authority.verify(token));
  clock.advance(12 * kHour);
  CHECK_FALSE(authority.verify(token));
  CHECK(authority.authorize(token, "lfn://pcm/x", Action::read).reason == "invalid token");
  clock.advance(12 * kHour);
  CHECK_THROWS_WITH_AS(authority.login("d@x.org", pass), "credential expired", Error);
}

TEST_CASE("token integrity under single-byte flips") {
  Fixture f;
  auto token = f.user_token({"climate", "power"}, CredentialKind::full);
  REQUIRE(f.authority.verify(token));
  for (std::size_t i = 0; i < token.size(); ++i) {
    for (std::uint8_t mask : {0x01, 0x20, 0x80}) {
      auto tampered = token;
      tampered[i] = static_cast<char>(tampered[i] ^ mask);
      REQUIRE_FALSE(f.authority.verify(tampered));
    }
  }
  ManualClock clock{1'000'000};
  Authority other{clock, {Bytes{42}}};
  CHECK_FALSE(other.verify(token));
}

TEST_CASE("file-oriented and service-oriented decisions") {
  Fixture f;
  f.authority.add_policy({"climate", "lfn://pcm/**", {Action::read}}, f.admin);
  f.authority.add_policy({"power", "svc://datamover", {Action::move}}, f.admin);

  auto member = f.user_token({"climate"}, CredentialKind::moderate);
  auto outsider = f.user_token({"ocean"}, CredentialKind::moderate);
  CHECK(f.authority.authorize(member, "lfn://pcm/run1/f.esgn", Action::read));
  auto denied = f.authority.authorize(outsider, "lfn://pcm/run1/f.esgn", Action::read);
  CHECK_FALSE(denied);
  CHECK(denied.reason == "no matching policy");
  CHECK_FALSE(f.authority.authorize(member, "lfn://pcm/run1/f.esgn", Action::publish));

  auto power_full = f.user_token({"power"}, CredentialKind::full);
  auto power_moderate = f.user_token({"power"}, CredentialKind::moderate);
  CHECK(f.authority.authorize(power_full, "svc://datamover", Action::move));
  auto d = f.authority.authorize(power_moderate, "svc://datamover", Action::move);
  CHECK_FALSE(d);
  CHECK(d.reason == "service requires full credential");
  CHECK_FALSE(f.authority.authorize(member, "not a resource", Action::read));
}

TEST_CASE("policy administration") {
  Fixture f;
  auto member = f.user_token({"climate"}, CredentialKind::moderate);
  CHECK_THROWS_AS(f.authority.add_policy({"climate", "lfn://pcm/**", {Action::read}}, member),
                  Error);
  f.authority.add_policy({"climate", "lfn://pcm/**", {Action::read}}, f.admin);
  f.authority.add_policy({"climate", "lfn://pcm/**", {Action::read}}, f.admin);
  CHECK(f.authority.policies().size() == 1);
  CHECK_THROWS_AS(f.authority.add_policy({"climate", "lfn://**/x", {Action::read}}, f.admin),
                  Error);
}

TEST_CASE("deny by default and audit completeness") {
  Fixture f;
  std::mt19937_64 rng(5);
  auto before = f.authority.audit_count();
  for (int i = 0; i < 100; ++i) {
    auto token = f.user_token({esg::testing::pick_one(rng, esg::testing::oracle_groups())},
                              rng() % 2 ? CredentialKind::full : CredentialKind::moderate);
    CHECK_FALSE(f.authority.authorize(token, esg::testing::pick_one(rng, esg::testing::oracle_resources()),
                                      esg::testing::random_action(rng)));
  }
  CHECK(f.authority.audit_count() == before + 100);
  CHECK(f.authority.audit_log().back().subject == "u@x.org");
}

TEST_CASE("decision table matches the oracle; allow policies are monotone") {
  std::mt19937_64 rng(77);
  for (int round = 0; round < 20; ++round) {
    Fixture f;
    std::vector<GroupPolicy> installed;
    for (int p = 0; p < 4; ++p) {
      auto policy = esg::testing::random_policy(rng);
      f.authority.add_policy(policy, f.admin);
      installed.push_back(policy);
    }
    std::vector<std::tuple<std::string, std::string, Action, bool>> allowed_before;
    for (int q = 0; q < 30; ++q) {
      std::vector<std::string> groups;
      for (const auto& g : esg::testing::oracle_groups()) if (rng() % 3 == 0) groups.push_back(g);
      auto token = f.user_token(groups, rng() % 2 ? CredentialKind::full : CredentialKind::moderate);
      if (rng() % 10 == 0) token[token.size() / 3] ^= 0x04;
      auto resource = esg::testing::pick_one(rng, esg::testing::oracle_resources());
      auto action = esg::testing::random_action(rng);
      bool got = static_cast<bool>(f.authority.authorize(token, resource, action));
      REQUIRE(got == esg::testing::oracle_allows(installed, f.authority.verify(token), resource, action));
      allowed_before.emplace_back(token, resource, action, got);
    }
    f.authority.add_policy(esg::testing::random_policy(rng), f.admin);
    for (const auto& [token, resource, action, was] : allowed_before) {
      if (was) REQUIRE(f.authority.authorize(token, resource, action));
    }
  }
}

TEST_CASE("state survives restart") {
  auto dir = std::filesystem::temp_directory_path() / "esg_security_restart";
  std::filesystem::remove_all(dir);
  ManualClock clock{5000};
  std::string passphrase;
  std::string request_id;
  {
    Authority a{clock, {Bytes{7, 7}, 12 * kHour, 365 * 24 * kHour, dir}};
    auto admin_pass = a.bootstrap_user("root@esg.org", {std::string(kAdminGroup)}, CredentialKind::full);
    auto admin = a.login("root@esg.org", admin_pass);
    a.add_policy({"climate", "lfn://pcm/**", {Action::read}}, admin);
    request_id = a.register_user({"F", "f@x.org", "X", {"climate"}}).id;
    passphrase = *a.review(request_id, true, admin).passphrase;
    a.authorize(admin, "lfn://pcm/a", Action::read);
  }
  Authority b{clock, {Bytes{7, 7}, 12 * kHour, 365 * 24 * kHour, dir}};
  auto token = b.login("f@x.org", passphrase);
  CHECK(b.authorize(token, "lfn://pcm/run1", Action::read));
  CHECK(b.request(request_id)->status == RegistrationStatus::accepted);
  CHECK(b.audit_count() == 2);
  CHECK(b.register_user({"G", "g@x.org", "X", {}}).id == "reg-2");
  std::filesystem::remove_all(dir);
}
