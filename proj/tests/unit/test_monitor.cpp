#include <doctest.h>

#include <random>

#include "esg/common/error.hpp"
#include "esg/monitor/monitor.hpp"

using namespace esg;
using namespace esg::monitor;

TEST_CASE("first heartbeat moves UNKNOWN to UP") {
  Monitor m;
  m.register_service("rls", 5 * kSecond);
  CHECK(m.status("rls", 0) == ServiceState::unknown);
  m.heartbeat("rls", 1000);
  CHECK(m.describe("rls", 1000).history == std::vector<Transition>{{1000, ServiceState::up}});
  CHECK_THROWS_AS(m.heartbeat("nope", 0), Error);
  CHECK(m.status("never-registered", 0) == ServiceState::unknown);
}

TEST_CASE("the 3T rule") {
  Monitor m;
  m.register_service("vds", 5 * kSecond);
  for (Millis t = 0; t <= 50 * kSecond; t += 5 * kSecond) m.heartbeat("vds", t);
  CHECK(m.status("vds", 50 * kSecond + 14990) == ServiceState::up);
  CHECK(m.status("vds", 50 * kSecond + 15000) == ServiceState::down);

  Monitor n;
  n.register_service("cat", 5 * kSecond);
  n.heartbeat("cat", 0);
  CHECK(n.status("cat", 20 * kSecond) == ServiceState::down);
  n.heartbeat("cat", 21 * kSecond);
  CHECK(n.status("cat", 21 * kSecond) == ServiceState::up);
  auto h = n.describe("cat", 21 * kSecond).history;
  CHECK(h == std::vector<Transition>{{0, ServiceState::up},
                                     {15 * kSecond, ServiceState::down},
                                     {21 * kSecond, ServiceState::up}});
}

TEST_CASE("status is the pure 3T formula; history alternates") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    Millis last = static_cast<Millis>(rng() % 100000);
    Millis interval = 1 + static_cast<Millis>(rng() % 10000);
    Millis now = last + static_cast<Millis>(rng() % 60000);
    Monitor m;
    m.register_service("s", interval);
    m.heartbeat("s", last);
    auto expected = now - last < 3 * interval ? ServiceState::up : ServiceState::down;
    REQUIRE(m.status("s", now) == expected);
    REQUIRE(state_for(last, interval, now) == expected);
  }

  Monitor m;
  m.register_service("s", 1000);
  Millis t = 0;
  for (int i = 0; i < 300; ++i) {
    t += static_cast<Millis>(rng() % 5000);
    if (rng() % 2) m.heartbeat("s", t); else m.status("s", t);
  }
  auto h = m.describe("s", t).history;
  for (std::size_t i = 1; i < h.size(); ++i) {
    REQUIRE(h[i].state != h[i - 1].state);
    REQUIRE(h[i].at >= h[i - 1].at);
  }
}

TEST_CASE("availability over a window") {
  Monitor m;
  m.register_service("always", kSecond);
  for (Millis t = 0; t <= 100 * kSecond; t += kSecond) m.heartbeat("always", t);
  CHECK(m.availability("always", 50 * kSecond, 100 * kSecond) == 1.0);

  // UP from 0 to 30 s (last beat at 27 s, stale at 30 s), then DOWN until 60 s.
  Monitor half;
  half.register_service("h", kSecond);
  for (Millis t = 0; t <= 27 * kSecond; t += kSecond) half.heartbeat("h", t);
  CHECK(half.availability("h", 60 * kSecond, 60 * kSecond) == doctest::Approx(0.5).epsilon(1e-12));

  Monitor unknown;
  unknown.register_service("u", kSecond);
  CHECK(unknown.availability("u", 10 * kSecond, 100 * kSecond) == 0.0);
  CHECK(unknown.availability("unregistered", 10 * kSecond, 100 * kSecond) == 0.0);
  CHECK_THROWS_AS(unknown.availability("u", 0, 100), Error);
}

TEST_CASE("availability stays in [0,1] and grows with up time") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    Monitor m, more;
    m.register_service("s", 1000);
    more.register_service("s", 1000);
    Millis t = 0;
    for (int i = 0; i < 50; ++i) {
      t += static_cast<Millis>(rng() % 8000);
      m.heartbeat("s", t);
      more.heartbeat("s", t);
    }
    auto window = 1 + static_cast<Millis>(rng() % 200000);
    auto a = m.availability("s", window, t);
    REQUIRE(a >= 0.0);
    REQUIRE(a <= 1.0);
    // Extra heartbeats that keep the service up cannot lower availability.
    for (Millis extra = t + 1000; extra <= t + 10000; extra += 1000) more.heartbeat("s", extra);
    REQUIRE(more.availability("s", window + 10000, t + 10000) * static_cast<double>(window + 10000) >=
            a * static_cast<double>(window) - 1e-6);
  }
}

TEST_CASE("event feed") {
  Monitor m(3);
  for (int i = 0; i < 5; ++i) m.publish({i, i % 2 ? "datamover" : "storage", "progress", ""});
  CHECK(m.events().size() == 3);
  CHECK(m.events("datamover").size() == 1);
}
