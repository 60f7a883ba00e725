#pragma once

#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "esg/common/clock.hpp"

namespace esg::monitor {

enum class ServiceState { up, down, unknown };

std::string_view to_string(ServiceState state);

/// UP iff a heartbeat was seen and now - last < staleness * interval.
ServiceState state_for(std::optional<Millis> last_heartbeat, Millis interval, Millis now,
                       int staleness = 3);

struct Transition {
  Millis at = 0;
  ServiceState state = ServiceState::unknown;

  bool operator==(const Transition&) const = default;
};

struct ServiceStatus {
  std::string id;
  std::optional<Millis> last_heartbeat;
  Millis interval = 0;
  ServiceState state = ServiceState::unknown;
  std::vector<Transition> history;
};

/// Progress and status events published by other services for operators.
struct Event {
  Millis at = 0;
  std::string source;
  std::string kind;
  std::string detail;
};

class Monitor {
 public:
  explicit Monitor(std::size_t event_capacity = 100000) : event_capacity_(event_capacity) {}

  void register_service(const std::string& id, Millis interval, int staleness = 3);
  bool registered(const std::string& id) const;

  void heartbeat(const std::string& id, Millis now);
  /// Unregistered services are UNKNOWN. Records UP -> DOWN the first time
  /// staleness is observed, stamped at the instant the service went stale.
  ServiceState status(const std::string& id, Millis now);
  /// Fraction of [now - window, now] spent UP.
  double availability(const std::string& id, Millis window, Millis now);

  ServiceStatus describe(const std::string& id, Millis now);
  std::vector<ServiceStatus> snapshot(Millis now);

  void publish(Event event);
  std::vector<Event> events(const std::string& source = {}) const;

 private:
  struct Service {
    Millis interval = 0;
    int staleness = 3;
    std::optional<Millis> last_heartbeat;
    std::vector<Transition> history;

    ServiceState current() const {
      return history.empty() ? ServiceState::unknown : history.back().state;
    }
  };

  void settle(Service& s, Millis now);

  mutable std::mutex mutex_;
  std::map<std::string, Service> services_;
  std::deque<Event> events_;
  std::size_t event_capacity_;
};

}  // namespace esg::monitor
