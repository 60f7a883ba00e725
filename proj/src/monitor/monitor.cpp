#include "esg/monitor/monitor.hpp"

#include <algorithm>

#include "esg/common/error.hpp"

namespace esg::monitor {

std::string_view to_string(ServiceState state) {
  switch (state) {
    case ServiceState::up: return "UP";
    case ServiceState::down: return "DOWN";
    case ServiceState::unknown: return "UNKNOWN";
  }
  return "?";
}

ServiceState state_for(std::optional<Millis> last_heartbeat, Millis interval, Millis now,
                       int staleness) {
  if (!last_heartbeat) return ServiceState::unknown;
  return now - *last_heartbeat < staleness * interval ? ServiceState::up : ServiceState::down;
}

void Monitor::register_service(const std::string& id, Millis interval, int staleness) {
  if (interval <= 0 || staleness <= 0) {
    throw Error(Errc::invalid_argument, "heartbeat interval must be positive");
  }
  std::lock_guard lock(mutex_);
  auto& s = services_[id];
  s.interval = interval;
  s.staleness = staleness;
}

bool Monitor::registered(const std::string& id) const {
  std::lock_guard lock(mutex_);
  return services_.contains(id);
}

void Monitor::settle(Service& s, Millis now) {
  if (s.current() == ServiceState::up &&
      state_for(s.last_heartbeat, s.interval, now, s.staleness) == ServiceState::down) {
    s.history.push_back({*s.last_heartbeat + s.staleness * s.interval, ServiceState::down});
  }
}

void Monitor::heartbeat(const std::string& id, Millis now) {
  std::lock_guard lock(mutex_);
  auto it = services_.find(id);
  if (it == services_.end()) throw Error(Errc::not_found, "unknown service " + id);
  auto& s = it->second;
  settle(s, now);
  s.last_heartbeat = std::max(now, s.last_heartbeat.value_or(now));
  if (s.current() != ServiceState::up) s.history.push_back({now, ServiceState::up});
}

ServiceState Monitor::status(const std::string& id, Millis now) {
  std::lock_guard lock(mutex_);
  auto it = services_.find(id);
  if (it == services_.end()) return ServiceState::unknown;
  settle(it->second, now);
  return state_for(it->second.last_heartbeat, it->second.interval, now, it->second.staleness);
}

double Monitor::availability(const std::string& id, Millis window, Millis now) {
  if (window <= 0) throw Error(Errc::invalid_argument, "window must be positive");
  std::lock_guard lock(mutex_);
  auto it = services_.find(id);
  if (it == services_.end()) return 0.0;
  settle(it->second, now);
  const auto& history = it->second.history;

  Millis from = now - window;
  Millis up = 0;
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (history[i].state != ServiceState::up) continue;
    Millis begin = history[i].at;
    Millis end = i + 1 < history.size() ? history[i + 1].at : now;
    begin = std::max(begin, from);
    end = std::min(end, now);
    if (end > begin) up += end - begin;
  }
  return static_cast<double>(up) / static_cast<double>(window);
}

ServiceStatus Monitor::describe(const std::string& id, Millis now) {
  std::lock_guard lock(mutex_);
  auto it = services_.find(id);
  if (it == services_.end()) return {id, std::nullopt, 0, ServiceState::unknown, {}};
  auto& s = it->second;
  settle(s, now);
  return {id, s.last_heartbeat, s.interval,
          state_for(s.last_heartbeat, s.interval, now, s.staleness), s.history};
}

std::vector<ServiceStatus> Monitor::snapshot(Millis now) {
  std::vector<std::string> ids;
  {
    std::lock_guard lock(mutex_);
    for (const auto& [id, _] : services_) ids.push_back(id);
  }
  std::vector<ServiceStatus> out;
  for (const auto& id : ids) out.push_back(describe(id, now));
  return out;
}

void Monitor::publish(Event event) {
  std::lock_guard lock(mutex_);
  events_.push_back(std::move(event));
  while (events_.size() > event_capacity_) events_.pop_front();
}

std::vector<Event> Monitor::events(const std::string& source) const {
  std::lock_guard lock(mutex_);
  std::vector<Event> out;
  for (const auto& e : events_) {
    if (source.empty() || e.source == source) out.push_back(e);
  }
  return out;
}

}  // namespace esg::monitor
