#include "esg/common/error.hpp"

#include <chrono>

#include "esg/common/clock.hpp"

namespace esg {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::not_found: return "not_found";
    case Errc::already_exists: return "already_exists";
    case Errc::denied: return "denied";
    case Errc::conflict: return "conflict";
    case Errc::transient: return "transient";
    case Errc::checksum_mismatch: return "checksum_mismatch";
    case Errc::no_space: return "no_space";
    case Errc::corrupt: return "corrupt";
    case Errc::failed_precondition: return "failed_precondition";
    case Errc::unavailable: return "unavailable";
  }
  return "unknown";
}

Millis SystemClock::now() const {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch())
      .count();
}

}  // namespace esg
