#pragma once

#include <cstddef>
#include <functional>

namespace photon_limits {

// Worker count: PHOTON_LIMITS_THREADS if set and positive, else the hardware
// concurrency (at least 1).
std::size_t worker_count();

// Runs body(i) for i in [0, count) on up to worker_count() threads. Work is
// handed out by index, so results written to slot i do not depend on the
// schedule. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace photon_limits
