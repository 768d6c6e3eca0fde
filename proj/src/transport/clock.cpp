#include "edgemap/transport/clock.hpp"

#include <condition_variable>
#include <mutex>

namespace edgemap {

Timestamp SteadyScanClock::now() const {
    return std::chrono::duration_cast<Timestamp>(std::chrono::steady_clock::now() - origin_);
}

bool SteadyScanClock::sleep_until(Timestamp deadline, std::stop_token stop) {
    std::mutex m;
    std::condition_variable_any cv;
    std::unique_lock lock(m);
    auto until = origin_ + deadline;
    cv.wait_until(lock, stop, until, [] { return false; });
    return !stop.stop_requested();
}

bool VirtualClock::sleep_until(Timestamp deadline, std::stop_token stop) {
    if (stop.stop_requested()) return false;
    advance_to(deadline);
    return true;
}

void VirtualClock::advance_to(Timestamp t) {
    auto target = t.count();
    auto current = now_.load(std::memory_order_acquire);
    while (current < target && !now_.compare_exchange_weak(current, target, std::memory_order_acq_rel)) {
    }
}

}  // namespace edgemap
