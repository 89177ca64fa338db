#include "rotadic/parallel.hpp"

namespace rotadic {

namespace {
std::atomic<unsigned> configured_threads{1};
}

void set_thread_count(unsigned threads) noexcept {
    configured_threads.store(threads);
}

unsigned thread_count() noexcept {
    const unsigned configured = configured_threads.load();
    if (configured != 0) {
        return configured;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

} // namespace rotadic
