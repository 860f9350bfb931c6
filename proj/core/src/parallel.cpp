#include "fredholm/parallel.hpp"

#include <cstdlib>
#include <string>

namespace fredholm {
namespace {

std::atomic<unsigned> g_thread_cap{0};

unsigned default_threads() {
  if (const char* env = std::getenv("FREDHOLM_THREADS")) {
    try {
      const long value = std::stol(env);
      if (value > 0) return static_cast<unsigned>(value);
    } catch (const std::exception&) {
      // fall through to hardware concurrency
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace

void set_thread_cap(unsigned threads) { g_thread_cap.store(threads); }

unsigned thread_cap() {
  const unsigned cap = g_thread_cap.load();
  return cap == 0 ? default_threads() : cap;
}

Complex pairwise_sum(std::span<const Complex> values) {
  if (values.empty()) return {};
  if (values.size() <= 8) {
    Complex acc{};
    for (const Complex& v : values) acc += v;
    return acc;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace fredholm
