#include "vcae/parallel.hpp"

#include <cstdlib>
#include <string>
#include <thread>

namespace vcae {

std::size_t thread_count() {
  std::size_t n = std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  if (const char* env = std::getenv("VCAE_THREADS")) {
    try {
      const long cap = std::stol(env);
      if (cap >= 1 && static_cast<std::size_t>(cap) < n) n = static_cast<std::size_t>(cap);
    } catch (...) {
      // ignore unparsable values
    }
  }
  return n;
}

}  // namespace vcae
