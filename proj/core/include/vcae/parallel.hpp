#pragma once

#include <cstddef>

namespace vcae {

// Worker count for internal parallelism: hardware concurrency, capped by the
// VCAE_THREADS environment variable when set.
std::size_t thread_count();

}  // namespace vcae
