#pragma once

namespace edformer::engine {

// Caps the thread count used by the OpenMP kernels.
void set_num_threads(int threads);
int num_threads();

// Applies EDFORMER_THREADS if set (default 1, which keeps runs bit-reproducible
// across machines with different core counts). Returns the count in effect.
int configure_threads_from_env();

}  // namespace edformer::engine
