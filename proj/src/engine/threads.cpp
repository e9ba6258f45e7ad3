#include "edformer/engine/threads.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

#include "edformer/error.hpp"

namespace edformer::engine {

void set_num_threads(int threads) {
    if (threads < 1) throw ConfigError("thread count must be >= 1, got " + std::to_string(threads));
    omp_set_num_threads(threads);
}

int num_threads() { return omp_get_max_threads(); }

int configure_threads_from_env() {
    int threads = 1;
    if (const char* env = std::getenv("EDFORMER_THREADS"); env != nullptr && *env != '\0') {
        char* end = nullptr;
        const long parsed = std::strtol(env, &end, 10);
        if (*end != '\0' || parsed < 1) throw ConfigError(std::string("EDFORMER_THREADS must be a positive integer, got '") + env + "'");
        threads = static_cast<int>(parsed);
    }
    set_num_threads(threads);
    return threads;
}

}  // namespace edformer::engine
