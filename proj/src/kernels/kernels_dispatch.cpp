#include <atomic>
#include <cstdlib>
#include <cstring>
#include <string>

#include "medfuse/error.hpp"
#include "medfuse/kernels.hpp"

namespace medfuse::kernels {

namespace {

Backend detect_default() {
    if (const char* env = std::getenv("MEDFUSE_BACKEND")) {
        if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
        if (std::strcmp(env, "avx2") == 0) {
            if (!backend_available(Backend::avx2)) {
                throw ConfigError("MEDFUSE_BACKEND=avx2 but AVX2 is not available on this CPU");
            }
            return Backend::avx2;
        }
        throw ConfigError(std::string("unknown MEDFUSE_BACKEND value: ") + env);
    }
    return backend_available(Backend::avx2) ? Backend::avx2 : Backend::scalar;
}

std::atomic<Backend>& active_slot() {
    static std::atomic<Backend> backend{detect_default()};
    return backend;
}

}  // namespace

const char* backend_name(Backend b) {
    switch (b) {
        case Backend::scalar: return "scalar";
        case Backend::avx2: return "avx2";
    }
    return "?";
}

bool backend_available(Backend b) {
    if (b == Backend::scalar) return true;
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") != 0;
#else
    return false;
#endif
}

Backend active_backend() { return active_slot().load(std::memory_order_relaxed); }

void set_backend(Backend b) {
    if (!backend_available(b)) {
        throw ConfigError(std::string("kernel backend not available: ") + backend_name(b));
    }
    active_slot().store(b, std::memory_order_relaxed);
}

const Ops& ops() {
    switch (active_backend()) {
#if defined(__x86_64__) || defined(_M_X64)
        case Backend::avx2: return avx2_ops();
#endif
        default: return scalar_ops();
    }
}

}  // namespace medfuse::kernels
