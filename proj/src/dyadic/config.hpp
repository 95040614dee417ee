#pragma once

#include <cstdint>
#include <string>

#include "dyadic/analysis.hpp"

namespace dyt1 {

struct RunConfig {
    std::string kernel = "compact_model";  // builtin name or config file path
    int n1 = 1, n2 = 1;
    int N = 3, M = 4;
    QuadSpec quad;
    struct Sweep {
        int kmax = 5, jmax = 6, mmax = 6, lmin = -3, lmax = 3;
    } sweep;
    std::string out = "out";
    uint64_t seed = 0;
    double cmax = 50.0;
    double cond_cmax = 10.0;
    std::string only;
    double theta = 0.1;
    int Lmax = 12;
    int threads = 0;  // 0: DYADIC_T1_THREADS env or hardware count

    int effective_threads() const;
    std::string canonical_json() const;
    uint64_t hash() const;
    std::string header(const std::string& tool) const;
    KernelModel load_kernel() const;
    KernelModel load_kernel_named(const std::string& name) const;
    void validate() const;
};

// deterministic uniform doubles in [0,1) from raw 64-bit states
struct DetRng {
    uint64_t s;
    explicit DetRng(uint64_t seed) : s(seed ^ 0x9e3779b97f4a7c15ull) {}
    uint64_t next_u64() {
        // splitmix64
        uint64_t z = (s += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    double next_unit() { return (next_u64() >> 11) * 0x1.0p-53; }
    double next_signed() { return 2.0 * next_unit() - 1.0; }
    long long next_range(long long lo, long long hi) {  // inclusive
        return lo + static_cast<long long>(next_u64() % static_cast<uint64_t>(hi - lo + 1));
    }
};

void write_text_atomic(const std::string& path, const std::string& content);

}  // namespace dyt1
