#pragma once

#include <cstdint>
#include <cstdlib>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dyt1 {

// Exact dyadic rational m * 2^e with a 63-bit odd mantissa.  All cube
// geometry (corners, gaps, relative size/distance) is carried out in this
// type so that regime classification and the counting sweeps never depend
// on floating-point rounding.
struct Dyadic {
    long long m = 0;  // odd, or 0
    int e = 0;        // 0 when m == 0

    Dyadic() = default;
    Dyadic(long long mant, int expo) : m(mant), e(expo) { normalize(); }

    static Dyadic from_int(long long v) { return Dyadic(v, 0); }
    static Dyadic pow2(int expo) { return Dyadic(1, expo); }
    static Dyadic zero() { return Dyadic(); }

    void normalize() {
        if (m == 0) { e = 0; return; }
        while ((m & 1LL) == 0) { m >>= 1; ++e; }
    }

    bool is_zero() const { return m == 0; }
    int sign() const { return m > 0 ? 1 : (m < 0 ? -1 : 0); }

    double to_double() const { return std::ldexp(static_cast<double>(m), e); }

    // bit length of |m| (0 for m == 0)
    static int bitlen(long long v) {
        unsigned long long a = v < 0 ? static_cast<unsigned long long>(-(v + 1)) + 1ull
                                     : static_cast<unsigned long long>(v);
        int n = 0;
        while (a) { a >>= 1; ++n; }
        return n;
    }

    friend Dyadic operator-(const Dyadic& a) { Dyadic r; r.m = -a.m; r.e = a.e; return r; }

    friend Dyadic operator+(const Dyadic& a, const Dyadic& b) {
        if (a.is_zero()) return b;
        if (b.is_zero()) return a;
        int e0 = std::min(a.e, b.e);
        int sa = a.e - e0, sb = b.e - e0;
        if (sa > 62 || sb > 62 || bitlen(a.m) + sa > 62 || bitlen(b.m) + sb > 62)
            throw std::overflow_error("Dyadic add: exponent spread too large");
        return Dyadic((a.m << sa) + (b.m << sb), e0);
    }
    friend Dyadic operator-(const Dyadic& a, const Dyadic& b) { return a + (-b); }

    friend Dyadic operator*(const Dyadic& a, const Dyadic& b) {
        if (a.is_zero() || b.is_zero()) return Dyadic();
        __int128 p = static_cast<__int128>(a.m) * b.m;  // odd * odd = odd
        if (p > static_cast<__int128>(INT64_MAX) || p < static_cast<__int128>(INT64_MIN))
            throw std::overflow_error("Dyadic mul: mantissa overflow");
        return Dyadic(static_cast<long long>(p), a.e + b.e);
    }

    // three-way comparison without materializing a - b (robust to huge
    // exponent spreads)
    static int cmp(const Dyadic& a, const Dyadic& b) {
        int sa = a.sign(), sb = b.sign();
        if (sa != sb) return sa < sb ? -1 : 1;
        if (sa == 0) return 0;
        long long la = bitlen(a.m) + static_cast<long long>(a.e);
        long long lb = bitlen(b.m) + static_cast<long long>(b.e);
        if (la != lb) {
            bool abig = la > lb;
            return (abig == (sa > 0)) ? 1 : -1;
        }
        // same sign and bit length: exponents within 62 of each other
        int e0 = std::min(a.e, b.e);
        __int128 va = static_cast<__int128>(a.m) << (a.e - e0);
        __int128 vb = static_cast<__int128>(b.m) << (b.e - e0);
        return va < vb ? -1 : (va > vb ? 1 : 0);
    }

    friend bool operator==(const Dyadic& a, const Dyadic& b) { return cmp(a, b) == 0; }
    friend bool operator!=(const Dyadic& a, const Dyadic& b) { return cmp(a, b) != 0; }
    friend bool operator<(const Dyadic& a, const Dyadic& b) { return cmp(a, b) < 0; }
    friend bool operator<=(const Dyadic& a, const Dyadic& b) { return cmp(a, b) <= 0; }
    friend bool operator>(const Dyadic& a, const Dyadic& b) { return cmp(a, b) > 0; }
    friend bool operator>=(const Dyadic& a, const Dyadic& b) { return cmp(a, b) >= 0; }
};

inline Dyadic dmin(const Dyadic& a, const Dyadic& b) { return a <= b ? a : b; }
inline Dyadic dmax(const Dyadic& a, const Dyadic& b) { return a >= b ? a : b; }
inline Dyadic dabs(const Dyadic& a) { return a.sign() < 0 ? -a : a; }

// sign of a^2 - 2^s, exact (used for d(I,.) <=> sqrt(l(I) l(J)) tests)
inline int cmp_square_pow2(const Dyadic& a, int s) {
    if (a.is_zero()) return -1;  // 0 < 2^s always
    __int128 mm = static_cast<__int128>(a.m) * a.m;
    long long ee = 2LL * a.e;
    // compare mm * 2^ee with 2^s: compare bit positions first
    int blen = 0;
    __int128 t = mm;
    while (t) { t >>= 1; ++blen; }
    long long lo = ee + blen - 1;  // mm*2^ee in [2^lo, 2^(lo+1))
    if (lo < s) return -1;
    if (lo > s) return 1;
    // equal leading position: equality iff mm is a power of two
    bool pow2 = (mm & (mm - 1)) == 0;
    return pow2 ? 0 : 1;
}

}  // namespace dyt1
