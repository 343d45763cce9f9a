#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

namespace cate {

// Exactly rounded floating-point sum (Shewchuk partials, as in fsum).
// The result depends only on the multiset of inputs, not their order,
// which is what makes permutation-invariance claims bitwise instead of
// approximate. Inputs must be finite.
template <typename Scalar>
Scalar exact_sum(const Scalar* x, std::size_t n) {
    std::vector<Scalar> partials;
    partials.reserve(8);
    for (std::size_t t = 0; t < n; ++t) {
        Scalar v = x[t];
        std::size_t keep = 0;
        for (std::size_t j = 0; j < partials.size(); ++j) {
            Scalar p = partials[j];
            if (std::abs(v) < std::abs(p)) std::swap(v, p);
            Scalar hi = v + p;
            Scalar lo = p - (hi - v);
            if (lo != Scalar(0)) partials[keep++] = lo;
            v = hi;
        }
        partials.resize(keep);
        partials.push_back(v);
    }
    if (partials.empty()) return Scalar(0);
    // Sum the non-overlapping partials from largest down, with the
    // half-ulp tie correction so the result is correctly rounded.
    std::size_t i = partials.size() - 1;
    Scalar total = partials[i];
    Scalar err = Scalar(0);
    while (i > 0) {
        Scalar y = partials[--i];
        Scalar next = total + y;
        err = y - (next - total);
        total = next;
        if (err != Scalar(0)) break;
    }
    if (i > 0) {
        Scalar below = partials[i - 1];
        if ((err < Scalar(0) && below < Scalar(0)) ||
            (err > Scalar(0) && below > Scalar(0))) {
            Scalar y = err * Scalar(2);
            Scalar adjusted = total + y;
            if (y == adjusted - total) total = adjusted;
        }
    }
    return total;
}

template <typename Scalar>
Scalar exact_sum(const std::vector<Scalar>& x) {
    return exact_sum(x.data(), x.size());
}

// Numerically stable log(sum(exp(x_i))).
template <typename Scalar>
Scalar log_sum_exp(const Scalar* x, std::size_t n) {
    Scalar m = x[0];
    for (std::size_t i = 1; i < n; ++i) m = std::max(m, x[i]);
    Scalar s = Scalar(0);
    for (std::size_t i = 0; i < n; ++i) s += std::exp(x[i] - m);
    return m + std::log(s);
}

// Round to the given number of significant decimal digits via text
// round-trip. Used when recorded metrics must match their printed form.
inline double round_sig(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
    return std::strtod(buf, nullptr);
}

inline std::string format_sig(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
    return std::string(buf);
}

// FNV-1a over bytes; used for config fingerprints.
inline uint64_t fnv1a(const void* data, std::size_t n, uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline uint64_t fnv1a(const std::string& s) { return fnv1a(s.data(), s.size()); }

}  // namespace cate
