#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "garpp/errors.hpp"

namespace garpp {

/// A gradient is a flat d-dimensional vector of doubles. Finiteness is
/// enforced where values enter from the outside (file reader, JSON config,
/// attack parameters), not inside the aggregation loops.
using GradientVector = std::vector<double>;

inline void ensure_finite(std::span<const double> v, std::string_view what) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) {
            throw format_error(std::string(what) + ": non-finite component at index " +
                               std::to_string(i));
        }
    }
}

inline void check_same_dimension(const GradientVector& a, const GradientVector& b,
                                 std::string_view where) {
    if (a.size() != b.size()) {
        throw precondition_error(std::string(where) + ": dimension mismatch (" +
                                 std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
                                 ")");
    }
}

/// Squared Euclidean distance. Differences are formed in double, the sum is
/// accumulated in long double and rounded once at the end; every distance in
/// the library goes through this exact sequence so cached and recomputed
/// values are bit-identical.
inline double l2_distance_sq(const GradientVector& a, const GradientVector& b) {
    check_same_dimension(a, b, "l2_distance_sq");
    long double acc = 0.0L;
    const std::size_t d = a.size();
    for (std::size_t j = 0; j < d; ++j) {
        const double diff = a[j] - b[j];
        acc += static_cast<long double>(diff) * diff;
    }
    return static_cast<double>(acc);
}

inline double dot(const GradientVector& a, const GradientVector& b) {
    check_same_dimension(a, b, "dot");
    long double acc = 0.0L;
    for (std::size_t j = 0; j < a.size(); ++j) {
        acc += static_cast<long double>(a[j]) * b[j];
    }
    return static_cast<double>(acc);
}

inline double l2_norm(const GradientVector& v) {
    long double acc = 0.0L;
    for (double x : v) acc += static_cast<long double>(x) * x;
    return static_cast<double>(std::sqrt(acc));
}

namespace detail {

inline void check_nonempty_same_d(std::span<const GradientVector> vs, std::string_view where) {
    if (vs.empty()) throw precondition_error(std::string(where) + ": empty input list");
    if (vs.front().empty()) throw precondition_error(std::string(where) + ": zero-dimensional input");
    for (std::size_t i = 1; i < vs.size(); ++i) {
        check_same_dimension(vs.front(), vs[i], where);
    }
}

}  // namespace detail

/// Coordinate-wise arithmetic mean of selected rows, accumulated in long
/// double in ascending position order. The rules pass selected index sets
/// sorted ascending, which fixes the summation order and hence the bits.
inline GradientVector average_of(std::span<const GradientVector> vs,
                                 std::span<const std::size_t> rows) {
    if (rows.empty()) throw precondition_error("average_of: empty selection");
    const std::size_t d = vs[rows.front()].size();
    std::vector<long double> acc(d, 0.0L);
    for (std::size_t r : rows) {
        const GradientVector& v = vs[r];
        for (std::size_t j = 0; j < d; ++j) acc[j] += v[j];
    }
    GradientVector out(d);
    const long double inv = 1.0L / static_cast<long double>(rows.size());
    for (std::size_t j = 0; j < d; ++j) out[j] = static_cast<double>(acc[j] * inv);
    return out;
}

/// Coordinate-wise arithmetic mean of all rows (list order).
inline GradientVector average(std::span<const GradientVector> vs) {
    detail::check_nonempty_same_d(vs, "average");
    const std::size_t d = vs.front().size();
    std::vector<long double> acc(d, 0.0L);
    for (const GradientVector& v : vs) {
        for (std::size_t j = 0; j < d; ++j) acc[j] += v[j];
    }
    GradientVector out(d);
    const long double inv = 1.0L / static_cast<long double>(vs.size());
    for (std::size_t j = 0; j < d; ++j) out[j] = static_cast<double>(acc[j] * inv);
    return out;
}

namespace detail {

/// Median of a scratch buffer (modified in place). Even counts take the
/// arithmetic mean of the two middle order statistics.
inline double median_inplace(std::vector<double>& buf) {
    const std::size_t n = buf.size();
    const std::size_t mid = n / 2;
    std::nth_element(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(mid), buf.end());
    const double hi = buf[mid];
    if (n % 2 == 1) return hi;
    const double lo = *std::max_element(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// Per-coordinate median across the rows. Even row counts use the mean of
/// the two middle order statistics.
inline GradientVector coordinate_median(std::span<const GradientVector> vs) {
    detail::check_nonempty_same_d(vs, "coordinate_median");
    const std::size_t n = vs.size();
    const std::size_t d = vs.front().size();
    GradientVector out(d);
    std::vector<double> column(n);
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < n; ++i) column[i] = vs[i][j];
        out[j] = detail::median_inplace(column);
    }
    return out;
}

/// Indices of the k values closest to center by absolute distance.
/// Ties break toward the lower index; the result is sorted ascending.
inline std::vector<std::size_t> select_k_closest(std::span<const double> values, double center,
                                                 std::size_t k) {
    if (k == 0) throw precondition_error("select_k_closest: k must be positive");
    if (k > values.size()) {
        throw precondition_error("select_k_closest: k = " + std::to_string(k) +
                                 " exceeds list length " + std::to_string(values.size()));
    }
    std::vector<std::size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const double da = std::abs(values[a] - center);
        const double db = std::abs(values[b] - center);
        if (da != db) return da < db;
        return a < b;
    });
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace garpp
