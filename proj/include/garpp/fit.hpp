#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "garpp/errors.hpp"

namespace garpp {

/// Least-squares slope of y against x.
inline double least_squares_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw precondition_error("least_squares_slope: length mismatch");
    if (x.size() < 2) throw precondition_error("least_squares_slope: need at least 2 points");
    const std::size_t n = x.size();
    long double mx = 0.0L, my = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<long double>(n);
    my /= static_cast<long double>(n);
    long double sxy = 0.0L, sxx = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        const long double dx = x[i] - mx;
        sxy += dx * (y[i] - my);
        sxx += dx * dx;
    }
    if (sxx == 0.0L) throw precondition_error("least_squares_slope: x values are all equal");
    return static_cast<double>(sxy / sxx);
}

/// Slope of log(y) against log(x); the fitted power-law exponent.
inline double fit_loglog_slope(std::span<const double> x, std::span<const double> y) {
    std::vector<double> lx(x.size()), ly(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] <= 0 || y[i] <= 0) {
            throw precondition_error("fit_loglog_slope: values must be positive");
        }
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    return least_squares_slope(lx, ly);
}

}  // namespace garpp
