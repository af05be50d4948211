#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace qhskew {

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_error = 0.0;
    double intercept_error = 0.0;
    std::size_t points = 0;
};

/// Ordinary least squares y = intercept + slope x with residual-based errors.
inline LinearFit ordinary_least_squares(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("least squares: size mismatch");
    if (x.size() < 2) throw std::invalid_argument("least squares: need at least 2 points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0.0) throw std::invalid_argument("least squares: degenerate abscissae");
    LinearFit f;
    f.points = x.size();
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    if (x.size() > 2) {
        double sse = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - f.intercept - f.slope * x[i];
            sse += r * r;
        }
        const double s2 = sse / (n - 2.0);
        f.slope_error = std::sqrt(s2 / sxx);
        f.intercept_error = std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
    }
    return f;
}

/// Weighted least squares with known standard deviations sigma_i; the
/// reported errors are the propagated ones (no residual rescaling).
inline LinearFit weighted_least_squares(std::span<const double> x, std::span<const double> y,
                                        std::span<const double> sigma) {
    if (x.size() != y.size() || x.size() != sigma.size())
        throw std::invalid_argument("weighted least squares: size mismatch");
    if (x.size() < 2) throw std::invalid_argument("weighted least squares: need at least 2 points");
    double s = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(sigma[i] > 0.0)) throw std::invalid_argument("weighted least squares: sigma must be > 0");
        const double w = 1.0 / (sigma[i] * sigma[i]);
        s += w;
        sx += w * x[i];
        sy += w * y[i];
        sxx += w * x[i] * x[i];
        sxy += w * x[i] * y[i];
    }
    const double delta = s * sxx - sx * sx;
    if (delta <= 0.0) throw std::invalid_argument("weighted least squares: degenerate abscissae");
    LinearFit f;
    f.points = x.size();
    f.slope = (s * sxy - sx * sy) / delta;
    f.intercept = (sxx * sy - sx * sxy) / delta;
    f.slope_error = std::sqrt(s / delta);
    f.intercept_error = std::sqrt(sxx / delta);
    return f;
}

}  // namespace qhskew
