// Copyright 2026 The Kitten Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Test-only reference routines. Nothing here calls back into the library's
// numerical paths, so results can be used as independent oracles.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

namespace kitten::oracle {

/// Composite trapezoid rule on [lo, hi] with n points.
inline double trapezoid(const std::function<double(double)> &f, double lo, double hi, std::size_t n) {
    const double h = (hi - lo) / static_cast<double>(n - 1);
    double acc = 0.5 * (f(lo) + f(hi));
    for (std::size_t i = 1; i + 1 < n; ++i) acc += f(lo + h * static_cast<double>(i));
    return acc * h;
}

/// Tensor-product trapezoid rule on a rectangle.
inline double trapezoid_2d(const std::function<double(double, double)> &f, double x_lo, double x_hi, double p_lo,
                           double p_hi, std::size_t n) {
    const double hx = (x_hi - x_lo) / static_cast<double>(n - 1);
    const double hp = (p_hi - p_lo) / static_cast<double>(n - 1);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double wx = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
        const double x = x_lo + hx * static_cast<double>(i);
        for (std::size_t j = 0; j < n; ++j) {
            const double wp = (j == 0 || j + 1 == n) ? 0.5 : 1.0;
            acc += wx * wp * f(x, p_lo + hp * static_cast<double>(j));
        }
    }
    return acc * hx * hp;
}

/// Tabulated CDF of a density on [lo, hi], inverted by linear interpolation.
class InverseCdfSampler {
   public:
    InverseCdfSampler(const std::function<double(double)> &pdf, double lo, double hi, std::size_t n) {
        xs_.resize(n);
        cdf_.resize(n);
        const double h = (hi - lo) / static_cast<double>(n - 1);
        double prev = std::max(0.0, pdf(lo));
        xs_[0] = lo;
        cdf_[0] = 0.0;
        for (std::size_t i = 1; i < n; ++i) {
            xs_[i] = lo + h * static_cast<double>(i);
            const double cur = std::max(0.0, pdf(xs_[i]));
            cdf_[i] = cdf_[i - 1] + 0.5 * h * (prev + cur);
            prev = cur;
        }
        for (double &c : cdf_) c /= cdf_.back();
    }

    double cdf(double x) const {
        if (x <= xs_.front()) return 0.0;
        if (x >= xs_.back()) return 1.0;
        const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
        const std::size_t i = static_cast<std::size_t>(it - xs_.begin());
        const double t = (x - xs_[i - 1]) / (xs_[i] - xs_[i - 1]);
        return cdf_[i - 1] + t * (cdf_[i] - cdf_[i - 1]);
    }

    double quantile(double u) const {
        const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
        if (it == cdf_.begin()) return xs_.front();
        if (it == cdf_.end()) return xs_.back();
        const std::size_t i = static_cast<std::size_t>(it - cdf_.begin());
        const double span = cdf_[i] - cdf_[i - 1];
        const double t = span > 0 ? (u - cdf_[i - 1]) / span : 0.0;
        return xs_[i - 1] + t * (xs_[i] - xs_[i - 1]);
    }

    template <class Rng>
    double draw(Rng &rng) const {
        return quantile(std::uniform_real_distribution<double>(0.0, 1.0)(rng));
    }

   private:
    std::vector<double> xs_;
    std::vector<double> cdf_;
};

/// One-sample Kolmogorov-Smirnov statistic.
template <class Cdf>
double ks_statistic(std::vector<double> sample, Cdf &&cdf) {
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

/// Asymptotic 1% critical value of the KS statistic (c(0.01) = 1.628).
inline double ks_critical_1pct(double n_eff) { return 1.628 / std::sqrt(n_eff); }

/// Cyclic Jacobi eigenvalue algorithm for real symmetric matrices (row-major,
/// n x n). Returns eigenvalues in descending order.
inline std::vector<double> jacobi_eigenvalues(std::vector<double> a, std::size_t n) {
    auto at = [&](std::size_t i, std::size_t j) -> double & { return a[i * n + j]; };
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += at(i, j) * at(i, j);
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = at(p, q);
                if (std::abs(apq) < 1e-300) continue;
                const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = at(k, p), akq = at(k, q);
                    at(k, p) = c * akp - s * akq;
                    at(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = at(p, k), aqk = at(q, k);
                    at(p, k) = c * apk - s * aqk;
                    at(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = at(i, i);
    std::sort(ev.begin(), ev.end(), std::greater<>());
    return ev;
}

}  // namespace kitten::oracle
