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

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace kitten::modes {

using cdouble = std::complex<double>;

/// Uniform grid t_i = t0 + i*dt, i = 0..n-1. All integrals over the grid use
/// trapezoidal weights.
struct TimeGrid {
    double t0 = 0.0;
    double dt = 1.0;
    std::size_t n = 2;

    static TimeGrid symmetric(double half_width, std::size_t n);

    double at(std::size_t i) const { return t0 + dt * static_cast<double>(i); }
    double t_end() const { return at(n - 1); }
    double weight(std::size_t i) const { return (i == 0 || i + 1 == n) ? 0.5 * dt : dt; }
    void validate() const;
    bool same_as(const TimeGrid &other) const;
};

/// Default grid for psi0: [-8/zeta0, 8/zeta0] with 4096 points.
TimeGrid default_psi0_grid(double zeta0);

/// Normalized temporal mode (s^-1/2).
struct ModeFunction {
    TimeGrid grid;
    std::vector<cdouble> values;

    double norm_squared() const;
};

/// <a|b> with trapezoidal weights. Grids must match.
cdouble inner(const ModeFunction &a, const ModeFunction &b);

/// Discretized correlation kernel h(t_i, t_j), 1/s.
struct KernelMatrix {
    TimeGrid grid;
    Eigen::MatrixXcd entries;

    /// Rank-one kernel mode(t) conj(mode(t')).
    static KernelMatrix rank_one(const ModeFunction &mode);
    /// Stationary correlation scale * exp(-zeta |t - t'|).
    static KernelMatrix stationary_exponential(double zeta, const TimeGrid &grid, double scale = 1.0);
    /// Discrete delta scale * delta_ij / w_i; the weighted operator is exactly
    /// scale * identity.
    static KernelMatrix delta_like(const TimeGrid &grid, double scale = 1.0);
};

struct ModeSolution {
    std::vector<double> eigenvalues;  ///< descending
    std::vector<ModeFunction> modes;
};

ModeFunction dft_mode(int k, double window, const TimeGrid &grid);
ModeFunction psi0(double zeta0, const TimeGrid &grid);

/// Top-`count` eigenpairs of the weighted integral operator. Eigenvector
/// phases are fixed so the largest-magnitude sample is real and positive.
ModeSolution solve_modes(const KernelMatrix &h, std::size_t count);

/// Square error J_K = trace(h) - sum_k <psi_k|h|psi_k>.
double capture_error(const KernelMatrix &h, std::span<const ModeFunction> modes);

/// Quadrature value sum_i w_i conj(mode_i) trace_i. The trace must be sampled
/// on the mode's grid.
cdouble project_trace(std::span<const cdouble> trace, const TimeGrid &grid, const ModeFunction &mode);
double project_trace(std::span<const double> trace, const TimeGrid &grid, const ModeFunction &mode);

// Delimiter-separated serialization with a one-line JSON header.
void write_mode(std::ostream &os, const ModeFunction &mode, const std::string &provenance, double zeta0 = 0.0);
ModeFunction read_mode(std::istream &is);
void write_kernel(std::ostream &os, const KernelMatrix &h, const std::string &provenance, double zeta0 = 0.0);
KernelMatrix read_kernel(std::istream &is);

}  // namespace kitten::modes
