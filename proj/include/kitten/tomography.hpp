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
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "kitten/quadrature_sampler.hpp"

namespace kitten::tomo {

using cdouble = std::complex<double>;

/// Largest Fock truncation the amplitude and kernel routines accept.
inline constexpr std::size_t kFockCap = 30;

/// Fock-basis density matrix, rows and columns n = 0..dim-1.
struct DensityMatrix {
    Eigen::MatrixXcd entries;

    std::size_t dim() const { return static_cast<std::size_t>(entries.rows()); }
    static DensityMatrix fock(std::size_t n, std::size_t dim);
    static DensityMatrix maximally_mixed(std::size_t dim);

    double min_eigenvalue() const;
    /// Throws DomainError unless Hermitian and unit-trace within `tol` and
    /// the smallest eigenvalue is >= -1e-9.
    void validate(double tol = 1e-10) const;
};

/// Harmonic-oscillator eigenfunctions psi_0..psi_{count-1} at x, normalized
/// recurrence (no explicit Hermite polynomials or factorials).
std::vector<double> hermite_functions(std::size_t count, double x);

/// <n|x_theta> = e^{i n theta} psi_n(x).
cdouble fock_quadrature_amplitude(std::size_t n, double theta, double x);

/// Wigner function of the operator |m><n| at (x, p).
cdouble fock_wigner_kernel(std::size_t m, std::size_t n, double x, double p);

struct BinningOptions {
    std::size_t phase_bins = 24;
    double dx = 0.1;
    double x_max = 6.0;  ///< quadrature bins cover [-x_max, x_max]; outliers go to the edge bins

    std::size_t quadrature_bins() const;
    void validate() const;
};

struct BinnedHistogram {
    BinningOptions binning;
    std::vector<double> counts;  ///< phase-major: counts[k * quadrature_bins + i]
    std::size_t total = 0;

    double phase_center(std::size_t k) const;
    double x_center(std::size_t i) const;
};

BinnedHistogram bin_dataset(const sampling::QuadratureDataset &ds, const BinningOptions &binning = {});

struct MleOptions {
    std::size_t dim = 20;
    std::size_t max_iters = 2000;
    double tol = 1e-9;  ///< stop when the relative log-likelihood gain drops below this
    BinningOptions binning;
    double probability_floor = 1e-300;
};

struct MleResult {
    DensityMatrix rho;
    std::vector<double> log_likelihood;  ///< per iteration, starting with the initial estimate
    std::size_t iterations = 0;
    bool converged = false;
    std::size_t diluted_steps = 0;
    std::size_t floored_bins = 0;  ///< bins with data whose model probability hit the floor
    double clipped_weight = 0.0;   ///< negative eigenvalue mass removed at output
    double tail_weight = 0.0;      ///< sum of rho_nn for n >= dim - 2
};

/// Iterative maximum-likelihood reconstruction on the binned data. The
/// log-likelihood is checked to be nondecreasing every iteration; a
/// violation throws ConvergenceError.
MleResult mle_reconstruct(const sampling::QuadratureDataset &ds, const MleOptions &options = {});
MleResult mle_reconstruct(const BinnedHistogram &hist, const MleOptions &options = {});

/// Binned log-likelihood sum_j f_j log p_j(rho) with f_j the count fractions.
double log_likelihood(const BinnedHistogram &hist, const DensityMatrix &rho);

std::vector<double> photon_dist(const DensityMatrix &rho);

struct WignerSurface {
    std::vector<double> xs;
    std::vector<double> ps;
    std::vector<double> values;  ///< values[i * ps.size() + j] = W(xs[i], ps[j])
    double max_imag_residue = 0.0;
    std::vector<std::string> warnings;

    double at(std::size_t i, std::size_t j) const { return values[i * ps.size() + j]; }
};

double wigner_point(const DensityMatrix &rho, double x, double p);
WignerSurface wigner_from_rho(const DensityMatrix &rho, const std::vector<double> &xs, const std::vector<double> &ps);

std::vector<double> linspace(double lo, double hi, std::size_t n);

/// rho_mn = 2 pi * integral of W(x,p) W_{|n><m|}(x,p), trapezoid rule on a
/// (2 half_width)^2 box with `points`^2 nodes.
DensityMatrix density_from_wigner(const std::function<double(double, double)> &w, std::size_t dim,
                                  double half_width = 9.0, std::size_t points = 361);

/// Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
double fidelity(const DensityMatrix &a, const DensityMatrix &b);
double trace_distance(const DensityMatrix &a, const DensityMatrix &b);

/// Structured text report: metadata line, rho (real and imaginary parts),
/// photon distribution, iteration log.
void write_reconstruction(std::ostream &os, const MleResult &res, const nlohmann::json &meta);
/// "x,p,w" table with a metadata header.
void write_wigner_grid(std::ostream &os, const WignerSurface &w, const nlohmann::json &meta);

}  // namespace kitten::tomo
