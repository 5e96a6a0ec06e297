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

#include "kitten/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/core.h>

#include "kitten/error.hpp"
#include "kitten/series_io.hpp"

namespace kitten::tomo {

namespace {

using model::kPi;

void check_dim(std::size_t dim, const char *what) {
    if (dim == 0 || dim > kFockCap) {
        throw DomainError(fmt::format("{}: Fock dimension {} outside 1..{}", what, dim, kFockCap));
    }
}

// sqrt(n! / m!) for n, m < kFockCap.
const std::vector<double> &factorial_ratios() {
    static const std::vector<double> table = [] {
        std::vector<double> t(kFockCap * kFockCap);
        for (std::size_t m = 0; m < kFockCap; ++m) {
            for (std::size_t n = 0; n < kFockCap; ++n) t[m * kFockCap + n] = std::exp(0.5 * (std::lgamma(n + 1.0) - std::lgamma(m + 1.0)));
        }
        return t;
    }();
    return table;
}

// Kernel table K[m * dim + n] = W_{|m><n|}(x, p) for m >= n.
void kernel_table(std::size_t dim, double x, double p, std::vector<cdouble> &out) {
    out.assign(dim * dim, cdouble{});
    const auto &ratios = factorial_ratios();
    const double r2 = x * x + p * p;
    const double u = 2.0 * r2;
    const double gauss = std::exp(-r2) / kPi;
    const cdouble s = std::sqrt(2.0) * cdouble(x, -p);
    cdouble sk = 1.0;
    for (std::size_t k = 0; k < dim; ++k) {
        // Generalized Laguerre L_n^{(k)}(u) by the three-term recurrence.
        double l_prev = 0.0, l = 1.0;
        for (std::size_t n = 0; n + k < dim; ++n) {
            if (n == 1) {
                l_prev = 1.0;
                l = 1.0 + static_cast<double>(k) - u;
            } else if (n > 1) {
                const double nn = static_cast<double>(n - 1);
                const double next = ((2.0 * nn + 1.0 + k - u) * l - (nn + k) * l_prev) / (nn + 1.0);
                l_prev = l;
                l = next;
            }
            const std::size_t m = n + k;
            const double ratio = ratios[m * kFockCap + n];
            const double sign = (n % 2 == 0) ? 1.0 : -1.0;
            out[m * dim + n] = sign * ratio * gauss * l * sk;
        }
        sk *= s;
    }
}

// Per-phase real projector table: psi(n, i) = sqrt(dx) psi_n(x_i).
Eigen::MatrixXd projector_table(const BinnedHistogram &hist, std::size_t dim) {
    const std::size_t q = hist.binning.quadrature_bins();
    Eigen::MatrixXd psi(dim, q);
    const double s = std::sqrt(hist.binning.dx);
    for (std::size_t i = 0; i < q; ++i) {
        const auto h = hermite_functions(dim, hist.x_center(i));
        for (std::size_t n = 0; n < dim; ++n) psi(n, i) = s * h[n];
    }
    return psi;
}

// Phase-rotated real part: Re(e^{-i m theta} rho_mn e^{i n theta}).
Eigen::MatrixXd rotated_real(const Eigen::MatrixXcd &rho, double theta) {
    const auto d = rho.rows();
    Eigen::MatrixXd out(d, d);
    for (Eigen::Index m = 0; m < d; ++m) {
        for (Eigen::Index n = 0; n < d; ++n) {
            out(m, n) = (rho(m, n) * std::polar(1.0, static_cast<double>(n - m) * theta)).real();
        }
    }
    return out;
}

struct LikelihoodModel {
    const BinnedHistogram &hist;
    Eigen::MatrixXd psi;
    Eigen::MatrixXd freq;  // phase bins x quadrature bins, count fractions
    std::vector<double> thetas;
    double floor;

    LikelihoodModel(const BinnedHistogram &h, std::size_t dim, double fl)
        : hist(h), psi(projector_table(h, dim)), floor(fl) {
        const std::size_t pb = h.binning.phase_bins, q = h.binning.quadrature_bins();
        freq.resize(static_cast<Eigen::Index>(pb), static_cast<Eigen::Index>(q));
        for (std::size_t k = 0; k < pb; ++k) {
            thetas.push_back(h.phase_center(k));
            for (std::size_t i = 0; i < q; ++i) freq(k, i) = h.counts[k * q + i] / static_cast<double>(h.total);
        }
    }

    // Probabilities p(k, i) for the bins.
    Eigen::MatrixXd probabilities(const Eigen::MatrixXcd &rho) const {
        Eigen::MatrixXd p(freq.rows(), freq.cols());
        for (Eigen::Index k = 0; k < freq.rows(); ++k) {
            const Eigen::MatrixXd b = rotated_real(rho, thetas[k]) * psi;
            p.row(k) = psi.cwiseProduct(b).colwise().sum();
        }
        return p;
    }

    double loglik(const Eigen::MatrixXd &p, std::size_t *floored = nullptr) const {
        double l = 0.0;
        std::size_t nf = 0;
        for (Eigen::Index k = 0; k < freq.rows(); ++k) {
            for (Eigen::Index i = 0; i < freq.cols(); ++i) {
                if (freq(k, i) <= 0.0) continue;
                double pj = p(k, i);
                if (!(pj > floor)) {
                    pj = floor;
                    ++nf;
                }
                l += freq(k, i) * std::log(pj);
            }
        }
        if (floored) *floored = nf;
        return l;
    }

    Eigen::MatrixXcd r_operator(const Eigen::MatrixXd &p) const {
        const auto d = psi.rows();
        Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(d, d);
        for (Eigen::Index k = 0; k < freq.rows(); ++k) {
            Eigen::VectorXd g(freq.cols());
            for (Eigen::Index i = 0; i < freq.cols(); ++i) {
                g(i) = freq(k, i) > 0.0 ? freq(k, i) / std::max(p(k, i), floor) : 0.0;
            }
            const Eigen::MatrixXd s = psi * g.asDiagonal() * psi.transpose();
            for (Eigen::Index m = 0; m < d; ++m) {
                for (Eigen::Index n = 0; n < d; ++n) {
                    r(m, n) += s(m, n) * std::polar(1.0, static_cast<double>(m - n) * thetas[k]);
                }
            }
        }
        return r;
    }
};

Eigen::MatrixXcd sandwich(const Eigen::MatrixXcd &a, const Eigen::MatrixXcd &rho) {
    Eigen::MatrixXcd out = a * rho * a.adjoint();
    out = 0.5 * (out + out.adjoint()).eval();
    return out / out.trace().real();
}

Eigen::MatrixXcd psd_sqrt(const Eigen::MatrixXcd &m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
    const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

void require_same_dim(const DensityMatrix &a, const DensityMatrix &b) {
    if (a.dim() != b.dim()) throw DomainError(fmt::format("density matrices differ in dimension ({} vs {})", a.dim(), b.dim()));
}

}  // namespace

DensityMatrix DensityMatrix::fock(std::size_t n, std::size_t dim) {
    if (n >= dim) throw DomainError(fmt::format("Fock state |{}> does not fit in dimension {}", n, dim));
    DensityMatrix r{Eigen::MatrixXcd::Zero(dim, dim)};
    r.entries(n, n) = 1.0;
    return r;
}

DensityMatrix DensityMatrix::maximally_mixed(std::size_t dim) {
    return {Eigen::MatrixXcd::Identity(dim, dim) / static_cast<double>(dim)};
}

double DensityMatrix::min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(entries, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

void DensityMatrix::validate(double tol) const {
    if (entries.rows() == 0 || entries.rows() != entries.cols()) throw DomainError("density matrix must be square and nonempty");
    const double herm = (entries - entries.adjoint()).cwiseAbs().maxCoeff();
    if (herm > tol) throw DomainError(fmt::format("density matrix not Hermitian (max |rho - rho^dag| = {:.3g})", herm));
    const cdouble tr = entries.trace();
    if (std::abs(tr - 1.0) > tol) throw DomainError(fmt::format("density matrix trace {:.12g} != 1", tr.real()));
    const double lo = min_eigenvalue();
    if (lo < -1e-9) throw DomainError(fmt::format("density matrix has negative eigenvalue {:.3g}", lo));
}

std::vector<double> hermite_functions(std::size_t count, double x) {
    check_dim(count, "hermite_functions");
    std::vector<double> psi(count);
    psi[0] = std::pow(kPi, -0.25) * std::exp(-0.5 * x * x);
    if (count > 1) psi[1] = std::sqrt(2.0) * x * psi[0];
    for (std::size_t n = 1; n + 1 < count; ++n) {
        const double nn = static_cast<double>(n);
        psi[n + 1] = std::sqrt(2.0 / (nn + 1.0)) * x * psi[n] - std::sqrt(nn / (nn + 1.0)) * psi[n - 1];
    }
    return psi;
}

cdouble fock_quadrature_amplitude(std::size_t n, double theta, double x) {
    if (n >= kFockCap) throw DomainError(fmt::format("photon number {} exceeds the Fock cap {}", n, kFockCap));
    return std::polar(hermite_functions(n + 1, x)[n], static_cast<double>(n) * theta);
}

cdouble fock_wigner_kernel(std::size_t m, std::size_t n, double x, double p) {
    const std::size_t hi = std::max(m, n), lo = std::min(m, n);
    if (hi >= kFockCap) throw DomainError(fmt::format("photon number {} exceeds the Fock cap {}", hi, kFockCap));
    std::vector<cdouble> k;
    kernel_table(hi + 1, x, p, k);
    const cdouble v = k[hi * (hi + 1) + lo];
    return m >= n ? v : std::conj(v);
}

std::size_t BinningOptions::quadrature_bins() const {
    return static_cast<std::size_t>(std::llround(2.0 * x_max / dx));
}

void BinningOptions::validate() const {
    if (phase_bins == 0) throw ConfigError("tomography.phase_bins must be > 0");
    if (!(dx > 0.0) || !(x_max > 0.0)) throw ConfigError("tomography.dx and tomography.x_max must be > 0");
    const double ratio = 2.0 * x_max / dx;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
        throw ConfigError(fmt::format("tomography.dx = {} does not divide the range 2*x_max = {}", dx, 2.0 * x_max));
    }
}

double BinnedHistogram::phase_center(std::size_t k) const {
    return kPi * (static_cast<double>(k) + 0.5) / static_cast<double>(binning.phase_bins);
}

double BinnedHistogram::x_center(std::size_t i) const {
    return -binning.x_max + binning.dx * (static_cast<double>(i) + 0.5);
}

BinnedHistogram bin_dataset(const sampling::QuadratureDataset &ds, const BinningOptions &binning) {
    binning.validate();
    BinnedHistogram h;
    h.binning = binning;
    const std::size_t q = binning.quadrature_bins();
    h.counts.assign(binning.phase_bins * q, 0.0);
    for (const auto &r : ds.records) {
        const auto k = std::min(binning.phase_bins - 1,
                                static_cast<std::size_t>(std::max(0.0, r.theta) / kPi * binning.phase_bins));
        const double u = std::floor((r.x + binning.x_max) / binning.dx);
        const auto i = static_cast<std::size_t>(std::clamp(u, 0.0, static_cast<double>(q - 1)));
        h.counts[k * q + i] += 1.0;
    }
    h.total = ds.records.size();
    return h;
}

double log_likelihood(const BinnedHistogram &hist, const DensityMatrix &rho) {
    const std::size_t q = hist.binning.quadrature_bins(), d = rho.dim();
    double l = 0.0;
    for (std::size_t k = 0; k < hist.binning.phase_bins; ++k) {
        for (std::size_t i = 0; i < q; ++i) {
            const double c = hist.counts[k * q + i];
            if (c <= 0.0) continue;
            Eigen::VectorXcd a(d);
            for (std::size_t n = 0; n < d; ++n) a(n) = fock_quadrature_amplitude(n, hist.phase_center(k), hist.x_center(i));
            const double p = hist.binning.dx * (a.adjoint() * rho.entries * a)(0, 0).real();
            l += c / static_cast<double>(hist.total) * std::log(p);
        }
    }
    return l;
}

MleResult mle_reconstruct(const sampling::QuadratureDataset &ds, const MleOptions &options) {
    return mle_reconstruct(bin_dataset(ds, options.binning), options);
}

MleResult mle_reconstruct(const BinnedHistogram &hist, const MleOptions &options) {
    if (hist.total == 0) throw DomainError("cannot reconstruct from an empty dataset");
    if (options.dim < 2) throw ConfigError(fmt::format("tomography.dim must be >= 2 (got {})", options.dim));
    check_dim(options.dim, "tomography.dim");
    const LikelihoodModel lm(hist, options.dim, options.probability_floor);

    MleResult res;
    Eigen::MatrixXcd rho = DensityMatrix::maximally_mixed(options.dim).entries;
    Eigen::MatrixXd p = lm.probabilities(rho);
    double l = lm.loglik(p);
    res.log_likelihood.push_back(l);
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(options.dim, options.dim);

    while (res.iterations < options.max_iters) {
        const Eigen::MatrixXcd r = lm.r_operator(p);
        Eigen::MatrixXcd next = sandwich(r, rho);
        Eigen::MatrixXd p_next = lm.probabilities(next);
        double l_next = lm.loglik(p_next);
        // Diluted fallback: (I + eps R) rho (I + eps R), eps -> 0 gains for any non-stationary rho.
        for (double eps = 1.0; !(l_next >= l) && eps > 1e-12; eps *= 0.5) {
            next = sandwich(id + eps * r, rho);
            p_next = lm.probabilities(next);
            l_next = lm.loglik(p_next);
            ++res.diluted_steps;
        }
        if (!(l_next >= l)) {
            // No ascent direction left at this precision: stationary point.
            res.converged = true;
            break;
        }
        if (l_next < l - 1e-12) {
            throw ConvergenceError(fmt::format("log-likelihood decreased at iteration {} ({} -> {})", res.iterations + 1, l, l_next));
        }
        ++res.iterations;
        const double gain = (l_next - l) / std::max(std::abs(l), 1e-300);
        rho = std::move(next);
        p = std::move(p_next);
        l = l_next;
        res.log_likelihood.push_back(l);
        if (gain < options.tol) {
            res.converged = true;
            break;
        }
    }
    lm.loglik(p, &res.floored_bins);

    // Physicality repair at output: clip negative eigenvalues, renormalize.
    rho = 0.5 * (rho + rho.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho);
    Eigen::VectorXd ev = es.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev(i) < 0.0) {
            res.clipped_weight -= ev(i);
            ev(i) = 0.0;
        }
    }
    rho = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
    rho = 0.5 * (rho + rho.adjoint()).eval();
    rho /= rho.trace().real();
    res.rho.entries = rho;
    for (std::size_t n = options.dim - 2; n < options.dim; ++n) res.tail_weight += rho(n, n).real();
    return res;
}

std::vector<double> photon_dist(const DensityMatrix &rho) {
    std::vector<double> out(rho.dim());
    for (std::size_t n = 0; n < rho.dim(); ++n) out[n] = rho.entries(n, n).real();
    return out;
}

double wigner_point(const DensityMatrix &rho, double x, double p) {
    return wigner_from_rho(rho, {x}, {p}).values[0];
}

WignerSurface wigner_from_rho(const DensityMatrix &rho, const std::vector<double> &xs, const std::vector<double> &ps) {
    const std::size_t d = rho.dim();
    check_dim(d, "wigner_from_rho");
    for (double v : xs) {
        if (!std::isfinite(v)) throw DomainError("wigner_from_rho: x grid contains a non-finite value");
    }
    for (double v : ps) {
        if (!std::isfinite(v)) throw DomainError("wigner_from_rho: p grid contains a non-finite value");
    }
    WignerSurface out;
    out.xs = xs;
    out.ps = ps;
    out.values.resize(xs.size() * ps.size());
    std::vector<cdouble> k;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        for (std::size_t j = 0; j < ps.size(); ++j) {
            kernel_table(d, xs[i], ps[j], k);
            cdouble w = 0.0;
            for (std::size_t m = 0; m < d; ++m) {
                w += rho.entries(m, m) * k[m * d + m];
                for (std::size_t n = 0; n < m; ++n) {
                    w += rho.entries(m, n) * k[m * d + n] + rho.entries(n, m) * std::conj(k[m * d + n]);
                }
            }
            out.values[i * ps.size() + j] = w.real();
            out.max_imag_residue = std::max(out.max_imag_residue, std::abs(w.imag()));
        }
    }
    double tail = 0.0;
    for (std::size_t n = d >= 2 ? d - 2 : 0; n < d; ++n) tail += rho.entries(n, n).real();
    if (tail > 1e-3) {
        out.warnings.push_back(fmt::format("Fock truncation: weight {:.3g} in the top two levels of dimension {}", tail, d));
    }
    return out;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

DensityMatrix density_from_wigner(const std::function<double(double, double)> &w, std::size_t dim, double half_width,
                                  std::size_t points) {
    check_dim(dim, "density_from_wigner");
    if (points < 3 || !(half_width > 0.0)) throw DomainError("density_from_wigner: need half_width > 0 and >= 3 points");
    const auto grid = linspace(-half_width, half_width, points);
    const double h = grid[1] - grid[0];
    auto weight = [&](std::size_t i) { return (i == 0 || i + 1 == points) ? 0.5 * h : h; };
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(dim, dim);
    std::vector<cdouble> k;
    for (std::size_t i = 0; i < points; ++i) {
        for (std::size_t j = 0; j < points; ++j) {
            const double f = weight(i) * weight(j) * w(grid[i], grid[j]);
            if (f == 0.0) continue;
            kernel_table(dim, grid[i], grid[j], k);
            for (std::size_t m = 0; m < dim; ++m) {
                for (std::size_t n = 0; n <= m; ++n) acc(m, n) += f * std::conj(k[m * dim + n]);
            }
        }
    }
    DensityMatrix rho{Eigen::MatrixXcd::Zero(dim, dim)};
    for (std::size_t m = 0; m < dim; ++m) {
        for (std::size_t n = 0; n <= m; ++n) {
            rho.entries(m, n) = 2.0 * kPi * acc(m, n);
            rho.entries(n, m) = std::conj(rho.entries(m, n));
        }
        rho.entries(m, m) = rho.entries(m, m).real();
    }
    return rho;
}

double fidelity(const DensityMatrix &a, const DensityMatrix &b) {
    require_same_dim(a, b);
    const Eigen::MatrixXcd sa = psd_sqrt(a.entries);
    Eigen::MatrixXcd inner = sa * b.entries * sa;
    inner = 0.5 * (inner + inner.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(inner, Eigen::EigenvaluesOnly);
    const double t = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    return t * t;
}

double trace_distance(const DensityMatrix &a, const DensityMatrix &b) {
    require_same_dim(a, b);
    Eigen::MatrixXcd diff = a.entries - b.entries;
    diff = 0.5 * (diff + diff.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(diff, Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

void write_reconstruction(std::ostream &os, const MleResult &res, const nlohmann::json &meta) {
    nlohmann::json m = meta;
    m["dim"] = res.rho.dim();
    m["iterations"] = res.iterations;
    m["converged"] = res.converged;
    m["diluted_steps"] = res.diluted_steps;
    m["floored_bins"] = res.floored_bins;
    m["clipped_weight"] = res.clipped_weight;
    m["tail_weight"] = res.tail_weight;
    std::string out = "# kitten reconstruction\n# meta: " + m.dump() + "\n";
    const std::size_t d = res.rho.dim();
    for (const bool imag : {false, true}) {
        out += imag ? "[rho_imag]\n" : "[rho_real]\n";
        for (std::size_t r = 0; r < d; ++r) {
            for (std::size_t c = 0; c < d; ++c) {
                const cdouble v = res.rho.entries(r, c);
                out += io::fmt_double(imag ? v.imag() : v.real());
                out += c + 1 < d ? ',' : '\n';
            }
        }
    }
    out += "[photon_distribution]\nn,p\n";
    const auto pd = photon_dist(res.rho);
    for (std::size_t n = 0; n < pd.size(); ++n) out += fmt::format("{},{}\n", n, io::fmt_double(pd[n]));
    out += "[iterations]\niteration,log_likelihood\n";
    for (std::size_t i = 0; i < res.log_likelihood.size(); ++i) {
        out += fmt::format("{},{}\n", i, io::fmt_double(res.log_likelihood[i]));
    }
    os << out;
}

void write_wigner_grid(std::ostream &os, const WignerSurface &w, const nlohmann::json &meta) {
    std::string out = "# kitten wigner grid\n# meta: " + meta.dump() + "\n";
    for (const auto &msg : w.warnings) out += "# warning: " + msg + "\n";
    out += "x,p,w\n";
    for (std::size_t i = 0; i < w.xs.size(); ++i) {
        for (std::size_t j = 0; j < w.ps.size(); ++j) {
            out += io::fmt_double(w.xs[i]) + "," + io::fmt_double(w.ps[j]) + "," + io::fmt_double(w.at(i, j)) + "\n";
        }
    }
    os << out;
}

}  // namespace kitten::tomo
