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

#include "kitten/temporal_modes.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/core.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "kitten/error.hpp"

namespace kitten::modes {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_same_grid(const TimeGrid &a, const TimeGrid &b, const char *what) {
    if (!a.same_as(b)) {
        throw DomainError(fmt::format("grid mismatch in {}", what));
    }
}

void normalize(ModeFunction &m) {
    const double n2 = m.norm_squared();
    if (!(n2 > 0.0)) {
        throw DomainError("mode has zero norm on the grid");
    }
    const double s = 1.0 / std::sqrt(n2);
    for (auto &v : m.values) v *= s;
}

nlohmann::json grid_json(const TimeGrid &g) { return {{"t0", g.t0}, {"dt", g.dt}, {"n", g.n}}; }

TimeGrid grid_from_json(const nlohmann::json &j) {
    TimeGrid g{j.at("t0").get<double>(), j.at("dt").get<double>(), j.at("n").get<std::size_t>()};
    g.validate();
    return g;
}

nlohmann::json read_header(std::istream &is, const char *kind) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("# ", 0) != 0) {
        throw IoError(fmt::format("{} file: missing '# {{...}}' header line", kind));
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line.substr(2));
    } catch (const nlohmann::json::exception &e) {
        throw IoError(fmt::format("{} file: bad header: {}", kind, e.what()));
    }
    if (j.value("kind", std::string{}) != kind) {
        throw IoError(fmt::format("expected a {} file, header says '{}'", kind, j.value("kind", std::string{})));
    }
    return j;
}

std::vector<double> parse_row(const std::string &line, std::size_t expected, std::size_t lineno) {
    std::vector<double> out;
    out.reserve(expected);
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(cell, &used));
        } catch (const std::exception &) {
            throw IoError(fmt::format("line {}: cannot parse '{}'", lineno, cell));
        }
    }
    if (out.size() != expected) {
        throw IoError(fmt::format("line {}: expected {} columns, found {}", lineno, expected, out.size()));
    }
    return out;
}

}  // namespace

TimeGrid TimeGrid::symmetric(double half_width, std::size_t n) {
    TimeGrid g{-half_width, 2.0 * half_width / static_cast<double>(n - 1), n};
    g.validate();
    return g;
}

void TimeGrid::validate() const {
    if (!(dt > 0.0) || n < 2 || !std::isfinite(t0)) {
        throw DomainError(fmt::format("invalid time grid (t0={}, dt={}, n={})", t0, dt, n));
    }
}

bool TimeGrid::same_as(const TimeGrid &o) const {
    return n == o.n && std::abs(dt - o.dt) <= 1e-12 * dt && std::abs(t0 - o.t0) <= 1e-9 * dt;
}

TimeGrid default_psi0_grid(double zeta0) { return TimeGrid::symmetric(8.0 / zeta0, 4096); }

double ModeFunction::norm_squared() const {
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) acc += grid.weight(i) * std::norm(values[i]);
    return acc;
}

cdouble inner(const ModeFunction &a, const ModeFunction &b) {
    check_same_grid(a.grid, b.grid, "inner product");
    cdouble acc = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) acc += a.grid.weight(i) * std::conj(a.values[i]) * b.values[i];
    return acc;
}

KernelMatrix KernelMatrix::rank_one(const ModeFunction &mode) {
    KernelMatrix h{mode.grid, Eigen::MatrixXcd(mode.grid.n, mode.grid.n)};
    for (std::size_t i = 0; i < mode.grid.n; ++i)
        for (std::size_t j = 0; j < mode.grid.n; ++j)
            h.entries(Eigen::Index(i), Eigen::Index(j)) = mode.values[i] * std::conj(mode.values[j]);
    return h;
}

KernelMatrix KernelMatrix::stationary_exponential(double zeta, const TimeGrid &grid, double scale) {
    grid.validate();
    KernelMatrix h{grid, Eigen::MatrixXcd(grid.n, grid.n)};
    for (std::size_t i = 0; i < grid.n; ++i)
        for (std::size_t j = 0; j < grid.n; ++j)
            h.entries(Eigen::Index(i), Eigen::Index(j)) = scale * std::exp(-zeta * std::abs(grid.at(i) - grid.at(j)));
    return h;
}

KernelMatrix KernelMatrix::delta_like(const TimeGrid &grid, double scale) {
    grid.validate();
    KernelMatrix h{grid, Eigen::MatrixXcd::Zero(Eigen::Index(grid.n), Eigen::Index(grid.n))};
    for (std::size_t i = 0; i < grid.n; ++i) h.entries(Eigen::Index(i), Eigen::Index(i)) = scale / grid.weight(i);
    return h;
}

ModeFunction dft_mode(int k, double window, const TimeGrid &grid) {
    grid.validate();
    if (!(window > 0.0)) throw DomainError(fmt::format("trigger window must be > 0 (got {})", window));
    const double tol = 1e-9 * grid.dt;
    if (grid.t0 > -0.5 * window + tol || grid.t_end() < 0.5 * window - tol) {
        throw DomainError(fmt::format("grid [{}, {}] does not cover the window [-T/2, T/2] with T={}", grid.t0,
                                      grid.t_end(), window));
    }
    if (k != 0 && window / std::abs(k) / grid.dt < 8.0) {
        throw DomainError(fmt::format("resolution: k={} needs dt <= {} (have {})", k, window / std::abs(k) / 8.0, grid.dt));
    }
    ModeFunction m{grid, std::vector<cdouble>(grid.n, 0.0)};
    for (std::size_t i = 0; i < grid.n; ++i) {
        const double t = grid.at(i);
        if (std::abs(t) <= 0.5 * window + tol) {
            m.values[i] = std::polar(1.0 / std::sqrt(window), -2.0 * kPi * k * t / window);
        }
    }
    normalize(m);
    return m;
}

ModeFunction psi0(double zeta0, const TimeGrid &grid) {
    grid.validate();
    if (!(zeta0 > 0.0)) throw DomainError(fmt::format("zeta0 must be > 0 (got {})", zeta0));
    const double reach = std::min(-grid.t0, grid.t_end());
    if (reach * zeta0 < 6.0 * (1.0 - 1e-12)) {
        throw DomainError(fmt::format("grid too short for psi0: truncation {:.2e} of the norm (need |t| >= 6/zeta0)",
                                      std::exp(-2.0 * zeta0 * std::max(reach, 0.0))));
    }
    ModeFunction m{grid, std::vector<cdouble>(grid.n)};
    const double amp = std::sqrt(zeta0);
    for (std::size_t i = 0; i < grid.n; ++i) m.values[i] = amp * std::exp(-zeta0 * std::abs(grid.at(i)));
    normalize(m);
    return m;
}

ModeSolution solve_modes(const KernelMatrix &h, std::size_t count) {
    const auto n = Eigen::Index(h.grid.n);
    if (h.entries.rows() != n || h.entries.cols() != n) {
        throw DomainError("kernel matrix does not match its grid");
    }
    if (count > h.grid.n) {
        throw DomainError(fmt::format("requested {} modes from a {}-point grid", count, h.grid.n));
    }
    const double scale = std::max(h.entries.cwiseAbs().maxCoeff(), 1e-300);
    const double asym = (h.entries - h.entries.adjoint()).cwiseAbs().maxCoeff();
    if (asym > 1e-10 * scale) {
        throw DomainError(fmt::format("invalid kernel: not Hermitian (max |h - h^+| = {:.3g})", asym));
    }

    Eigen::VectorXd sqrt_w(n);
    for (Eigen::Index i = 0; i < n; ++i) sqrt_w(i) = std::sqrt(h.grid.weight(std::size_t(i)));
    const Eigen::MatrixXcd sym = sqrt_w.asDiagonal() * (0.5 * (h.entries + h.entries.adjoint())) * sqrt_w.asDiagonal();

    Eigen::VectorXd evals;
    Eigen::MatrixXcd evecs;
    if (sym.imag().cwiseAbs().maxCoeff() == 0.0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym.real());
        evals = es.eigenvalues();
        evecs = es.eigenvectors().cast<cdouble>();
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sym);
        evals = es.eigenvalues();
        evecs = es.eigenvectors();
    }
    const double top = std::max(std::abs(evals(n - 1)), std::abs(evals(0)));
    if (evals(0) < -1e-8 * std::max(top, 1.0)) {
        throw DomainError(fmt::format("invalid kernel: not positive semidefinite (eigenvalue {:.3g})", evals(0)));
    }

    ModeSolution out;
    for (std::size_t k = 0; k < count; ++k) {
        const Eigen::Index col = n - 1 - Eigen::Index(k);
        Eigen::VectorXcd u = evecs.col(col);
        Eigen::Index peak = 0;
        u.cwiseAbs().maxCoeff(&peak);
        u *= std::abs(u(peak)) / u(peak);
        ModeFunction m{h.grid, std::vector<cdouble>(h.grid.n)};
        for (Eigen::Index i = 0; i < n; ++i) m.values[std::size_t(i)] = u(i) / sqrt_w(i);
        out.eigenvalues.push_back(evals(col));
        out.modes.push_back(std::move(m));
    }
    return out;
}

double capture_error(const KernelMatrix &h, std::span<const ModeFunction> modes) {
    for (std::size_t a = 0; a < modes.size(); ++a) {
        check_same_grid(h.grid, modes[a].grid, "capture_error");
        for (std::size_t b = a; b < modes.size(); ++b) {
            const cdouble g = inner(modes[a], modes[b]);
            if (std::abs(g - (a == b ? 1.0 : 0.0)) > 1e-8) {
                throw DomainError(fmt::format("capture_error: modes {} and {} are not orthonormal (<a|b> = {})", a, b,
                                              std::abs(g)));
            }
        }
    }
    const auto n = Eigen::Index(h.grid.n);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) total += h.grid.weight(std::size_t(i)) * h.entries(i, i).real();
    for (const auto &m : modes) {
        Eigen::VectorXcd wpsi(n);
        for (Eigen::Index i = 0; i < n; ++i) wpsi(i) = h.grid.weight(std::size_t(i)) * m.values[std::size_t(i)];
        total -= wpsi.dot(h.entries * wpsi).real();
    }
    return total;
}

cdouble project_trace(std::span<const cdouble> trace, const TimeGrid &grid, const ModeFunction &mode) {
    check_same_grid(grid, mode.grid, "project_trace");
    if (trace.size() != mode.values.size()) {
        throw DomainError(fmt::format("grid mismatch: trace has {} samples, mode has {}", trace.size(), mode.values.size()));
    }
    cdouble acc = 0.0;
    for (std::size_t i = 0; i < trace.size(); ++i) acc += grid.weight(i) * std::conj(mode.values[i]) * trace[i];
    return acc;
}

double project_trace(std::span<const double> trace, const TimeGrid &grid, const ModeFunction &mode) {
    check_same_grid(grid, mode.grid, "project_trace");
    if (trace.size() != mode.values.size()) {
        throw DomainError(fmt::format("grid mismatch: trace has {} samples, mode has {}", trace.size(), mode.values.size()));
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < trace.size(); ++i) acc += grid.weight(i) * mode.values[i].real() * trace[i];
    return acc;
}

void write_mode(std::ostream &os, const ModeFunction &mode, const std::string &provenance, double zeta0) {
    nlohmann::json head{{"kind", "mode"}, {"grid", grid_json(mode.grid)}, {"zeta0", zeta0}, {"provenance", provenance}};
    os << "# " << head.dump() << '\n';
    for (std::size_t i = 0; i < mode.values.size(); ++i) {
        fmt::print(os, "{:.17g},{:.17g},{:.17g}\n", mode.grid.at(i), mode.values[i].real(), mode.values[i].imag());
    }
}

ModeFunction read_mode(std::istream &is) {
    const auto head = read_header(is, "mode");
    ModeFunction m{grid_from_json(head.at("grid")), {}};
    m.values.reserve(m.grid.n);
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto row = parse_row(line, 3, lineno);
        m.values.emplace_back(row[1], row[2]);
    }
    if (m.values.size() != m.grid.n) {
        throw IoError(fmt::format("mode file: header promises {} samples, found {}", m.grid.n, m.values.size()));
    }
    return m;
}

void write_kernel(std::ostream &os, const KernelMatrix &h, const std::string &provenance, double zeta0) {
    nlohmann::json head{{"kind", "kernel"}, {"grid", grid_json(h.grid)}, {"zeta0", zeta0}, {"provenance", provenance},
                        {"layout", "row i: re(h_i0),im(h_i0),re(h_i1),..."}};
    os << "# " << head.dump() << '\n';
    for (Eigen::Index i = 0; i < h.entries.rows(); ++i) {
        for (Eigen::Index j = 0; j < h.entries.cols(); ++j) {
            fmt::print(os, "{}{:.17g},{:.17g}", j == 0 ? "" : ",", h.entries(i, j).real(), h.entries(i, j).imag());
        }
        os << '\n';
    }
}

KernelMatrix read_kernel(std::istream &is) {
    const auto head = read_header(is, "kernel");
    KernelMatrix h{grid_from_json(head.at("grid")), {}};
    const auto n = Eigen::Index(h.grid.n);
    h.entries.resize(n, n);
    std::string line;
    std::size_t lineno = 1;
    Eigen::Index row = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (row >= n) throw IoError(fmt::format("line {}: kernel has more than {} rows", lineno, n));
        const auto vals = parse_row(line, 2 * h.grid.n, lineno);
        for (Eigen::Index j = 0; j < n; ++j) h.entries(row, j) = {vals[std::size_t(2 * j)], vals[std::size_t(2 * j + 1)]};
        ++row;
    }
    if (row != n) throw IoError(fmt::format("kernel file: expected {} rows, found {}", n, row));
    return h;
}

}  // namespace kitten::modes
