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

#include "kitten/model_core.hpp"

#include <cmath>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <fmt/core.h>

#include "kitten/error.hpp"

namespace kitten::model {

namespace {

void require(bool ok, const char *field, const char *rule, double value) {
    if (!ok) {
        throw ConfigError(fmt::format("{} {} (got {})", field, rule, value));
    }
}

void check_signed_z(double z) {
    if (!(z > -1.0 && z < 1.0)) {
        throw DomainError(fmt::format("pump ratio z={} outside (-1, 1)", z));
    }
}

double tau_s_at(double z_abs, const LossModel &loss) {
    const double ts = loss.tau_s0 - loss.kappa * z_abs * z_abs;
    if (!(ts >= 0.0 && ts <= 1.0)) {
        throw DomainError(fmt::format("unphysical loss model at this z: tau_s({}) = {}", z_abs, ts));
    }
    return ts;
}

// b(z) - 1, kept separate from b so the tiny heralding terms do not lose
// digits against the leading 1.
double b_minus_one(double z, const CavityParams &cav, const DetectorModel &det, const LossModel &loss) {
    check_signed_z(z);
    const double ts = tau_s_at(std::abs(z), loss);
    return -(1.0 - loss.tau) * ts * cav.gamma_t * det.window * z / (z + 1.0);
}

double herald_denominator(double z, const ModelParams &p, double eta) {
    const double d = 2.0 + b_minus_one(z, p.cavity, p.detector, p.loss) * eta;
    if (!(std::abs(d) > 1e-12)) {
        throw DomainError(fmt::format("degenerate parameters: 2 + [b({})-1] eta vanishes", z));
    }
    return d;
}

// c^2 eta / (2 + [b-1] eta): the amount by which heralding shrinks a(z).
double variance_deficit(double z, const ModelParams &p, double eta) {
    const double c = coeff_c(z, p.cavity, p.detector, p.loss);
    return c * c * eta / herald_denominator(z, p, eta);
}

double log_norm_n(double z, const ModelParams &p, double eta, double nu) {
    const double u = b_minus_one(z, p.cavity, p.detector, p.loss) * eta / 2.0;
    const double v = b_minus_one(-z, p.cavity, p.detector, p.loss) * eta / 2.0;
    if (u > -1.0 && v > -1.0) {
        return -nu - 0.5 * (std::log1p(u) + std::log1p(v));
    }
    const double radicand = (2.0 + 2.0 * u) * (2.0 + 2.0 * v);
    if (!(radicand > 0.0)) {
        throw DomainError(fmt::format("degenerate parameters: negative radicand {} in N", radicand));
    }
    return std::log(2.0) - nu - 0.5 * std::log(radicand);
}

double gaussian_1d(double q, double var) {
    return std::exp(-q * q / (2.0 * var)) / std::sqrt(2.0 * kPi * var);
}

}  // namespace

void CavityParams::validate() const {
    require(gamma_t > 0.0, "cavity.gamma_t", "must be > 0", gamma_t);
    require(gamma_l >= 0.0, "cavity.gamma_l", "must be >= 0", gamma_l);
    require(fsr > 0.0, "cavity.fsr", "must be > 0", fsr);
}

void DetectorModel::validate() const {
    require(eta0 > 0.0 && eta0 <= 1.0, "detector.eta0", "must lie in (0,1]", eta0);
    require(eta_f > 0.0 && eta_f <= 1.0, "detector.eta_f", "must lie in (0,1]", eta_f);
    require(bandwidth > 0.0, "detector.bandwidth", "must be > 0", bandwidth);
    require(window > 0.0, "detector.window", "must be > 0", window);
    require(nu >= 0.0 && std::isfinite(nu), "detector.nu", "must be finite and >= 0", nu);
    const double e = eta();
    require(e > 0.0 && e <= 1.0, "detector.eta", "(eta0*eta_f*B*T) must lie in (0,1]", e);
}

std::vector<std::string> DetectorModel::warnings() const {
    std::vector<std::string> out;
    if (bt() > 0.1) {
        out.push_back(fmt::format("B*T = {:.3g} is not small; the single trigger-mode description is approximate", bt()));
    }
    return out;
}

void LossModel::validate() const {
    require(tau > 0.0 && tau <= 1.0, "loss.tau", "must lie in (0,1]", tau);
    require(tau_h > 0.0 && tau_h <= 1.0, "loss.tau_h", "must lie in (0,1]", tau_h);
    require(std::isfinite(tau_s0), "loss.tau_s0", "must be finite", tau_s0);
    require(std::isfinite(kappa), "loss.kappa", "must be finite", kappa);
}

void ModelParams::validate() const {
    cavity.validate();
    detector.validate();
    loss.validate();
}

double mode_weighted_noise(double count_rate_cps, const DetectorModel &det) {
    return count_rate_cps * det.window * det.bt();
}

ModelParams default_params(double tau) {
    ModelParams p;
    p.loss.tau = tau;
    p.detector.bandwidth = p.cavity.zeta0() / (2.0 * kPi);
    p.detector.nu = mode_weighted_noise(100.0, p.detector);
    return p;
}

PumpRatio::PumpRatio(double z) : z_(z) {
    if (!(z >= 0.0 && z < 1.0)) {
        throw DomainError(fmt::format("pump ratio z={} outside [0, 1)", z));
    }
}

double GaussianComponent::density(double x, double p) const {
    return weight * std::exp(-x * x / vx - p * p / vp) / (kPi * std::sqrt(vx * vp));
}

double GaussianComponent::quadrature_variance(double theta) const {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return 0.5 * (vx * c * c + vp * s * s);
}

double GaussianComponent::marginal(double theta, double q) const {
    return weight * gaussian_1d(q, quadrature_variance(theta));
}

double tau_s(PumpRatio z, const LossModel &loss) { return tau_s_at(z.value(), loss); }

double coeff_a(double z, const CavityParams &cav, const LossModel &loss) {
    check_signed_z(z);
    const double ts = tau_s_at(std::abs(z), loss);
    const double shape = z * (z + 3.0) / ((z + 1.0) * (z + 2.0) * (z + 2.0));
    return 1.0 - loss.tau + loss.tau * (1.0 - 2.0 * ts * cav.gamma_t / cav.zeta0() * shape);
}

double coeff_b(double z, const CavityParams &cav, const DetectorModel &det, const LossModel &loss) {
    return 1.0 + b_minus_one(z, cav, det, loss);
}

double coeff_c(double z, const CavityParams &cav, const DetectorModel &det, const LossModel &loss) {
    check_signed_z(z);
    const double ts = tau_s_at(std::abs(z), loss);
    return std::sqrt((1.0 - loss.tau) * loss.tau) * 2.0 * ts * cav.gamma_t * std::sqrt(det.window) /
           std::sqrt(cav.zeta0()) * z / ((z + 1.0) * (z + 2.0));
}

double sigma2(double z, const ModelParams &params) { return sigma2(z, params, params.detector.eta()); }

double sigma2(double z, const ModelParams &params, double eta) {
    return coeff_a(z, params.cavity, params.loss) - variance_deficit(z, params, eta);
}

double norm_n(PumpRatio z, const ModelParams &params) {
    return norm_n(z, params, params.detector.eta(), params.detector.nu);
}

double norm_n(PumpRatio z, const ModelParams &params, double eta, double nu) {
    return std::exp(log_norm_n(z.value(), params, eta, nu));
}

GaussianComponent gaussian_r(PumpRatio z, const ModelParams &params, double eta, double nu) {
    const double th = params.loss.tau_h;
    GaussianComponent g;
    g.vx = 1.0 - th + th * sigma2(z.value(), params, eta);
    g.vp = 1.0 - th + th * sigma2(-z.value(), params, eta);
    g.weight = norm_n(z, params, eta, nu);
    if (!(g.vx > 0.0 && g.vp > 0.0)) {
        throw DomainError(fmt::format("degenerate parameters: non-positive variance ({}, {})", g.vx, g.vp));
    }
    return g;
}

ConditionalWigner::ConditionalWigner(PumpRatio z, const ModelParams &params) : z_(z.value()) {
    params.validate();
    const double eta = params.detector.eta();
    const double th = params.loss.tau_h;
    r0_.vx = 1.0 - th + th * coeff_a(z_, params.cavity, params.loss);
    r0_.vp = 1.0 - th + th * coeff_a(-z_, params.cavity, params.loss);
    r0_.weight = 1.0;
    dvx_ = th * variance_deficit(z_, params, eta);
    dvp_ = th * variance_deficit(-z_, params, eta);

    const double log_n = log_norm_n(z_, params, eta, params.detector.nu);
    n_ = std::exp(log_n);
    gap_ = -std::expm1(log_n);
    if (!(std::abs(gap_) > 1e-12)) {
        throw DomainError(fmt::format("no heralding events: conditional state undefined (1 - N = {:.3g})", gap_));
    }
    r1_ = {r0_.vx - dvx_, r0_.vp - dvp_, n_};
    if (!(r0_.vx > 0.0 && r0_.vp > 0.0 && r1_.vx > 0.0 && r1_.vp > 0.0)) {
        throw DomainError("degenerate parameters: non-positive Wigner variance");
    }
}

// W = g0 + N/(1-N) (g0 - g1), with g0 - g1 = -g0 expm1(log g1 - log g0).
double ConditionalWigner::operator()(double x, double p) const {
    const double g0 = r0_.density(x, p);
    const double log_ratio = -x * x * dvx_ / (r0_.vx * r1_.vx) - p * p * dvp_ / (r0_.vp * r1_.vp) -
                             0.5 * std::log1p(-dvx_ / r0_.vx) - 0.5 * std::log1p(-dvp_ / r0_.vp);
    return g0 - (n_ / gap_) * g0 * std::expm1(log_ratio);
}

double ConditionalWigner::marginal_unchecked(double theta, double q) const {
    const double c2 = std::cos(theta) * std::cos(theta);
    const double s2 = 1.0 - c2;
    const double var0 = r0_.quadrature_variance(theta);
    const double dvar = 0.5 * (dvx_ * c2 + dvp_ * s2);
    const double var1 = var0 - dvar;
    const double n0 = gaussian_1d(q, var0);
    const double log_ratio = -0.5 * q * q * dvar / (var0 * var1) - 0.5 * std::log1p(-dvar / var0);
    return n0 - (n_ / gap_) * n0 * std::expm1(log_ratio);
}

double ConditionalWigner::marginal(double theta, double q) const {
    const double v = marginal_unchecked(theta, q);
    if (v < -1e-9) {
        throw DomainError(
            fmt::format("unphysical parameter combination: P_theta(q) = {:.3g} at theta={}, q={}", v, theta, q));
    }
    return v;
}

double wigner(double x, double p, PumpRatio z, const ModelParams &params) {
    return ConditionalWigner(z, params)(x, p);
}

double marginal_density(double theta, double q, PumpRatio z, const ModelParams &params) {
    return ConditionalWigner(z, params).marginal(theta, q);
}

std::vector<OriginValue> wigner_origin_curve(std::span<const double> z_grid, const ModelParams &params) {
    std::vector<OriginValue> out;
    out.reserve(z_grid.size());
    for (double z : z_grid) {
        out.push_back({z, ConditionalWigner(PumpRatio(z), params)(0.0, 0.0)});
    }
    return out;
}

SqueezingLevel squeezing_db(double z, const ModelParams &params) {
    return {10.0 * std::log10(coeff_a(z, params.cavity, params.loss)),
            10.0 * std::log10(coeff_a(-z, params.cavity, params.loss))};
}

PumpRatio pump_ratio_for_squeezing_db(double target_db, const ModelParams &params) {
    if (!(target_db < 0.0)) {
        throw DomainError(fmt::format("target squeezing {} dB must be negative", target_db));
    }
    const auto &loss = params.loss;
    double z_max = 0.999;
    if (loss.kappa > 0.0 && loss.tau_s0 >= 0.0) {
        z_max = std::min(z_max, std::sqrt(loss.tau_s0 / loss.kappa) * (1.0 - 1e-12));
    }
    auto level = [&](double z) { return 10.0 * std::log10(coeff_a(z, params.cavity, loss)); };
    (void)tau_s_at(0.0, loss);

    const auto [z_best, db_best] = boost::math::tools::brent_find_minima(level, 0.0, z_max, 52);
    if (db_best > target_db) {
        throw DomainError(fmt::format("squeezing {} dB unreachable: the loss model bottoms out at {:.3f} dB (z={:.3f})",
                                      target_db, db_best, z_best));
    }
    std::uintmax_t iters = 200;
    const auto bracket = boost::math::tools::toms748_solve([&](double z) { return level(z) - target_db; }, 0.0,
                                                           z_best, boost::math::tools::eps_tolerance<double>(50), iters);
    return PumpRatio(0.5 * (bracket.first + bracket.second));
}

}  // namespace kitten::model
