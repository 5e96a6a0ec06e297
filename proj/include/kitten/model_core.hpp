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

#include <span>
#include <string>
#include <vector>

namespace kitten::model {

inline constexpr double kPi = 3.14159265358979323846;

/// OPO cavity. Rates are field decay rates in 1/s; the intensity FWHM in Hz
/// is zeta0()/pi (57e6 + 1.2e6 gives about 9.3 MHz).
struct CavityParams {
    double gamma_t = 57e6;  ///< output coupler, 1/s
    double gamma_l = 1.2e6; ///< intracavity loss, 1/s
    double fsr = 573e6;     ///< free spectral range, Hz

    double zeta0() const { return 0.5 * (gamma_t + gamma_l); }
    double fwhm_hz() const { return zeta0() / kPi; }
    void validate() const;
};

/// Trigger (heralding) channel.
struct DetectorModel {
    double eta0 = 0.5;      ///< APD intrinsic efficiency (assumed, not measured)
    double eta_f = 0.3;     ///< filter-path transmittance
    double bandwidth = 0.0; ///< B, Hz
    double window = 1e-9;   ///< T, s
    double nu = 0.0;        ///< mean noise counts per window, dimensionless

    double bt() const { return bandwidth * window; }
    /// Total heralding efficiency eta0 * etaF * B * T.
    double eta() const { return eta0 * eta_f * bt(); }
    void validate() const;
    /// Soft diagnostics (B*T not small, ...). Empty when nothing to report.
    std::vector<std::string> warnings() const;
};

/// Tapping, homodyne and squeezing-dependent losses.
struct LossModel {
    double tau = 0.95;    ///< tapping beam splitter transmittance toward the signal
    double tau_h = 0.78;  ///< homodyne channel transmittance
    double tau_s0 = 0.95; ///< intercept of tau_s(z)
    double kappa = 0.93;  ///< quadratic coefficient of tau_s(z)

    void validate() const;
};

struct ModelParams {
    CavityParams cavity;
    DetectorModel detector;
    LossModel loss;

    void validate() const;
};

/// B defaults to zeta0/(2 pi); nu to dark_rate*T, optionally weighted by the
/// single-mode weight B*T (see README, "Trigger noise").
ModelParams default_params(double tau = 0.95);
double mode_weighted_noise(double count_rate_cps, const DetectorModel &det);

/// Pump amplitude ratio z = sqrt(P_pump / P_th), 0 <= z < 1.
class PumpRatio {
   public:
    explicit PumpRatio(double z);
    double value() const { return z_; }

   private:
    double z_;
};

/// Axis-aligned Gaussian weight/(pi sqrt(vx vp)) exp(-x^2/vx - p^2/vp).
struct GaussianComponent {
    double vx = 1.0;
    double vp = 1.0;
    double weight = 1.0;

    double density(double x, double p) const;
    /// Variance of the quadrature x cos(theta) + p sin(theta).
    double quadrature_variance(double theta) const;
    double marginal(double theta, double q) const;
};

// Coefficient functions. Signed z: a, b, c and sigma2 are evaluated at +z and
// -z; tau_s always sees |z|.
double tau_s(PumpRatio z, const LossModel &loss);
double coeff_a(double z, const CavityParams &cav, const LossModel &loss);
double coeff_b(double z, const CavityParams &cav, const DetectorModel &det, const LossModel &loss);
double coeff_c(double z, const CavityParams &cav, const DetectorModel &det, const LossModel &loss);
double sigma2(double z, const ModelParams &params);
double sigma2(double z, const ModelParams &params, double eta);
double norm_n(PumpRatio z, const ModelParams &params);
double norm_n(PumpRatio z, const ModelParams &params, double eta, double nu);
GaussianComponent gaussian_r(PumpRatio z, const ModelParams &params, double eta, double nu);

/// Closed-form conditional Wigner function for one (z, params), with all
/// z-dependent coefficients precomputed. Evaluation avoids the cancellation in
/// R(0,0) - R(eta,nu) by working with the variance deficits directly, which
/// matters because 1 - N is ~1e-7 for realistic heralding efficiencies.
class ConditionalWigner {
   public:
    ConditionalWigner(PumpRatio z, const ModelParams &params);

    double operator()(double x, double p) const;
    /// Homodyne marginal P_theta(q). Throws DomainError below -1e-9.
    double marginal(double theta, double q) const;
    double marginal_unchecked(double theta, double q) const;

    const GaussianComponent &unconditioned() const { return r0_; }
    const GaussianComponent &heralded() const { return r1_; }
    double herald_weight() const { return n_; }       ///< N(eta, nu)
    double herald_probability() const { return gap_; } ///< 1 - N
    double z() const { return z_; }

   private:
    double z_;
    GaussianComponent r0_;
    GaussianComponent r1_;
    double dvx_;  // r0.vx - r1.vx >= 0
    double dvp_;
    double n_;
    double gap_;
};

double wigner(double x, double p, PumpRatio z, const ModelParams &params);
double marginal_density(double theta, double q, PumpRatio z, const ModelParams &params);

struct OriginValue {
    double z;
    double w00;
};
std::vector<OriginValue> wigner_origin_curve(std::span<const double> z_grid, const ModelParams &params);

struct SqueezingLevel {
    double squeezed_db;
    double antisqueezed_db;
};
SqueezingLevel squeezing_db(double z, const ModelParams &params);

/// Smallest z whose squeezed-quadrature level equals target_db (< 0).
/// Throws DomainError when the level is out of reach under the loss model.
PumpRatio pump_ratio_for_squeezing_db(double target_db, const ModelParams &params);

}  // namespace kitten::model
