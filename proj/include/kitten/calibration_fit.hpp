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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "kitten/model_core.hpp"

namespace kitten::fit {

/// One W(0,0) measurement. `tap` is the heralding tapping ratio; the
/// corresponding transmission is tau = 1 - tap.
struct OriginPoint {
    double tap;
    double z;
    double w00;
    double sigma;
};

struct OriginCurveData {
    std::vector<OriginPoint> points;

    void validate() const;
    std::vector<double> taps() const;  ///< distinct, ascending
    double z_max() const;
};

OriginCurveData read_origin_data(std::istream &is);
OriginCurveData load_origin_data(const std::filesystem::path &path);
void write_origin_data(std::ostream &os, const OriginCurveData &data, const nlohmann::json &meta);

enum class Weighting { Uniform, Sigma };

struct FitOptions {
    bool fit_kappa = true;   ///< false: kappa frozen at the base parameters' value
    bool fit_tau_h = false;  ///< false: tau_h frozen at the base parameters' value
    Weighting weighting = Weighting::Uniform;
    std::size_t starts = 8;
    std::uint64_t seed = 1;
    std::size_t max_iters = 200;
};

struct FitResult {
    std::vector<std::string> names;  ///< free parameters, in covariance order
    double tau_s0 = 0.0;
    double kappa = 0.0;
    double tau_h = 0.0;
    Eigen::MatrixXd covariance;
    double rss = 0.0;        ///< sum of squared raw residuals
    double objective = 0.0;  ///< minimized (weighted) sum of squares
    std::vector<double> residuals;  ///< data minus model, in data order
    std::vector<double> objective_trace;  ///< accepted steps of the winning start
    std::size_t iterations = 0;
    std::size_t best_start = 0;
    std::size_t barrier_hits = 0;  ///< trial steps rejected for leaving 0 <= tau_s(z) <= 1
    bool identifiable = true;
    std::vector<std::string> warnings;

    model::LossModel loss(const model::LossModel &base) const;
    double stderr_of(const std::string &name) const;
};

/// Model W(0,0) at each data point for the given loss parameters.
std::vector<double> model_origin_values(const OriginCurveData &data, const model::ModelParams &params);

/// Multi-start Levenberg-Marquardt fit of the loss model to the data.
/// Parameters not being fitted are taken from `base`.
FitResult fit_loss_model(const OriginCurveData &data, const model::ModelParams &base, const FitOptions &options = {});

struct ResidualPoint {
    double tap, z, w00, model, residual, normalized;
};

std::vector<ResidualPoint> residual_profile(const FitResult &result, const OriginCurveData &data);

/// Wald-Wolfowitz runs statistic on residual signs (standard normal under
/// randomness; strongly negative for systematic trends).
double sign_runs_z(const std::vector<double> &residuals);

struct SyntheticSpec {
    std::vector<double> taps{0.01, 0.05, 0.10};
    double z_lo = 0.05;
    double z_hi = 0.95;
    std::size_t points = 12;
    double noise = 0.005;  ///< Gaussian noise level, also recorded as sigma (0 gives sigma 1 and no noise)
    std::uint64_t seed = 1;
};

OriginCurveData synthesize_origin_data(const model::ModelParams &truth, const SyntheticSpec &spec);

void write_fit_report(std::ostream &os, const FitResult &result, const OriginCurveData &data, const nlohmann::json &meta);

}  // namespace kitten::fit
