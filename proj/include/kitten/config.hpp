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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kitten/calibration_fit.hpp"
#include "kitten/model_core.hpp"
#include "kitten/quadrature_sampler.hpp"
#include "kitten/spectrum_filters.hpp"
#include "kitten/tomography.hpp"

namespace kitten::config {

/// Pump setting: exactly one of z or a target squeezing level (dB, < 0).
struct PumpSpec {
    std::optional<double> z;
    std::optional<double> squeezing_db;

    double resolve(const model::ModelParams &params) const;
};

struct SamplingConfig {
    std::size_t count = 50000;
    std::uint64_t seed = 1;
    sampling::SamplerOptions options;
};

struct GridConfig {
    double half_width = 4.0;  ///< Wigner grids cover [-half_width, half_width]^2
    std::size_t points = 81;
    std::vector<double> curve_taps{0.01, 0.05, 0.10};
    double curve_z_min = 0.0;
    double curve_z_max = 0.95;
    std::size_t curve_points = 96;
    double compare_half_width = 3.0;  ///< pipeline comparison box
};

struct SpectrumConfig {
    spectrum::FilterChain chain;
    double span_hz = 1.2e9;  ///< detuning grid covers [-span, span]
    std::size_t points = 2401;
    double scale = 1.0;
};

struct ModesConfig {
    std::string kernel = "stationary";  ///< "stationary" or "rank_one"
    double half_width = 8.0;            ///< window half width in units of 1/zeta0
    std::size_t points = 512;
    std::size_t count = 4;
};

struct FitConfig {
    fit::FitOptions options;
    fit::SyntheticSpec synthetic;
};

struct ExperimentConfig {
    model::ModelParams model;
    double tap = 0.05;
    double dark_count_rate = 100.0;  ///< cps
    double background_rate = 0.0;    ///< cps
    bool noise_mode_weighting = true;
    std::optional<double> nu_override;
    PumpSpec pump;
    SamplingConfig sampling;
    tomo::MleOptions tomography;
    GridConfig grid;
    SpectrumConfig spectrum;
    ModesConfig modes;
    FitConfig fit;
    std::filesystem::path output_dir = "kitten_out";

    /// Field-level validation; throws ConfigError naming the offending key.
    void validate() const;
    /// Complete snapshot of every setting.
    nlohmann::json to_json() const;
    std::string hash() const;
};

/// Key overrides in "section.key" form, applied on top of the file.
using Overrides = std::map<std::string, std::string>;

ExperimentConfig default_config();
ExperimentConfig parse_config(std::istream &is, const Overrides &overrides = {});
ExperimentConfig load_config(const std::filesystem::path &path, const Overrides &overrides = {});
/// Commented INI text with every key at its default.
std::string default_config_text();

}  // namespace kitten::config
