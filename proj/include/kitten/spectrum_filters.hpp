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

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "kitten/model_core.hpp"

namespace kitten::spectrum {

struct Filter {
    double fwhm;         ///< Hz
    double center = 0.0; ///< offset from the degenerate frequency, Hz
};

/// OPO comb seen through a cascade of Lorentzian filter cavities. This is a
/// phenomenological model: the comb translates rigidly past fixed filters.
struct FilterChain {
    std::vector<Filter> filters;
    double opo_fwhm = 0.0;  ///< Hz
    double fsr = 573e6;     ///< Hz
    int comb_order = 2;     ///< lines m = -M..M

    /// Three centered 60 MHz filters around the given cavity.
    static FilterChain standard(const model::CavityParams &cavity);

    void validate() const;
    /// Filters outside the 5x..10x OPO bandwidth range.
    std::vector<std::string> warnings() const;
};

/// Unit-peak Lorentzian 1 / (1 + (2 f / fwhm)^2).
double lorentzian(double f, double fwhm);

double chain_transmission(double f, const FilterChain &chain);

/// scale * L(delta; opo_fwhm) * sum_m T(m fsr + delta).
double count_rate(double detuning, const FilterChain &chain, double scale = 1.0);

struct SpectrumPoint {
    double detuning;
    double rate;
};

std::vector<SpectrumPoint> count_rate_spectrum(std::span<const double> detunings, const FilterChain &chain,
                                               double scale = 1.0);

/// 10 log10(T(0) / T(m fsr)) for comb line m.
double comb_suppression_db(const FilterChain &chain, int m = 1);

/// Full width at half maximum of the central (m = 0) line of the spectrum.
double peak_fwhm(const FilterChain &chain);

/// Least-squares scale factor for measured rates at the given detunings.
double fit_scale(std::span<const double> detunings, std::span<const double> rates, const FilterChain &chain);

/// "detuning_Hz,rate" table with a metadata header.
void write_spectrum(std::ostream &os, const std::vector<SpectrumPoint> &series, const nlohmann::json &meta);

nlohmann::json to_json(const FilterChain &chain);

}  // namespace kitten::spectrum
