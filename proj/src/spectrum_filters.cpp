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

#include "kitten/spectrum_filters.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <fmt/core.h>

#include "kitten/error.hpp"
#include "kitten/series_io.hpp"

namespace kitten::spectrum {

FilterChain FilterChain::standard(const model::CavityParams &cavity) {
    FilterChain c;
    c.filters = {{60e6, 0.0}, {60e6, 0.0}, {60e6, 0.0}};
    c.opo_fwhm = cavity.fwhm_hz();
    c.fsr = cavity.fsr;
    c.comb_order = 2;
    return c;
}

void FilterChain::validate() const {
    if (!(opo_fwhm > 0.0)) throw ConfigError(fmt::format("spectrum.opo_fwhm must be > 0 (got {})", opo_fwhm));
    if (!(fsr > 0.0)) throw ConfigError(fmt::format("spectrum.fsr must be > 0 (got {})", fsr));
    if (comb_order < 1) throw ConfigError(fmt::format("spectrum.comb_order must be >= 1 (got {})", comb_order));
    for (std::size_t i = 0; i < filters.size(); ++i) {
        if (!(filters[i].fwhm > 0.0)) {
            throw ConfigError(fmt::format("spectrum.filter {} fwhm must be > 0 (got {})", i + 1, filters[i].fwhm));
        }
        if (!std::isfinite(filters[i].center)) throw ConfigError(fmt::format("spectrum.filter {} center is not finite", i + 1));
    }
}

std::vector<std::string> FilterChain::warnings() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < filters.size(); ++i) {
        const double ratio = filters[i].fwhm / opo_fwhm;
        if (ratio < 5.0 || ratio > 10.0) {
            out.push_back(fmt::format("filter {} is {:.3g}x the OPO bandwidth, outside the 5x..10x design range", i + 1, ratio));
        }
    }
    return out;
}

double lorentzian(double f, double fwhm) {
    const double u = 2.0 * f / fwhm;
    return 1.0 / (1.0 + u * u);
}

double chain_transmission(double f, const FilterChain &chain) {
    double t = 1.0;
    for (const auto &flt : chain.filters) t *= lorentzian(f - flt.center, flt.fwhm);
    return t;
}

double count_rate(double detuning, const FilterChain &chain, double scale) {
    double comb = 0.0;
    for (int m = -chain.comb_order; m <= chain.comb_order; ++m) comb += chain_transmission(m * chain.fsr + detuning, chain);
    return scale * lorentzian(detuning, chain.opo_fwhm) * comb;
}

std::vector<SpectrumPoint> count_rate_spectrum(std::span<const double> detunings, const FilterChain &chain, double scale) {
    chain.validate();
    std::vector<SpectrumPoint> out;
    out.reserve(detunings.size());
    for (double d : detunings) out.push_back({d, count_rate(d, chain, scale)});
    return out;
}

double comb_suppression_db(const FilterChain &chain, int m) {
    chain.validate();
    return 10.0 * std::log10(chain_transmission(0.0, chain) / chain_transmission(m * chain.fsr, chain));
}

double peak_fwhm(const FilterChain &chain) {
    chain.validate();
    // Coarse scan of the central free spectral range, then refine the maximum.
    const double half = 0.5 * chain.fsr;
    constexpr int kScan = 4000;
    double best = 0.0, best_rate = -1.0;
    for (int i = 0; i <= kScan; ++i) {
        const double d = -half + chain.fsr * i / kScan;
        const double r = count_rate(d, chain);
        if (r > best_rate) {
            best_rate = r;
            best = d;
        }
    }
    const double step = chain.fsr / kScan;
    std::uintmax_t iters = 200;
    const auto peak = boost::math::tools::brent_find_minima([&](double d) { return -count_rate(d, chain); },
                                                            best - step, best + step, 52, iters);
    const double center = peak.first, target = -0.5 * peak.second;
    auto f = [&](double d) { return count_rate(d, chain) - target; };
    auto edge = [&](double dir) {
        double lo = center, hi = center;
        double w = 0.25 * chain.opo_fwhm;
        while (f(center + dir * w) > 0.0) {
            lo = center + dir * w;
            w *= 2.0;
            if (w > half) throw DomainError("spectrum peak has no half-maximum point within one free spectral range");
        }
        hi = center + dir * w;
        std::uintmax_t it = 200;
        const auto r = boost::math::tools::toms748_solve(f, std::min(lo, hi), std::max(lo, hi),
                                                         boost::math::tools::eps_tolerance<double>(50), it);
        return 0.5 * (r.first + r.second);
    };
    return edge(1.0) - edge(-1.0);
}

double fit_scale(std::span<const double> detunings, std::span<const double> rates, const FilterChain &chain) {
    if (detunings.size() != rates.size() || detunings.empty()) {
        throw DomainError("fit_scale needs equally many detunings and rates (at least one)");
    }
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < detunings.size(); ++i) {
        const double m = count_rate(detunings[i], chain);
        num += m * rates[i];
        den += m * m;
    }
    return num / den;
}

void write_spectrum(std::ostream &os, const std::vector<SpectrumPoint> &series, const nlohmann::json &meta) {
    std::string out = "# kitten count-rate spectrum (phenomenological filter-chain model)\n# meta: " + meta.dump() +
                      "\ndetuning_Hz,rate\n";
    for (const auto &p : series) out += io::fmt_double(p.detuning) + "," + io::fmt_double(p.rate) + "\n";
    os << out;
}

nlohmann::json to_json(const FilterChain &chain) {
    nlohmann::json filters = nlohmann::json::array();
    for (const auto &f : chain.filters) filters.push_back({{"fwhm", f.fwhm}, {"center", f.center}});
    return {{"filters", filters}, {"opo_fwhm", chain.opo_fwhm}, {"fsr", chain.fsr}, {"comb_order", chain.comb_order}};
}

}  // namespace kitten::spectrum
