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

#include "kitten/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <istream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/core.h>

#include "kitten/error.hpp"
#include "kitten/series_io.hpp"

namespace kitten::config {

namespace {

using model::kPi;

// Settings whose defaults depend on other settings, resolved after parsing.
struct Pending {
    std::optional<double> bandwidth;
    std::optional<double> tau;
    std::optional<double> opo_fwhm;
    std::optional<double> fsr_override;
    std::vector<double> filter_fwhm{60e6, 60e6, 60e6};
    std::optional<std::vector<double>> filter_center;
};

double parse_double(const std::string &key, const std::string &v) {
    double out = 0.0;
    const char *b = v.data(), *e = v.data() + v.size();
    const auto res = std::from_chars(b, e, out);
    if (v.empty() || res.ec != std::errc{} || res.ptr != e || !std::isfinite(out)) {
        throw ConfigError(fmt::format("{}: expected a number (got '{}')", key, v));
    }
    return out;
}

std::uint64_t parse_uint(const std::string &key, const std::string &v) {
    std::uint64_t out = 0;
    const char *b = v.data(), *e = v.data() + v.size();
    const auto res = std::from_chars(b, e, out);
    if (v.empty() || res.ec != std::errc{} || res.ptr != e) {
        throw ConfigError(fmt::format("{}: expected a nonnegative integer (got '{}')", key, v));
    }
    return out;
}

bool parse_bool(const std::string &key, const std::string &v) {
    if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
    if (v == "false" || v == "no" || v == "0" || v == "off") return false;
    throw ConfigError(fmt::format("{}: expected true or false (got '{}')", key, v));
}

std::vector<double> parse_list(const std::string &key, const std::string &v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto a = item.find_first_not_of(" \t"), b = item.find_last_not_of(" \t");
        out.push_back(parse_double(key, a == std::string::npos ? "" : item.substr(a, b - a + 1)));
    }
    if (out.empty()) throw ConfigError(fmt::format("{}: expected a comma-separated list of numbers", key));
    return out;
}

using Setter = std::function<void(ExperimentConfig &, Pending &, const std::string &key, const std::string &value)>;

Setter num(double ExperimentConfig::*field) {
    return [field](ExperimentConfig &c, Pending &, const std::string &k, const std::string &v) { c.*field = parse_double(k, v); };
}

template <class F>
Setter with_double(F f) {
    return [f](ExperimentConfig &c, Pending &p, const std::string &k, const std::string &v) { f(c, p, parse_double(k, v)); };
}

template <class F>
Setter with_uint(F f) {
    return [f](ExperimentConfig &c, Pending &p, const std::string &k, const std::string &v) { f(c, p, parse_uint(k, v)); };
}

template <class F>
Setter with_bool(F f) {
    return [f](ExperimentConfig &c, Pending &p, const std::string &k, const std::string &v) { f(c, p, parse_bool(k, v)); };
}

const std::map<std::string, Setter> &setters() {
    using C = ExperimentConfig;
    using P = Pending;
    static const std::map<std::string, Setter> table = {
        {"cavity.gamma_t", with_double([](C &c, P &, double v) { c.model.cavity.gamma_t = v; })},
        {"cavity.gamma_l", with_double([](C &c, P &, double v) { c.model.cavity.gamma_l = v; })},
        {"cavity.fsr", with_double([](C &c, P &, double v) { c.model.cavity.fsr = v; })},
        {"detector.eta0", with_double([](C &c, P &, double v) { c.model.detector.eta0 = v; })},
        {"detector.eta_f", with_double([](C &c, P &, double v) { c.model.detector.eta_f = v; })},
        {"detector.bandwidth", with_double([](C &, P &p, double v) { p.bandwidth = v; })},
        {"detector.window", with_double([](C &c, P &, double v) { c.model.detector.window = v; })},
        {"detector.dark_count_rate", num(&C::dark_count_rate)},
        {"detector.background_rate", num(&C::background_rate)},
        {"detector.noise_mode_weighting", with_bool([](C &c, P &, bool v) { c.noise_mode_weighting = v; })},
        {"detector.nu", with_double([](C &c, P &, double v) { c.nu_override = v; })},
        {"loss.tap", num(&C::tap)},
        {"loss.tau", with_double([](C &, P &p, double v) { p.tau = v; })},
        {"loss.tau_h", with_double([](C &c, P &, double v) { c.model.loss.tau_h = v; })},
        {"loss.tau_s0", with_double([](C &c, P &, double v) { c.model.loss.tau_s0 = v; })},
        {"loss.kappa", with_double([](C &c, P &, double v) { c.model.loss.kappa = v; })},
        {"pump.z", with_double([](C &c, P &, double v) { c.pump.z = v; })},
        {"pump.squeezing_db", with_double([](C &c, P &, double v) { c.pump.squeezing_db = v; })},
        {"sampling.count", with_uint([](C &c, P &, std::uint64_t v) { c.sampling.count = v; })},
        {"sampling.seed", with_uint([](C &c, P &, std::uint64_t v) { c.sampling.seed = v; })},
        {"sampling.phase_schedule",
         [](C &c, P &, const std::string &, const std::string &v) {
             c.sampling.options.schedule = sampling::phase_schedule_from_string(v);
         }},
        {"sampling.fixed_phase", with_double([](C &c, P &, double v) { c.sampling.options.fixed_phase = v; })},
        {"sampling.shard_size", with_uint([](C &c, P &, std::uint64_t v) { c.sampling.options.shard_size = v; })},
        {"sampling.workers", with_uint([](C &c, P &, std::uint64_t v) { c.sampling.options.workers = static_cast<unsigned>(v); })},
        {"tomography.dim", with_uint([](C &c, P &, std::uint64_t v) { c.tomography.dim = v; })},
        {"tomography.max_iters", with_uint([](C &c, P &, std::uint64_t v) { c.tomography.max_iters = v; })},
        {"tomography.tol", with_double([](C &c, P &, double v) { c.tomography.tol = v; })},
        {"tomography.phase_bins", with_uint([](C &c, P &, std::uint64_t v) { c.tomography.binning.phase_bins = v; })},
        {"tomography.dx", with_double([](C &c, P &, double v) { c.tomography.binning.dx = v; })},
        {"tomography.x_max", with_double([](C &c, P &, double v) { c.tomography.binning.x_max = v; })},
        {"grid.half_width", with_double([](C &c, P &, double v) { c.grid.half_width = v; })},
        {"grid.points", with_uint([](C &c, P &, std::uint64_t v) { c.grid.points = v; })},
        {"grid.curve_taps", [](C &c, P &, const std::string &k, const std::string &v) { c.grid.curve_taps = parse_list(k, v); }},
        {"grid.curve_z_min", with_double([](C &c, P &, double v) { c.grid.curve_z_min = v; })},
        {"grid.curve_z_max", with_double([](C &c, P &, double v) { c.grid.curve_z_max = v; })},
        {"grid.curve_points", with_uint([](C &c, P &, std::uint64_t v) { c.grid.curve_points = v; })},
        {"grid.compare_half_width", with_double([](C &c, P &, double v) { c.grid.compare_half_width = v; })},
        {"spectrum.filter_fwhm", [](C &, P &p, const std::string &k, const std::string &v) { p.filter_fwhm = parse_list(k, v); }},
        {"spectrum.filter_center", [](C &, P &p, const std::string &k, const std::string &v) { p.filter_center = parse_list(k, v); }},
        {"spectrum.opo_fwhm", with_double([](C &, P &p, double v) { p.opo_fwhm = v; })},
        {"spectrum.fsr", with_double([](C &, P &p, double v) { p.fsr_override = v; })},
        {"spectrum.comb_order", with_uint([](C &c, P &, std::uint64_t v) { c.spectrum.chain.comb_order = static_cast<int>(v); })},
        {"spectrum.span", with_double([](C &c, P &, double v) { c.spectrum.span_hz = v; })},
        {"spectrum.points", with_uint([](C &c, P &, std::uint64_t v) { c.spectrum.points = v; })},
        {"spectrum.scale", with_double([](C &c, P &, double v) { c.spectrum.scale = v; })},
        {"modes.kernel", [](C &c, P &, const std::string &, const std::string &v) { c.modes.kernel = v; }},
        {"modes.half_width", with_double([](C &c, P &, double v) { c.modes.half_width = v; })},
        {"modes.points", with_uint([](C &c, P &, std::uint64_t v) { c.modes.points = v; })},
        {"modes.count", with_uint([](C &c, P &, std::uint64_t v) { c.modes.count = v; })},
        {"fit.fit_kappa", with_bool([](C &c, P &, bool v) { c.fit.options.fit_kappa = v; })},
        {"fit.fit_tau_h", with_bool([](C &c, P &, bool v) { c.fit.options.fit_tau_h = v; })},
        {"fit.weighting",
         [](C &c, P &, const std::string &k, const std::string &v) {
             if (v == "uniform") {
                 c.fit.options.weighting = fit::Weighting::Uniform;
             } else if (v == "sigma") {
                 c.fit.options.weighting = fit::Weighting::Sigma;
             } else {
                 throw ConfigError(fmt::format("{} must be 'uniform' or 'sigma' (got '{}')", k, v));
             }
         }},
        {"fit.starts", with_uint([](C &c, P &, std::uint64_t v) { c.fit.options.starts = v; })},
        {"fit.seed", with_uint([](C &c, P &, std::uint64_t v) { c.fit.options.seed = v; })},
        {"fit.max_iters", with_uint([](C &c, P &, std::uint64_t v) { c.fit.options.max_iters = v; })},
        {"fit.synthetic_taps", [](C &c, P &, const std::string &k, const std::string &v) { c.fit.synthetic.taps = parse_list(k, v); }},
        {"fit.synthetic_z_min", with_double([](C &c, P &, double v) { c.fit.synthetic.z_lo = v; })},
        {"fit.synthetic_z_max", with_double([](C &c, P &, double v) { c.fit.synthetic.z_hi = v; })},
        {"fit.synthetic_points", with_uint([](C &c, P &, std::uint64_t v) { c.fit.synthetic.points = v; })},
        {"fit.synthetic_noise", with_double([](C &c, P &, double v) { c.fit.synthetic.noise = v; })},
        {"fit.synthetic_seed", with_uint([](C &c, P &, std::uint64_t v) { c.fit.synthetic.seed = v; })},
        {"output.dir", [](C &c, P &, const std::string &, const std::string &v) { c.output_dir = v; }},
    };
    return table;
}

ExperimentConfig build(const std::map<std::string, std::string> &values) {
    ExperimentConfig c;
    c.model = model::ModelParams{};
    c.pump = {};
    Pending pending;
    const auto &table = setters();
    for (const auto &[key, value] : values) {
        const auto it = table.find(key);
        if (it == table.end()) throw ConfigError(fmt::format("unknown configuration key '{}'", key));
        it->second(c, pending, key, value);
    }

    if (pending.tau && values.count("loss.tap")) throw ConfigError("loss.tap and loss.tau are mutually exclusive; set one");
    if (pending.tau) c.tap = 1.0 - *pending.tau;
    c.model.loss.tau = 1.0 - c.tap;

    if (c.pump.z && c.pump.squeezing_db) throw ConfigError("pump.z and pump.squeezing_db are mutually exclusive; set one");
    if (!c.pump.z && !c.pump.squeezing_db) c.pump.squeezing_db = -2.6;

    auto &det = c.model.detector;
    det.bandwidth = pending.bandwidth.value_or(c.model.cavity.zeta0() / (2.0 * kPi));
    const double rate = c.dark_count_rate + c.background_rate;
    det.nu = c.nu_override ? *c.nu_override
                           : (c.noise_mode_weighting ? model::mode_weighted_noise(rate, det) : rate * det.window);

    auto &chain = c.spectrum.chain;
    chain.opo_fwhm = pending.opo_fwhm.value_or(c.model.cavity.fwhm_hz());
    chain.fsr = pending.fsr_override.value_or(c.model.cavity.fsr);
    const auto centers = pending.filter_center.value_or(std::vector<double>(pending.filter_fwhm.size(), 0.0));
    if (centers.size() != pending.filter_fwhm.size()) {
        throw ConfigError(fmt::format("spectrum.filter_center has {} entries but spectrum.filter_fwhm has {}", centers.size(),
                                      pending.filter_fwhm.size()));
    }
    chain.filters.clear();
    for (std::size_t i = 0; i < centers.size(); ++i) chain.filters.push_back({pending.filter_fwhm[i], centers[i]});
    c.validate();
    return c;
}

// Drops a trailing "# ..." or "; ..." comment and surrounding blanks.
std::string strip_comment(std::string v) {
    const auto c = v.find_first_of("#;");
    if (c != std::string::npos) v.erase(c);
    const auto a = v.find_first_not_of(" \t"), b = v.find_last_not_of(" \t");
    return a == std::string::npos ? std::string{} : v.substr(a, b - a + 1);
}

void require(bool ok, const std::string &message) {
    if (!ok) throw ConfigError(message);
}

}  // namespace

double PumpSpec::resolve(const model::ModelParams &params) const {
    if (z) return model::PumpRatio(*z).value();
    return model::pump_ratio_for_squeezing_db(squeezing_db.value_or(-2.6), params).value();
}

void ExperimentConfig::validate() const {
    model.validate();
    require(tap >= 0.0 && tap < 1.0, fmt::format("loss.tap must lie in [0,1) (got {})", tap));
    require(dark_count_rate >= 0.0, fmt::format("detector.dark_count_rate must be >= 0 (got {})", dark_count_rate));
    require(background_rate >= 0.0, fmt::format("detector.background_rate must be >= 0 (got {})", background_rate));
    if (pump.z) require(*pump.z >= 0.0 && *pump.z < 1.0, fmt::format("pump.z must lie in [0,1) (got {})", *pump.z));
    if (pump.squeezing_db) {
        require(*pump.squeezing_db < 0.0, fmt::format("pump.squeezing_db must be < 0 (got {})", *pump.squeezing_db));
    }
    require(sampling.options.shard_size > 0, "sampling.shard_size must be > 0");
    if (sampling.options.schedule == sampling::PhaseSchedule::Fixed) {
        require(sampling.options.fixed_phase >= 0.0 && sampling.options.fixed_phase < kPi,
                fmt::format("sampling.fixed_phase must lie in [0, pi) (got {})", sampling.options.fixed_phase));
    }
    require(tomography.dim >= 2 && tomography.dim <= tomo::kFockCap,
            fmt::format("tomography.dim must lie in 2..{} (got {})", tomo::kFockCap, tomography.dim));
    require(tomography.tol > 0.0, "tomography.tol must be > 0");
    tomography.binning.validate();
    require(grid.half_width > 0.0, "grid.half_width must be > 0");
    require(grid.points >= 2, "grid.points must be >= 2");
    require(grid.curve_points >= 2, "grid.curve_points must be >= 2");
    require(grid.curve_z_min >= 0.0 && grid.curve_z_min < grid.curve_z_max && grid.curve_z_max < 1.0,
            "grid.curve_z_min and grid.curve_z_max must satisfy 0 <= min < max < 1");
    for (double t : grid.curve_taps) require(t >= 0.0 && t < 1.0, fmt::format("grid.curve_taps entries must lie in [0,1) (got {})", t));
    require(grid.compare_half_width > 0.0, "grid.compare_half_width must be > 0");
    spectrum.chain.validate();
    require(spectrum.span_hz > 0.0, "spectrum.span must be > 0");
    require(spectrum.points >= 2, "spectrum.points must be >= 2");
    require(modes.kernel == "stationary" || modes.kernel == "rank_one",
            fmt::format("modes.kernel must be 'stationary' or 'rank_one' (got '{}')", modes.kernel));
    require(modes.half_width > 0.0, "modes.half_width must be > 0");
    require(modes.points >= 8, "modes.points must be >= 8");
    require(modes.count >= 1 && modes.count <= modes.points, "modes.count must lie in 1..modes.points");
    require(fit.options.starts >= 1, "fit.starts must be >= 1");
    require(fit.synthetic.points >= 3, "fit.synthetic_points must be >= 3");
    require(fit.synthetic.noise >= 0.0, "fit.synthetic_noise must be >= 0");
    require(fit.synthetic.z_lo >= 0.0 && fit.synthetic.z_lo < fit.synthetic.z_hi && fit.synthetic.z_hi < 1.0,
            "fit.synthetic_z_min and fit.synthetic_z_max must satisfy 0 <= min < max < 1");
    for (double t : fit.synthetic.taps) require(t >= 0.0 && t < 1.0, fmt::format("fit.synthetic_taps entries must lie in [0,1) (got {})", t));
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json j;
    j["model"] = io::to_json(model);
    j["loss_tap"] = tap;
    j["noise"] = {{"dark_count_rate", dark_count_rate},
                  {"background_rate", background_rate},
                  {"mode_weighting", noise_mode_weighting},
                  {"nu_override", nu_override ? nlohmann::json(*nu_override) : nlohmann::json()}};
    j["pump"] = {{"z", pump.z ? nlohmann::json(*pump.z) : nlohmann::json()},
                 {"squeezing_db", pump.squeezing_db ? nlohmann::json(*pump.squeezing_db) : nlohmann::json()}};
    j["sampling"] = {{"count", sampling.count},
                     {"seed", sampling.seed},
                     {"phase_schedule", sampling::to_string(sampling.options.schedule)},
                     {"fixed_phase", sampling.options.fixed_phase},
                     {"shard_size", sampling.options.shard_size}};
    j["tomography"] = {{"dim", tomography.dim},
                       {"max_iters", tomography.max_iters},
                       {"tol", tomography.tol},
                       {"phase_bins", tomography.binning.phase_bins},
                       {"dx", tomography.binning.dx},
                       {"x_max", tomography.binning.x_max}};
    j["grid"] = {{"half_width", grid.half_width},
                 {"points", grid.points},
                 {"curve_taps", grid.curve_taps},
                 {"curve_z_min", grid.curve_z_min},
                 {"curve_z_max", grid.curve_z_max},
                 {"curve_points", grid.curve_points},
                 {"compare_half_width", grid.compare_half_width}};
    j["spectrum"] = {{"chain", spectrum::to_json(spectrum.chain)},
                     {"span", spectrum.span_hz},
                     {"points", spectrum.points},
                     {"scale", spectrum.scale}};
    j["modes"] = {{"kernel", modes.kernel}, {"half_width", modes.half_width}, {"points", modes.points}, {"count", modes.count}};
    j["fit"] = {{"fit_kappa", fit.options.fit_kappa},
                {"fit_tau_h", fit.options.fit_tau_h},
                {"weighting", fit.options.weighting == fit::Weighting::Sigma ? "sigma" : "uniform"},
                {"starts", fit.options.starts},
                {"seed", fit.options.seed},
                {"max_iters", fit.options.max_iters},
                {"synthetic",
                 {{"taps", fit.synthetic.taps},
                  {"z_min", fit.synthetic.z_lo},
                  {"z_max", fit.synthetic.z_hi},
                  {"points", fit.synthetic.points},
                  {"noise", fit.synthetic.noise},
                  {"seed", fit.synthetic.seed}}}};
    // The output directory does not affect results and is left out of the hash.
    return j;
}

std::string ExperimentConfig::hash() const { return io::config_hash(to_json()); }

ExperimentConfig default_config() { return build({}); }

ExperimentConfig parse_config(std::istream &is, const Overrides &overrides) {
    boost::property_tree::ptree pt;
    try {
        boost::property_tree::read_ini(is, pt);
    } catch (const boost::property_tree::ini_parser_error &e) {
        throw ConfigError(fmt::format("config line {}: {}", e.line(), e.message()));
    }
    std::map<std::string, std::string> values;
    for (const auto &[section, body] : pt) {
        if (body.empty()) throw ConfigError(fmt::format("configuration key '{}' must sit inside a [section]", section));
        for (const auto &[key, leaf] : body) values[section + "." + key] = strip_comment(leaf.get_value<std::string>());
    }
    for (const auto &[key, value] : overrides) {
        if (value.empty()) {
            values.erase(key);
        } else {
            values[key] = value;
        }
    }
    return build(values);
}

ExperimentConfig load_config(const std::filesystem::path &path, const Overrides &overrides) {
    std::string text;
    try {
        text = io::read_text_file(path);
    } catch (const IoError &e) {
        throw ConfigError(e.what());
    }
    std::istringstream ss(text);
    return parse_config(ss, overrides);
}

std::string default_config_text() {
    return R"(# kitten experiment configuration. Every key is optional; the values
# shown are the defaults.

[cavity]
gamma_t = 57e6        # output-coupler field decay rate, 1/s
gamma_l = 1.2e6       # intracavity-loss field decay rate, 1/s
fsr = 573e6           # free spectral range, Hz

[detector]
eta0 = 0.5            # APD intrinsic efficiency (assumed)
eta_f = 0.3           # filter-chain transmission
# bandwidth = 4.63e6  # Hz; default zeta0 / (2 pi)
window = 1e-9         # trigger window T, s
dark_count_rate = 100 # cps
background_rate = 0   # cps
noise_mode_weighting = true  # nu = rate * T * (B T); false: nu = rate * T
# nu = 4.6e-10        # set the mean noise count per window directly

[loss]
tap = 0.05            # tapping ratio; or set tau = 1 - tap instead
tau_h = 0.78
tau_s0 = 0.95
kappa = 0.93

[pump]
squeezing_db = -2.6   # or z = 0.28 (exactly one)

[sampling]
count = 50000
seed = 1
phase_schedule = uniform   # uniform | sweep | fixed
fixed_phase = 0
shard_size = 4096
workers = 0                # 0: all hardware threads; results do not depend on it

[tomography]
dim = 20
max_iters = 2000
tol = 1e-9
phase_bins = 24
dx = 0.1
x_max = 6

[grid]
half_width = 4
points = 81
curve_taps = 0.01, 0.05, 0.10
curve_z_min = 0
curve_z_max = 0.95
curve_points = 96
compare_half_width = 3

[spectrum]
filter_fwhm = 60e6, 60e6, 60e6   # Hz
# filter_center = 0, 0, 0        # Hz
# opo_fwhm = 9.26e6              # Hz; default zeta0 / pi
comb_order = 2
span = 1.2e9                     # detuning grid half width, Hz
points = 2401
scale = 1

[modes]
kernel = stationary   # stationary | rank_one
half_width = 8        # in units of 1/zeta0
points = 512
count = 4

[fit]
fit_kappa = true
fit_tau_h = false
weighting = uniform   # uniform | sigma
starts = 8
seed = 1
max_iters = 200
synthetic_taps = 0.01, 0.05, 0.10
synthetic_z_min = 0.05
synthetic_z_max = 0.95
synthetic_points = 12
synthetic_noise = 0.005
synthetic_seed = 1

[output]
dir = kitten_out
)";
}

}  // namespace kitten::config
