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

#include "kitten/quadrature_sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include <fmt/core.h>
#include <fmt/ostream.h>

#include "kitten/error.hpp"
#include "kitten/series_io.hpp"

namespace kitten::sampling {

namespace {

using model::kPi;

// Proposal: centered Gaussian whose variance is kWiden times the
// unconditioned marginal variance at the same phase. The conditional
// marginal is n0(q) times a quadratic in q, so a wider Gaussian bounds it.
constexpr double kWiden = 1.5;
constexpr double kBoundSafety = 1.02;

double gaussian(double q, double var) { return std::exp(-q * q / (2.0 * var)) / std::sqrt(2.0 * kPi * var); }

struct Envelope {
    const model::ConditionalWigner &w;
    double bound = 1.0;

    double variance(double theta) const { return kWiden * w.unconditioned().quadrature_variance(theta); }

    double max_ratio(double theta) const {
        const double var = variance(theta);
        const double reach = 12.0 * std::sqrt(var);
        double best = 0.0;
        for (int k = 0; k <= 600; ++k) {
            const double q = reach * k / 600.0;
            best = std::max(best, w.marginal(theta, q) / gaussian(q, var));
        }
        return best;
    }

    Envelope(const model::ConditionalWigner &cw, const SamplerOptions &opt) : w(cw) {
        double m = 0.0;
        if (opt.schedule == PhaseSchedule::Fixed) {
            m = max_ratio(opt.fixed_phase);
        } else {
            for (int k = 0; k <= 180; ++k) m = std::max(m, max_ratio(kPi * k / 180.0));
        }
        bound = kBoundSafety * m;
    }
};

struct ShardResult {
    std::uint64_t attempts = 0;
    std::exception_ptr error;
};

void run_shard(const Envelope &env, const SamplerOptions &opt, std::uint64_t seed, std::size_t shard, std::size_t n,
               std::vector<QuadratureRecord> &out, ShardResult &res) {
    std::mt19937_64 rng(child_seed(seed, shard));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t begin = shard * opt.shard_size;
    const std::size_t end = std::min(n, begin + opt.shard_size);
    for (std::size_t i = begin; i < end; ++i) {
        double theta = 0.0;
        switch (opt.schedule) {
            case PhaseSchedule::UniformRandom:
                theta = kPi * unit(rng);
                if (theta >= kPi) theta = 0.0;
                break;
            case PhaseSchedule::LinearSweep:
                theta = kPi * static_cast<double>(i) / static_cast<double>(n);
                break;
            case PhaseSchedule::Fixed:
                theta = opt.fixed_phase;
                break;
        }
        const double var = env.variance(theta);
        const double sd = std::sqrt(var);
        for (;;) {
            ++res.attempts;
            const double q = sd * normal(rng);
            const double ceiling = env.bound * gaussian(q, var);
            const double density = env.w.marginal(theta, q);
            if (density > ceiling) {
                throw DomainError(fmt::format(
                    "envelope violation: P_theta(q)={:.6g} exceeds bound {:.6g} at theta={}, q={} (z={})", density,
                    ceiling, theta, q, env.w.z()));
            }
            if (unit(rng) * ceiling <= density) {
                out[i] = {theta, q};
                break;
            }
            if (res.attempts > 10000 && res.attempts > 1000 * (i - begin + 1)) {
                throw ConvergenceError(fmt::format(
                    "rejection sampler efficiency below 1e-3 ({} attempts for {} records; envelope bound {:.4g}, z={})",
                    res.attempts, i - begin, env.bound, env.w.z()));
            }
        }
    }
}

}  // namespace

const char *to_string(PhaseSchedule s) {
    switch (s) {
        case PhaseSchedule::UniformRandom:
            return "uniform";
        case PhaseSchedule::LinearSweep:
            return "sweep";
        case PhaseSchedule::Fixed:
            return "fixed";
    }
    return "uniform";
}

PhaseSchedule phase_schedule_from_string(const std::string &s) {
    if (s == "uniform") return PhaseSchedule::UniformRandom;
    if (s == "sweep") return PhaseSchedule::LinearSweep;
    if (s == "fixed") return PhaseSchedule::Fixed;
    throw ConfigError(fmt::format("sampling.phase_schedule must be one of uniform, sweep, fixed (got '{}')", s));
}

std::uint64_t child_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

QuadratureDataset sample(double z, const model::ModelParams &params, std::size_t n, std::uint64_t seed,
                         const SamplerOptions &options) {
    if (options.shard_size == 0) throw ConfigError("sampling.shard_size must be > 0");
    if (options.schedule == PhaseSchedule::Fixed && !(options.fixed_phase >= 0.0 && options.fixed_phase < kPi)) {
        throw ConfigError(fmt::format("sampling.fixed_phase must lie in [0, pi) (got {})", options.fixed_phase));
    }
    const model::ConditionalWigner w(model::PumpRatio(z), params);

    QuadratureDataset ds;
    ds.meta.z = z;
    ds.meta.seed = seed;
    ds.meta.count = n;
    ds.meta.schedule = options.schedule;
    ds.meta.config = {{"model", io::to_json(params)}, {"z", z}};
    ds.meta.config_hash = io::config_hash(ds.meta.config);
    if (n == 0) return ds;

    const Envelope env(w, options);
    ds.records.resize(n);
    const std::size_t shards = (n + options.shard_size - 1) / options.shard_size;
    std::vector<ShardResult> results(shards);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t s = next++; s < shards; s = next++) {
            try {
                run_shard(env, options, seed, s, n, ds.records, results[s]);
            } catch (...) {
                results[s].error = std::current_exception();
            }
        }
    };
    unsigned workers = options.workers ? options.workers : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, shards));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
    }

    std::uint64_t attempts = 0;
    for (const auto &r : results) {
        if (r.error) std::rethrow_exception(r.error);
        attempts += r.attempts;
    }
    ds.meta.acceptance_rate = static_cast<double>(n) / static_cast<double>(attempts);
    if (ds.meta.acceptance_rate < 1e-3) {
        throw ConvergenceError(fmt::format("rejection sampler acceptance {:.3g} below 1e-3 (envelope bound {:.4g})",
                                           ds.meta.acceptance_rate, env.bound));
    }
    return ds;
}

void write_dataset(std::ostream &os, const QuadratureDataset &ds) {
    nlohmann::json meta{{"z", ds.meta.z},
                        {"seed", ds.meta.seed},
                        {"count", ds.records.size()},
                        {"phase_schedule", to_string(ds.meta.schedule)},
                        {"acceptance_rate", ds.meta.acceptance_rate},
                        {"config", ds.meta.config},
                        {"config_hash", ds.meta.config_hash.empty() ? io::config_hash(ds.meta.config) : ds.meta.config_hash},
                        {"tool", fmt::format("kitten {}", io::kToolVersion)}};
    os << "# kitten quadrature dataset\n# meta: " << meta.dump() << "\ntheta,x\n";
    std::string buf;
    buf.reserve(ds.records.size() * 44);
    for (const auto &r : ds.records) {
        buf += io::fmt_double(r.theta);
        buf += ',';
        buf += io::fmt_double(r.x);
        buf += '\n';
    }
    os << buf;
}

void emit_dataset(const QuadratureDataset &ds, const std::filesystem::path &path) {
    std::ostringstream ss;
    write_dataset(ss, ds);
    io::write_text_file(path, ss.str());
}

QuadratureDataset read_dataset(std::istream &is) {
    QuadratureDataset ds;
    std::string line;
    std::size_t lineno = 0;
    bool have_meta = false, have_columns = false;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            constexpr std::string_view tag = "# meta: ";
            if (line.rfind(tag, 0) == 0) {
                try {
                    const auto j = nlohmann::json::parse(line.substr(tag.size()));
                    ds.meta.z = j.at("z").get<double>();
                    ds.meta.seed = j.at("seed").get<std::uint64_t>();
                    ds.meta.count = j.at("count").get<std::size_t>();
                    ds.meta.schedule = phase_schedule_from_string(j.at("phase_schedule").get<std::string>());
                    ds.meta.acceptance_rate = j.value("acceptance_rate", 1.0);
                    ds.meta.config = j.at("config");
                    ds.meta.config_hash = j.value("config_hash", std::string{});
                } catch (const nlohmann::json::exception &e) {
                    throw IoError(fmt::format("line {}: bad dataset metadata: {}", lineno, e.what()));
                }
                have_meta = true;
            }
            continue;
        }
        if (!have_columns) {
            if (line != "theta,x") throw IoError(fmt::format("line {}: expected column header 'theta,x'", lineno));
            have_columns = true;
            continue;
        }
        const auto v = io::parse_numbers(line, 2, lineno);
        if (!(v[0] >= 0.0 && v[0] < kPi) || !std::isfinite(v[1])) {
            throw IoError(fmt::format("line {}: record ({}, {}) outside theta in [0, pi) or not finite", lineno, v[0], v[1]));
        }
        ds.records.push_back({v[0], v[1]});
    }
    if (!have_meta) throw IoError("dataset has no '# meta:' header line");
    if (!have_columns) throw IoError("dataset has no 'theta,x' column header");
    if (ds.records.size() != ds.meta.count) {
        throw IoError(fmt::format("dataset header promises {} records, found {}", ds.meta.count, ds.records.size()));
    }
    return ds;
}

QuadratureDataset load_dataset(const std::filesystem::path &path) {
    std::istringstream ss(io::read_text_file(path));
    return read_dataset(ss);
}

}  // namespace kitten::sampling
