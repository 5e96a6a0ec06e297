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

#include "kitten/calibration_fit.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/core.h>

#include "kitten/error.hpp"
#include "kitten/series_io.hpp"

namespace kitten::fit {

namespace {

struct Problem {
    const OriginCurveData &data;
    const model::ModelParams &base;
    const FitOptions &opt;
    std::vector<std::string> names;
    double z_min = 0.0, z_max = 0.0;
    std::vector<double> scale;  // residual weights

    Problem(const OriginCurveData &d, const model::ModelParams &b, const FitOptions &o) : data(d), base(b), opt(o) {
        names.push_back("tau_s0");
        if (opt.fit_kappa) names.push_back("kappa");
        if (opt.fit_tau_h) names.push_back("tau_h");
        z_min = std::numeric_limits<double>::infinity();
        for (const auto &p : data.points) {
            z_min = std::min(z_min, p.z);
            z_max = std::max(z_max, p.z);
            scale.push_back(opt.weighting == Weighting::Sigma ? 1.0 / p.sigma : 1.0);
        }
    }

    std::size_t dim() const { return names.size(); }

    model::LossModel loss(const Eigen::VectorXd &t) const {
        model::LossModel l = base.loss;
        std::size_t k = 0;
        l.tau_s0 = t(k++);
        if (opt.fit_kappa) l.kappa = t(k++);
        if (opt.fit_tau_h) l.tau_h = t(k++);
        return l;
    }

    bool feasible(const Eigen::VectorXd &t) const {
        const auto l = loss(t);
        auto ok = [](double v) { return v >= 0.0 && v <= 1.0; };
        return l.tau_s0 > 0.0 && ok(l.tau_s0 - l.kappa * z_min * z_min) && ok(l.tau_s0 - l.kappa * z_max * z_max) &&
               l.tau_h > 0.0 && l.tau_h <= 1.0;
    }

    Eigen::VectorXd residuals(const Eigen::VectorXd &t) const {
        model::ModelParams p = base;
        p.loss = loss(t);
        const auto m = model_origin_values(data, p);
        Eigen::VectorXd r(static_cast<Eigen::Index>(m.size()));
        for (std::size_t i = 0; i < m.size(); ++i) r(i) = (data.points[i].w00 - m[i]) * scale[i];
        return r;
    }

    Eigen::MatrixXd jacobian(const Eigen::VectorXd &t, const Eigen::VectorXd &r0) const {
        Eigen::MatrixXd j(r0.size(), t.size());
        for (Eigen::Index k = 0; k < t.size(); ++k) {
            const double h = 1e-6 * std::max(1.0, std::abs(t(k)));
            Eigen::VectorXd up = t, dn = t;
            up(k) += h;
            dn(k) -= h;
            const bool fu = feasible(up), fd = feasible(dn);
            if (fu && fd) {
                j.col(k) = (residuals(up) - residuals(dn)) / (2.0 * h);
            } else if (fu) {
                j.col(k) = (residuals(up) - r0) / h;
            } else {
                j.col(k) = (r0 - residuals(dn)) / h;
            }
        }
        return j;
    }
};

struct StartResult {
    Eigen::VectorXd theta;
    double objective = std::numeric_limits<double>::infinity();
    std::vector<double> trace;
    std::size_t iterations = 0;
    std::size_t barrier_hits = 0;
    std::string error;
};

StartResult levenberg_marquardt(const Problem &pb, Eigen::VectorXd theta) {
    StartResult out;
    Eigen::VectorXd r = pb.residuals(theta);
    double f = r.squaredNorm();
    out.trace.push_back(f);
    double lambda = 1e-3;
    for (std::size_t it = 0; it < pb.opt.max_iters; ++it) {
        const Eigen::MatrixXd j = pb.jacobian(theta, r);
        const Eigen::MatrixXd a = j.transpose() * j;
        const Eigen::VectorXd g = j.transpose() * r;
        bool accepted = false;
        Eigen::VectorXd step;
        double f_new = f;
        while (lambda < 1e16) {
            Eigen::MatrixXd damped = a;
            for (Eigen::Index k = 0; k < a.rows(); ++k) damped(k, k) += lambda * std::max(a(k, k), 1e-30);
            step = -damped.ldlt().solve(g);
            const Eigen::VectorXd trial = theta + step;
            if (!pb.feasible(trial)) {
                ++out.barrier_hits;
                lambda *= 4.0;
                continue;
            }
            const Eigen::VectorXd r_trial = pb.residuals(trial);
            f_new = r_trial.squaredNorm();
            if (f_new < f) {
                theta = trial;
                r = r_trial;
                accepted = true;
                lambda = std::max(lambda / 3.0, 1e-15);
                break;
            }
            lambda *= 4.0;
        }
        if (!accepted) break;
        const double gain = f - f_new;
        f = f_new;
        out.trace.push_back(f);
        ++out.iterations;
        if (step.norm() <= 1e-13 * (theta.norm() + 1e-13) || gain <= 1e-15 * f + 1e-34) break;
    }
    out.theta = theta;
    out.objective = f;
    return out;
}

std::vector<Eigen::VectorXd> latin_hypercube_starts(const Problem &pb) {
    const std::size_t s = std::max<std::size_t>(1, pb.opt.starts), d = pb.dim();
    std::vector<std::pair<double, double>> bounds{{0.7, 1.0}};
    if (pb.opt.fit_kappa) bounds.push_back({0.0, 2.0});
    if (pb.opt.fit_tau_h) bounds.push_back({0.5, 1.0});
    std::mt19937_64 rng(pb.opt.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Eigen::VectorXd> starts(s, Eigen::VectorXd(static_cast<Eigen::Index>(d)));
    for (std::size_t k = 0; k < d; ++k) {
        std::vector<std::size_t> strata(s);
        for (std::size_t i = 0; i < s; ++i) strata[i] = i;
        for (std::size_t i = s; i > 1; --i) std::swap(strata[i - 1], strata[static_cast<std::size_t>(unit(rng) * i) % i]);
        for (std::size_t i = 0; i < s; ++i) {
            const double u = (static_cast<double>(strata[i]) + unit(rng)) / static_cast<double>(s);
            starts[i](static_cast<Eigen::Index>(k)) = bounds[k].first + u * (bounds[k].second - bounds[k].first);
        }
    }
    // Pull starting kappa inside the tau_s(z) >= 0 region.
    if (pb.opt.fit_kappa && pb.z_max > 0.0) {
        for (auto &t : starts) t(1) = std::min(t(1), 0.98 * t(0) / (pb.z_max * pb.z_max));
    }
    return starts;
}

}  // namespace

void OriginCurveData::validate() const {
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto &p = points[i];
        if (!(p.tap >= 0.0 && p.tap < 1.0)) throw DomainError(fmt::format("point {}: tap must lie in [0,1) (got {})", i + 1, p.tap));
        if (!(p.z >= 0.0 && p.z < 1.0)) throw DomainError(fmt::format("point {}: z must lie in [0,1) (got {})", i + 1, p.z));
        if (!(p.sigma > 0.0)) throw DomainError(fmt::format("point {}: sigma must be > 0 (got {})", i + 1, p.sigma));
        if (!std::isfinite(p.w00)) throw DomainError(fmt::format("point {}: w00 is not finite", i + 1));
    }
}

std::vector<double> OriginCurveData::taps() const {
    std::set<double> s;
    for (const auto &p : points) s.insert(p.tap);
    return {s.begin(), s.end()};
}

double OriginCurveData::z_max() const {
    double m = 0.0;
    for (const auto &p : points) m = std::max(m, p.z);
    return m;
}

OriginCurveData read_origin_data(std::istream &is) {
    OriginCurveData d;
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            if (line != "tap,z,w00,sigma") throw IoError(fmt::format("line {}: expected column header 'tap,z,w00,sigma'", lineno));
            header = true;
            continue;
        }
        const auto v = io::parse_numbers(line, 4, lineno);
        d.points.push_back({v[0], v[1], v[2], v[3]});
    }
    if (!header) throw IoError("origin data has no 'tap,z,w00,sigma' header");
    try {
        d.validate();
    } catch (const DomainError &e) {
        throw IoError(e.what());
    }
    return d;
}

OriginCurveData load_origin_data(const std::filesystem::path &path) {
    std::istringstream ss(io::read_text_file(path));
    return read_origin_data(ss);
}

void write_origin_data(std::ostream &os, const OriginCurveData &data, const nlohmann::json &meta) {
    std::string out = "# kitten origin-value data\n# meta: " + meta.dump() + "\ntap,z,w00,sigma\n";
    for (const auto &p : data.points) {
        out += fmt::format("{},{},{},{}\n", io::fmt_double(p.tap), io::fmt_double(p.z), io::fmt_double(p.w00), io::fmt_double(p.sigma));
    }
    os << out;
}

model::LossModel FitResult::loss(const model::LossModel &base) const {
    model::LossModel l = base;
    l.tau_s0 = tau_s0;
    l.kappa = kappa;
    l.tau_h = tau_h;
    return l;
}

double FitResult::stderr_of(const std::string &name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return std::sqrt(std::max(0.0, covariance(i, i)));
    }
    return 0.0;
}

std::vector<double> model_origin_values(const OriginCurveData &data, const model::ModelParams &params) {
    std::vector<double> out;
    out.reserve(data.points.size());
    for (const auto &p : data.points) {
        model::ModelParams q = params;
        q.loss.tau = 1.0 - p.tap;
        out.push_back(model::ConditionalWigner(model::PumpRatio(p.z), q)(0.0, 0.0));
    }
    return out;
}

FitResult fit_loss_model(const OriginCurveData &data, const model::ModelParams &base, const FitOptions &options) {
    data.validate();
    const Problem pb(data, base, options);
    for (double tap : data.taps()) {
        const auto n = std::count_if(data.points.begin(), data.points.end(), [&](const OriginPoint &p) { return p.tap == tap; });
        if (n < 3) throw DomainError(fmt::format("curve tap={} has {} points; at least 3 are needed", tap, n));
    }
    if (data.points.size() <= pb.dim()) {
        throw DomainError(fmt::format("{} points cannot determine {} free parameters", data.points.size(), pb.dim()));
    }

    const auto starts = latin_hypercube_starts(pb);
    std::vector<StartResult> runs(starts.size());
    {
        std::vector<std::jthread> pool;
        for (std::size_t i = 0; i < starts.size(); ++i) {
            pool.emplace_back([&, i] {
                try {
                    runs[i] = levenberg_marquardt(pb, starts[i]);
                } catch (const std::exception &e) {
                    runs[i].error = e.what();
                }
            });
        }
    }
    std::size_t best = starts.size();
    for (std::size_t i = 0; i < runs.size(); ++i) {
        if (runs[i].error.empty() && (best == starts.size() || runs[i].objective < runs[best].objective)) best = i;
    }
    if (best == starts.size()) throw ConvergenceError("every fit start failed: " + runs.front().error);

    const auto &win = runs[best];
    FitResult res;
    res.names = pb.names;
    const auto l = pb.loss(win.theta);
    res.tau_s0 = l.tau_s0;
    res.kappa = l.kappa;
    res.tau_h = l.tau_h;
    res.objective = win.objective;
    res.objective_trace = win.trace;
    res.iterations = win.iterations;
    res.best_start = best;
    for (const auto &r : runs) res.barrier_hits += r.barrier_hits;

    model::ModelParams fitted = base;
    fitted.loss = l;
    const auto m = model_origin_values(data, fitted);
    for (std::size_t i = 0; i < m.size(); ++i) {
        res.residuals.push_back(data.points[i].w00 - m[i]);
        res.rss += res.residuals.back() * res.residuals.back();
    }

    // Covariance from the Gauss-Newton Hessian; identifiability from its
    // scale-free conditioning.
    const Eigen::VectorXd r = pb.residuals(win.theta);
    const Eigen::MatrixXd j = pb.jacobian(win.theta, r);
    const Eigen::MatrixXd a = j.transpose() * j;
    Eigen::VectorXd dscale(a.rows());
    for (Eigen::Index k = 0; k < a.rows(); ++k) dscale(k) = a(k, k) > 0.0 ? 1.0 / std::sqrt(a(k, k)) : 1.0;
    const Eigen::MatrixXd b = dscale.asDiagonal() * a * dscale.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b);
    const Eigen::VectorXd ev = es.eigenvalues();
    Eigen::MatrixXd pinv = Eigen::MatrixXd::Zero(a.rows(), a.cols());
    for (Eigen::Index k = 0; k < ev.size(); ++k) {
        const Eigen::VectorXd v = es.eigenvectors().col(k);
        if (ev(k) > 1e-10 * ev.maxCoeff()) {
            pinv += v * v.transpose() / ev(k);
        } else {
            res.identifiable = false;
            std::string combo;
            for (Eigen::Index q = 0; q < v.size(); ++q) {
                combo += fmt::format("{}{:+.3f}*{}", q ? " " : "", v(q) * dscale(q), res.names[q]);
            }
            res.warnings.push_back("unidentifiable parameter combination: " + combo);
        }
    }
    res.covariance = dscale.asDiagonal() * pinv * dscale.asDiagonal();
    if (options.weighting == Weighting::Uniform) {
        const double dof = static_cast<double>(data.points.size() - pb.dim());
        res.covariance *= res.objective / dof;
    }
    if (res.barrier_hits > 0) {
        res.warnings.push_back(fmt::format("{} trial steps rejected by the 0 <= tau_s(z) <= 1 barrier", res.barrier_hits));
    }
    return res;
}

std::vector<ResidualPoint> residual_profile(const FitResult &result, const OriginCurveData &data) {
    std::vector<ResidualPoint> out;
    for (std::size_t i = 0; i < data.points.size(); ++i) {
        const auto &p = data.points[i];
        const double r = result.residuals.at(i);
        out.push_back({p.tap, p.z, p.w00, p.w00 - r, r, r / p.sigma});
    }
    return out;
}

double sign_runs_z(const std::vector<double> &residuals) {
    double n1 = 0, n2 = 0, runs = 0;
    int prev = 0;
    for (double r : residuals) {
        if (r == 0.0) continue;
        const int s = r > 0.0 ? 1 : -1;
        (s > 0 ? n1 : n2) += 1;
        if (s != prev) runs += 1;
        prev = s;
    }
    const double n = n1 + n2;
    if (n1 == 0 || n2 == 0) return -std::sqrt(n);  // a single run: maximally systematic
    const double mu = 2.0 * n1 * n2 / n + 1.0;
    const double var = 2.0 * n1 * n2 * (2.0 * n1 * n2 - n) / (n * n * (n - 1.0));
    return (runs - mu) / std::sqrt(var);
}

OriginCurveData synthesize_origin_data(const model::ModelParams &truth, const SyntheticSpec &spec) {
    if (spec.points < 1) throw ConfigError("synthetic data needs at least one z point per curve");
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    OriginCurveData d;
    for (double tap : spec.taps) {
        for (std::size_t i = 0; i < spec.points; ++i) {
            const double z = spec.points == 1 ? spec.z_lo
                                              : spec.z_lo + (spec.z_hi - spec.z_lo) * static_cast<double>(i) /
                                                                static_cast<double>(spec.points - 1);
            d.points.push_back({tap, z, 0.0, spec.noise > 0.0 ? spec.noise : 1.0});
        }
    }
    const auto clean = model_origin_values(d, truth);
    for (std::size_t i = 0; i < d.points.size(); ++i) {
        d.points[i].w00 = clean[i] + (spec.noise > 0.0 ? spec.noise * gauss(rng) : 0.0);
    }
    return d;
}

void write_fit_report(std::ostream &os, const FitResult &result, const OriginCurveData &data, const nlohmann::json &meta) {
    nlohmann::json m = meta;
    m["rss"] = result.rss;
    m["objective"] = result.objective;
    m["iterations"] = result.iterations;
    m["best_start"] = result.best_start;
    m["barrier_hits"] = result.barrier_hits;
    m["identifiable"] = result.identifiable;
    m["sign_runs_z"] = sign_runs_z(result.residuals);
    std::string out = "# kitten loss-model fit\n# meta: " + m.dump() + "\n";
    for (const auto &w : result.warnings) out += "# warning: " + w + "\n";
    out += "[parameters]\nname,value,stderr\n";
    const std::vector<std::pair<std::string, double>> all{{"tau_s0", result.tau_s0}, {"kappa", result.kappa}, {"tau_h", result.tau_h}};
    for (const auto &[name, value] : all) {
        const bool free = std::find(result.names.begin(), result.names.end(), name) != result.names.end();
        out += fmt::format("{},{},{}\n", name, io::fmt_double(value), free ? io::fmt_double(result.stderr_of(name)) : "fixed");
    }
    out += "[covariance]\n";
    for (Eigen::Index i = 0; i < result.covariance.rows(); ++i) {
        for (Eigen::Index k = 0; k < result.covariance.cols(); ++k) {
            out += io::fmt_double(result.covariance(i, k));
            out += k + 1 < result.covariance.cols() ? ',' : '\n';
        }
    }
    out += "[residuals]\ntap,z,w00,model,residual,normalized\n";
    for (const auto &p : residual_profile(result, data)) {
        out += fmt::format("{},{},{},{},{},{}\n", io::fmt_double(p.tap), io::fmt_double(p.z), io::fmt_double(p.w00),
                           io::fmt_double(p.model), io::fmt_double(p.residual), io::fmt_double(p.normalized));
    }
    os << out;
}

}  // namespace kitten::fit
