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

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "kitten/calibration_fit.hpp"
#include "kitten/model_core.hpp"
#include "kitten/quadrature_sampler.hpp"
#include "kitten/series_io.hpp"
#include "kitten/spectrum_filters.hpp"
#include "kitten/temporal_modes.hpp"
#include "kitten/tomography.hpp"
#include "oracles.hpp"
#include "random_params.hpp"

namespace fs = std::filesystem;
using namespace kitten;
using model::kPi;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

struct Criterion {
    const char *name;
    double budget_s;  // 0: no runtime bound
    std::function<Outcome()> check;
};

model::ModelParams nominal() { return model::default_params(0.95); }

double minus_2p6_db_z() { return model::pump_ratio_for_squeezing_db(-2.6, nominal()).value(); }

// W(0,0) on z = 0.05, 0.10, ..., 0.90 from tests/oracles/model_oracle.py
// (mpmath, 50 digits).
struct GoldenCurve {
    double tau, kappa;
    std::vector<double> w00;
};

const std::vector<GoldenCurve> &golden_curves() {
    static const std::vector<GoldenCurve> curves{
        {0.99, 0.93,
         {0.088532710450381774, -0.042227187532204607, -0.076906123779120518, -0.081343573509245702, -0.073884666622375819,
          -0.061117845690473007, -0.046348998539295111, -0.031646354506528, -0.018370524822104774, -0.0073237094030444847,
          0.0011649371506196865, 0.0071339012398656009, 0.010863755595534292, 0.012756031788346619, 0.013237125161809766,
          0.012693942277211975, 0.011433938384367781, 0.0096420783917603958}},
        {0.95, 0.93,
         {-0.046754233974009376, -0.092170552841902798, -0.093381788542802418, -0.084433633998021745, -0.071254335846106237,
          -0.056235391872631991, -0.040959817808092353, -0.026636116259311856, -0.014131825788327389, -0.0039543620686641541,
          0.0037314945544595121, 0.0090379962840872454, 0.012260857484519127, 0.013784582349842086, 0.014005691807264185,
          0.013280132844736978, 0.01188873895886008, 0.0099947379512970413}},
        {0.90, 0.93,
         {-0.058575446649811633, -0.080294878562370166, -0.076948633310881343, -0.067494841077590732, -0.055304193738374122,
          -0.041996725725291986, -0.028774034447757158, -0.01658339262760024, -0.0060993654263917, 0.0022983394713309558,
          0.0085076997137128279, 0.01264848833914977, 0.014985986367724734, 0.015854952194538086, 0.015597768613973805,
          0.014520967998227125, 0.01286419186847098, 0.010755788110004633}},
        {0.95, 0.0,
         {-0.047792107202875755, -0.096337594831638579, -0.10243040982567258, -0.099666095729608045, -0.093346553670096441,
          -0.085126046090538466, -0.075839579279713526, -0.066057974868204808, -0.056228044073534427, -0.046710667137262854,
          -0.037790610288736329, -0.029679661822275366, -0.022520045192078019, -0.016390109046549714, -0.011312396173118458,
          -0.0072635057364809403, -0.0041851290040338608, -0.001996317456925456}},
    };
    return curves;
}

Outcome vacuum_identity() {
    const model::ConditionalWigner w(model::PumpRatio(0.0), nominal());
    const auto xs = tomo::linspace(-5.0, 5.0, 201);
    double worst = 0.0;
    for (double x : xs)
        for (double p : xs) worst = std::max(worst, std::abs(w(x, p) - std::exp(-x * x - p * p) / kPi));
    return {worst <= 1e-12, fmt::format("max |W - exp(-x^2-p^2)/pi| = {:.2e} on 201^2 grid over [-5,5]^2 (nu = {:.3g})", worst,
                                        nominal().detector.nu)};
}

Outcome normalization_sweep() {
    std::mt19937_64 rng(20260917);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const auto c = oracle::random_case(rng);
        const model::ConditionalWigner w(model::PumpRatio(c.z), c.params);
        const double hx = 10.0 * std::sqrt(w.unconditioned().vx);
        const double hp = 10.0 * std::sqrt(w.unconditioned().vp);
        const double total = oracle::trapezoid_2d([&](double x, double p) { return w(x, p); }, -hx, hx, -hp, hp, 401);
        worst = std::max(worst, std::abs(total - 1.0));
    }
    return {worst <= 1e-6, fmt::format("100 random configurations, max |integral - 1| = {:.2e}", worst)};
}

Outcome negativity_regime() {
    std::vector<double> zs;
    for (int k = 1; k <= 18; ++k) zs.push_back(k / 20.0);
    double golden_dev = 0.0;
    for (const auto &g : golden_curves()) {
        auto p = model::default_params(g.tau);
        p.loss.kappa = g.kappa;
        const auto curve = model::wigner_origin_curve(zs, p);
        for (std::size_t i = 0; i < zs.size(); ++i) golden_dev = std::max(golden_dev, std::abs(curve[i].w00 - g.w00[i]));
    }
    const auto curve = model::wigner_origin_curve(zs, nominal());
    const auto lowest = std::min_element(curve.begin(), curve.end(), [](auto &a, auto &b) { return a.w00 < b.w00; });
    double neg_lo = 1.0, neg_hi = 0.0;
    for (const auto &v : curve)
        if (v.w00 < 0.0) neg_lo = std::min(neg_lo, v.z), neg_hi = std::max(neg_hi, v.z);
    bool down_then_up = true;
    for (auto it = curve.begin(); it != lowest; ++it) down_then_up &= it->w00 > (it + 1)->w00;
    const double tail = curve.back().w00;
    const bool ok = lowest->w00 < 0.0 && neg_lo > 0.0 && neg_hi < 1.0 && down_then_up && tail > lowest->w00 &&
                    std::abs(tail) < 0.25 * std::abs(lowest->w00) && golden_dev <= 1e-12;
    return {ok, fmt::format("tau=0.95: W(0,0)<0 for z in [{:.2f},{:.2f}], minimum {:.4f} at z={:.2f}, W(0,0)={:.4f} at z={:.2f}; "
                            "golden curves max dev {:.1e}",
                            neg_lo, neg_hi, lowest->w00, lowest->z, tail, curve.back().z, golden_dev)};
}

fit::OriginCurveData synthetic(std::uint64_t seed) {
    fit::SyntheticSpec s;
    s.seed = seed;
    return fit::synthesize_origin_data(nominal(), s);
}

double constant_loss_ratio(const fit::OriginCurveData &d) {
    const auto free_fit = fit::fit_loss_model(d, nominal());
    auto flat = nominal();
    flat.loss.kappa = 0.0;
    fit::FitOptions frozen;
    frozen.fit_kappa = false;
    return fit::fit_loss_model(d, flat, frozen).rss / free_fit.rss;
}

Outcome constant_loss_rejection() {
    const double canonical = constant_loss_ratio(synthetic(1));
    std::vector<double> ratios;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) ratios.push_back(constant_loss_ratio(synthetic(seed)));
    const auto above = std::count_if(ratios.begin(), ratios.end(), [](double r) { return r >= 10.0; });
    std::nth_element(ratios.begin(), ratios.begin() + 25, ratios.end());
    const double median = ratios[25];
    return {canonical >= 10.0 && median >= 10.0,
            fmt::format("RSS(kappa=0)/RSS(kappa free) = {:.1f} on the seed-1 dataset; median {:.1f} over 50 seeds, {}/50 at >= 10",
                        canonical, median, above)};
}

Outcome fit_recovery() {
    int ok = 0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const auto r = fit::fit_loss_model(synthetic(seed), nominal());
        if (std::abs(r.tau_s0 - 0.95) <= 0.02 && std::abs(r.kappa - 0.93) <= 0.05) ++ok;
    }
    return {ok >= 45, fmt::format("{}/50 seeds within tau_s0 0.95+-0.02 and kappa 0.93+-0.05 (need 45)", ok)};
}

Outcome tomography_round_trip() {
    const double z = minus_2p6_db_z();
    const model::ConditionalWigner w(model::PumpRatio(z), nominal());
    const auto ds = sampling::sample(z, nominal(), 50000, 1);
    tomo::MleOptions opts;
    opts.dim = 20;
    const auto r = tomo::mle_reconstruct(ds, opts);
    bool monotone = true;
    for (std::size_t i = 1; i < r.log_likelihood.size(); ++i) monotone &= r.log_likelihood[i] >= r.log_likelihood[i - 1];
    const auto grid = tomo::linspace(-3.0, 3.0, 61);
    const auto s = tomo::wigner_from_rho(r.rho, grid, grid);
    double dev = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        for (std::size_t j = 0; j < grid.size(); ++j) dev = std::max(dev, std::abs(s.at(i, j) - w(grid[i], grid[j])));
    const double rec00 = tomo::wigner_point(r.rho, 0.0, 0.0), mod00 = w(0.0, 0.0);
    const bool ok = dev <= 0.02 && std::signbit(rec00) == std::signbit(mod00) && monotone && r.converged;
    return {ok, fmt::format("z={:.4f}, 50000 samples, dim 20: max dev {:.4f} on [-3,3]^2, W(0,0) {:.4f} vs model {:.4f}, "
                            "{} iterations, log-likelihood monotone: {}",
                            z, dev, rec00, mod00, r.iterations, monotone ? "yes" : "no")};
}

Outcome fock_sanity() {
    const double one = tomo::wigner_point(tomo::DensityMatrix::fock(1, 4), 0.0, 0.0);
    const bool kernel_ok = std::abs(one + 1.0 / kPi) <= 1e-10;
    std::string detail = fmt::format("W_|1>(0,0) + 1/pi = {:.1e}", one + 1.0 / kPi);
    bool odd = true;
    for (double z : {0.1, 0.2}) {
        const auto pd = tomo::photon_dist(tomo::mle_reconstruct(sampling::sample(z, nominal(), 50000, 1)).rho);
        odd &= pd[1] > pd[2];
        detail += fmt::format("; z={}: P1={:.3f} P2={:.3f}", z, pd[1], pd[2]);
    }
    return {kernel_ok && odd, detail};
}

Outcome mode_solver() {
    const double zeta0 = nominal().cavity.zeta0();
    const auto g = modes::TimeGrid::symmetric(8.0 / zeta0, 1025);
    const auto psi = modes::psi0(zeta0, g);
    const auto rank_one = modes::solve_modes(modes::KernelMatrix::rank_one(psi), 1);
    double psi_err = 0.0;
    for (std::size_t i = 0; i < g.n; ++i) psi_err = std::max(psi_err, std::abs(rank_one.modes[0].values[i] - psi.values[i]));
    psi_err /= std::sqrt(zeta0);

    const auto gs = modes::TimeGrid::symmetric(4.0 / zeta0, 160);
    const auto hs = modes::KernelMatrix::stationary_exponential(zeta0, gs, zeta0);
    const auto full = modes::solve_modes(hs, gs.n);
    double jk_err = 0.0;
    for (std::size_t k : {1u, 4u, 10u, 40u}) {
        double discarded = 0.0;
        for (std::size_t i = k; i < full.eigenvalues.size(); ++i) discarded += full.eigenvalues[i];
        jk_err = std::max(jk_err, std::abs(modes::capture_error(hs, std::span(full.modes).first(k)) - discarded));
    }

    double jacobi_err = 0.0;
    for (std::size_t n : {64u, 512u}) {
        const auto gj = modes::TimeGrid::symmetric(4.0 / zeta0, n);
        const auto sol = modes::solve_modes(modes::KernelMatrix::stationary_exponential(zeta0, gj, zeta0), n);
        std::vector<double> a(n * n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                a[i * n + j] = std::sqrt(gj.weight(i) * gj.weight(j)) * zeta0 * std::exp(-zeta0 * std::abs(gj.at(i) - gj.at(j)));
        const auto ref = oracle::jacobi_eigenvalues(a, n);
        for (std::size_t i = 0; i < n; ++i) jacobi_err = std::max(jacobi_err, std::abs(sol.eigenvalues[i] - ref[i]));
    }
    return {psi_err <= 1e-4 && jk_err <= 1e-8 && jacobi_err <= 1e-10,
            fmt::format("rank-one mode vs psi0 {:.1e} (scaled by zeta0^-1/2), J_K vs discarded sum {:.1e}, "
                        "Jacobi eigenvalues (n=64, 512) {:.1e}",
                        psi_err, jk_err, jacobi_err)};
}

Outcome spectrum_model() {
    const auto cav = nominal().cavity;
    double worst_supp = 1e300, fwhm_lo = 1e300, fwhm_hi = 0.0;
    std::vector<std::vector<double>> ratios{{5.0, 5.0, 5.0}, {7.5, 7.5, 7.5}, {10.0, 10.0, 10.0}, {5.0, 7.5, 10.0}};
    auto chains = std::vector<spectrum::FilterChain>{spectrum::FilterChain::standard(cav)};
    for (const auto &r : ratios) {
        auto c = spectrum::FilterChain::standard(cav);
        c.filters.clear();
        for (double k : r) c.filters.push_back({k * c.opo_fwhm, 0.0});
        chains.push_back(c);
    }
    for (const auto &c : chains) {
        for (int m : {1, -1}) worst_supp = std::min(worst_supp, spectrum::comb_suppression_db(c, m));
        const double f = spectrum::peak_fwhm(c);
        fwhm_lo = std::min(fwhm_lo, f);
        fwhm_hi = std::max(fwhm_hi, f);
    }
    return {worst_supp > 20.0 && fwhm_lo >= 8.0e6 && fwhm_hi <= 9.3e6,
            fmt::format("5 chains (3x60 MHz and 5-10x OPO FWHM): min m=+-1 suppression {:.1f} dB, FWHM {:.3f}-{:.3f} MHz", worst_supp,
                        fwhm_lo / 1e6, fwhm_hi / 1e6)};
}

int run_cli(const std::string &args) {
    const std::string cmd = std::string(KITTEN_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome cli_determinism() {
    const auto root = fs::temp_directory_path() / "kitten_acceptance_cli";
    fs::remove_all(root);
    const std::vector<std::string> cmds{"model", "sample", "reconstruct", "pipeline", "spectrum", "modes", "fit --synthetic"};
    std::size_t files = 0;
    std::vector<std::string> mismatched;
    for (const char *run : {"a", "b"}) {
        for (const auto &c : cmds) {
            if (run_cli(c + " --seed 5 -o " + (root / run).string()) != 0) mismatched.push_back(c + " (exit status)");
        }
    }
    for (const auto &entry : fs::directory_iterator(root / "a")) {
        const auto other = root / "b" / entry.path().filename();
        ++files;
        if (!fs::exists(other) || io::read_text_file(entry.path()) != io::read_text_file(other)) {
            mismatched.push_back(entry.path().filename().string());
        }
    }
    fs::remove_all(root);
    std::string detail = fmt::format("7 commands run twice with seed 5, {} output files compared", files);
    for (const auto &m : mismatched) detail += "; differs: " + m;
    return {mismatched.empty() && files >= 10, detail};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {"Vacuum identity", 1.0, vacuum_identity},
        {"Normalization sweep", 30.0, normalization_sweep},
        {"Negativity regime", 0.0, negativity_regime},
        {"Constant-loss rejection", 0.0, constant_loss_rejection},
        {"Fit recovery", 120.0, fit_recovery},
        {"Tomography round trip", 300.0, tomography_round_trip},
        {"Fock sanity", 0.0, fock_sanity},
        {"Mode solver", 0.0, mode_solver},
        {"Spectrum model", 0.0, spectrum_model},
        {"CLI determinism", 0.0, cli_determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto &c = criteria[i];
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception &e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = c.budget_s == 0.0 || secs < c.budget_s;
        const bool pass = o.pass && in_time;
        failed += pass ? 0 : 1;
        const std::string timing = c.budget_s > 0.0 ? fmt::format("{:.2f} s, limit {:g} s", secs, c.budget_s) : fmt::format("{:.2f} s", secs);
        fmt::print("{} {:2d}. {}: {} [{}]\n", pass ? "PASS" : "FAIL", i + 1, c.name, o.detail, timing);
        std::fflush(stdout);
    }
    fmt::print("{}/{} criteria passed\n", criteria.size() - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
