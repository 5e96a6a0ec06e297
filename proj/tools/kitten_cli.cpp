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

// kitten: command-line front end. Every subcommand reads one INI
// configuration (defaults apply when no file is given), writes plot-ready
// text files into the output directory and prints a short summary.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <json.hpp>

#include "kitten/calibration_fit.hpp"
#include "kitten/config.hpp"
#include "kitten/error.hpp"
#include "kitten/model_core.hpp"
#include "kitten/quadrature_sampler.hpp"
#include "kitten/series_io.hpp"
#include "kitten/spectrum_filters.hpp"
#include "kitten/temporal_modes.hpp"
#include "kitten/tomography.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace kitten;

namespace {

enum ExitCode : int { kOk = 0, kUsage = 1, kConfig = 2, kDomain = 3, kConvergence = 4, kIo = 5, kInternal = 6 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Options shared by every subcommand.
struct Common {
    std::string config_path;
    std::vector<std::string> sets;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> n;
    std::optional<double> z;
    std::optional<double> squeezing_db;
    std::optional<double> tap;
};

void add_common(CLI::App *sub, Common &c) {
    sub->add_option("-c,--config", c.config_path, "INI configuration file (defaults apply to missing keys)");
    sub->add_option("--set", c.sets, "Override one key, section.key=value (repeatable; empty value unsets)");
    sub->add_option("-o,--out", c.out, "Output directory (output.dir)");
    sub->add_option("--seed", c.seed, "RNG seed for generated data (sampling.seed; fit.synthetic_seed for fit)");
    sub->add_option("--n", c.n, "Number of quadrature samples (sampling.count)");
    auto *z = sub->add_option("--z", c.z, "Pump amplitude ratio sqrt(P/P_th), dimensionless in [0,1)");
    sub->add_option("--squeezing-db", c.squeezing_db, "Target squeezed-quadrature level in dB (< 0)")->excludes(z);
    sub->add_option("--tap", c.tap, "Tapping ratio toward the trigger, 1 - tau (dimensionless)");
}

config::ExperimentConfig resolve_config(const Common &c, const std::string &command) {
    config::Overrides ov;
    for (const auto &s : c.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw UsageError("--set expects section.key=value (got '" + s + "')");
        ov[s.substr(0, eq)] = s.substr(eq + 1);
    }
    if (!c.out.empty()) ov["output.dir"] = c.out;
    if (c.seed) ov[command == "fit" ? "fit.synthetic_seed" : "sampling.seed"] = std::to_string(*c.seed);
    if (c.n) ov["sampling.count"] = std::to_string(*c.n);
    if (c.z) {
        ov["pump.z"] = io::fmt_double(*c.z);
        ov["pump.squeezing_db"] = "";
    }
    if (c.squeezing_db) {
        ov["pump.squeezing_db"] = io::fmt_double(*c.squeezing_db);
        ov["pump.z"] = "";
    }
    if (c.tap) {
        ov["loss.tap"] = io::fmt_double(*c.tap);
        ov["loss.tau"] = "";
    }
    if (c.config_path.empty()) {
        std::istringstream none;
        return config::parse_config(none, ov);
    }
    return config::load_config(c.config_path, ov);
}

json base_meta(const config::ExperimentConfig &cfg, const std::string &command, std::uint64_t seed) {
    return {{"tool", "kitten"},
            {"version", std::string(io::kToolVersion)},
            {"command", command},
            {"seed", seed},
            {"config", cfg.to_json()},
            {"config_hash", cfg.hash()}};
}

fs::path out_path(const config::ExperimentConfig &cfg, const std::string &name) {
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec) throw IoError(fmt::format("cannot create output directory '{}': {}", cfg.output_dir.string(), ec.message()));
    return cfg.output_dir / name;
}

template <class Writer>
fs::path emit(const config::ExperimentConfig &cfg, const std::string &name, Writer &&write) {
    std::ostringstream os;
    write(os);
    const auto path = out_path(cfg, name);
    io::write_text_file(path, os.str());
    return path;
}

// Re-throws `e` with the stage name prepended, keeping its kind.
template <class F>
auto stage(const char *name, F &&f) -> decltype(f()) {
    try {
        return f();
    } catch (const Error &e) {
        throw Error(e.kind(), fmt::format("{} stage: {}", name, e.what()));
    }
}

void print_warnings(const std::vector<std::string> &warnings) {
    for (const auto &w : warnings) std::cerr << "warning: " << w << "\n";
}

tomo::WignerSurface model_surface(const model::ConditionalWigner &w, const std::vector<double> &xs) {
    tomo::WignerSurface s;
    s.xs = xs;
    s.ps = xs;
    s.values.reserve(xs.size() * xs.size());
    for (double x : xs)
        for (double p : xs) s.values.push_back(w(x, p));
    return s;
}

// ---- model ------------------------------------------------------------------

int cmd_model(const config::ExperimentConfig &cfg) {
    const double z = cfg.pump.resolve(cfg.model);
    const model::ConditionalWigner w(model::PumpRatio(z), cfg.model);
    const auto &g = cfg.grid;
    auto meta = base_meta(cfg, "model", cfg.sampling.seed);
    meta["z"] = z;
    meta["herald_probability"] = w.herald_probability();

    auto surface = model_surface(w, tomo::linspace(-g.half_width, g.half_width, g.points));
    surface.warnings = cfg.model.detector.warnings();
    const auto grid_path = emit(cfg, "wigner_grid.csv", [&](std::ostream &os) { tomo::write_wigner_grid(os, surface, meta); });

    const auto zs = tomo::linspace(g.curve_z_min, g.curve_z_max, g.curve_points);
    fit::OriginCurveData curve;
    for (double tap : g.curve_taps) {
        auto params = cfg.model;
        params.loss.tau = 1.0 - tap;
        for (const auto &v : model::wigner_origin_curve(zs, params)) curve.points.push_back({tap, v.z, v.w00, 0.0});
    }
    const auto curve_path = emit(cfg, "origin_curve.csv", [&](std::ostream &os) { fit::write_origin_data(os, curve, meta); });

    const auto sq = model::squeezing_db(z, cfg.model);
    fmt::print("z = {:.6g} (squeezing {:.3f} dB, antisqueezing {:.3f} dB)\n", z, sq.squeezed_db, sq.antisqueezed_db);
    fmt::print("W(0,0) = {:.6g}\n", w(0.0, 0.0));
    fmt::print("wrote {}\nwrote {}\n", grid_path.string(), curve_path.string());
    print_warnings(surface.warnings);
    return kOk;
}

// ---- sample -----------------------------------------------------------------

sampling::QuadratureDataset draw(const config::ExperimentConfig &cfg) {
    const double z = cfg.pump.resolve(cfg.model);
    auto ds = sampling::sample(z, cfg.model, cfg.sampling.count, cfg.sampling.seed, cfg.sampling.options);
    ds.meta.config = base_meta(cfg, "sample", cfg.sampling.seed);
    ds.meta.config_hash = cfg.hash();
    return ds;
}

int cmd_sample(const config::ExperimentConfig &cfg) {
    const auto ds = draw(cfg);
    const auto path = emit(cfg, "quadratures.csv", [&](std::ostream &os) { sampling::write_dataset(os, ds); });
    fmt::print("z = {:.6g}, {} records, acceptance {:.4f}\nwrote {}\n", ds.meta.z, ds.records.size(), ds.meta.acceptance_rate,
               path.string());
    return kOk;
}

// ---- reconstruct ------------------------------------------------------------

struct Reconstruction {
    tomo::MleResult mle;
    tomo::WignerSurface surface;
};

Reconstruction reconstruct(const config::ExperimentConfig &cfg, const sampling::QuadratureDataset &ds, json meta,
                           const std::string &stem) {
    Reconstruction r;
    r.mle = stage("reconstruct", [&] { return tomo::mle_reconstruct(ds, cfg.tomography); });
    r.surface = stage("wigner", [&] {
        const auto xs = tomo::linspace(-cfg.grid.half_width, cfg.grid.half_width, cfg.grid.points);
        return tomo::wigner_from_rho(r.mle.rho, xs, xs);
    });
    meta["dataset"] = {{"z", ds.meta.z}, {"seed", ds.meta.seed}, {"count", ds.meta.count}, {"config_hash", ds.meta.config_hash}};
    const auto rp = emit(cfg, stem + ".txt", [&](std::ostream &os) { tomo::write_reconstruction(os, r.mle, meta); });
    const auto wp = emit(cfg, stem + "_wigner.csv", [&](std::ostream &os) { tomo::write_wigner_grid(os, r.surface, meta); });
    fmt::print("MLE: {} iterations, converged {}, log-likelihood {:.10g}\n", r.mle.iterations, r.mle.converged,
               r.mle.log_likelihood.empty() ? 0.0 : r.mle.log_likelihood.back());
    if (!r.mle.converged) std::cerr << "warning: MLE stopped at tomography.max_iters before meeting tomography.tol\n";
    print_warnings(r.surface.warnings);
    fmt::print("wrote {}\nwrote {}\n", rp.string(), wp.string());
    return r;
}

int cmd_reconstruct(const config::ExperimentConfig &cfg, const std::string &data) {
    const fs::path path = data.empty() ? cfg.output_dir / "quadratures.csv" : fs::path(data);
    const auto ds = sampling::load_dataset(path);
    const auto r = reconstruct(cfg, ds, base_meta(cfg, "reconstruct", ds.meta.seed), "reconstruction");
    const auto pn = tomo::photon_dist(r.mle.rho);
    fmt::print("reconstructed W(0,0) = {:.6g}\n", tomo::wigner_point(r.mle.rho, 0.0, 0.0));
    for (std::size_t n = 0; n < std::min<std::size_t>(4, pn.size()); ++n) fmt::print("P{} = {:.4f}\n", n, pn[n]);
    return kOk;
}

// ---- pipeline ---------------------------------------------------------------

int cmd_pipeline(const config::ExperimentConfig &cfg) {
    const auto ds = stage("sample", [&] { return draw(cfg); });
    emit(cfg, "quadratures.csv", [&](std::ostream &os) { sampling::write_dataset(os, ds); });

    auto meta = base_meta(cfg, "pipeline", cfg.sampling.seed);
    const auto r = reconstruct(cfg, ds, meta, "reconstruction");

    const model::ConditionalWigner w(model::PumpRatio(ds.meta.z), cfg.model);
    const auto box = tomo::linspace(-cfg.grid.compare_half_width, cfg.grid.compare_half_width, cfg.grid.points);
    const auto rec = stage("compare", [&] { return tomo::wigner_from_rho(r.mle.rho, box, box); });
    double max_dev = 0.0;
    for (std::size_t i = 0; i < box.size(); ++i)
        for (std::size_t j = 0; j < box.size(); ++j) max_dev = std::max(max_dev, std::abs(rec.at(i, j) - w(box[i], box[j])));
    const auto target = stage("compare", [&] {
        return tomo::density_from_wigner([&](double x, double p) { return w(x, p); }, cfg.tomography.dim);
    });
    const double w00_rec = tomo::wigner_point(r.mle.rho, 0.0, 0.0);
    const double w00_model = w(0.0, 0.0);
    const double fid = tomo::fidelity(r.mle.rho, target);
    const double dist = tomo::trace_distance(r.mle.rho, target);
    const auto pn = tomo::photon_dist(r.mle.rho);

    meta["comparison"] = {{"half_width", cfg.grid.compare_half_width},
                          {"points", cfg.grid.points},
                          {"max_deviation", max_dev},
                          {"w00_reconstructed", w00_rec},
                          {"w00_model", w00_model},
                          {"fidelity", fid},
                          {"trace_distance", dist},
                          {"photon_distribution", pn}};
    const auto path = emit(cfg, "comparison.json", [&](std::ostream &os) { os << meta.dump(2) << "\n"; });

    fmt::print("max |W_rec - W_model| on [-{0},{0}]^2 = {1:.6g}\n", cfg.grid.compare_half_width, max_dev);
    fmt::print("W(0,0) reconstructed = {:.6g}, model = {:.6g}\n", w00_rec, w00_model);
    fmt::print("fidelity = {:.6f}, trace distance = {:.6f}\n", fid, dist);
    fmt::print("wrote {}\n", path.string());
    return kOk;
}

// ---- spectrum ---------------------------------------------------------------

int cmd_spectrum(const config::ExperimentConfig &cfg) {
    const auto &s = cfg.spectrum;
    const auto det = tomo::linspace(-s.span_hz, s.span_hz, s.points);
    const auto series = spectrum::count_rate_spectrum(det, s.chain, s.scale);
    const double supp = spectrum::comb_suppression_db(s.chain, 1);
    const double fwhm = spectrum::peak_fwhm(s.chain);
    auto meta = base_meta(cfg, "spectrum", cfg.sampling.seed);
    meta["comb_suppression_db"] = supp;
    meta["peak_fwhm_hz"] = fwhm;
    const auto path = emit(cfg, "spectrum.csv", [&](std::ostream &os) { spectrum::write_spectrum(os, series, meta); });
    fmt::print("m=1 comb suppression = {:.2f} dB\npeak FWHM = {:.4f} MHz\nwrote {}\n", supp, fwhm / 1e6, path.string());
    print_warnings(s.chain.warnings());
    return kOk;
}

// ---- modes ------------------------------------------------------------------

int cmd_modes(const config::ExperimentConfig &cfg) {
    const auto &m = cfg.modes;
    const double zeta0 = cfg.model.cavity.zeta0();
    const auto grid = modes::TimeGrid::symmetric(m.half_width / zeta0, m.points);
    const auto kernel = m.kernel == "rank_one" ? modes::KernelMatrix::rank_one(modes::psi0(zeta0, grid))
                                               : modes::KernelMatrix::stationary_exponential(zeta0, grid, zeta0);
    const auto sol = modes::solve_modes(kernel, m.count);
    const double jk = modes::capture_error(kernel, sol.modes);

    auto meta = base_meta(cfg, "modes", cfg.sampling.seed);
    meta["zeta0"] = zeta0;
    meta["capture_error"] = jk;
    const auto mp = emit(cfg, "modes.csv", [&](std::ostream &os) {
        std::string out = "# kitten temporal modes\n# meta: " + meta.dump() + "\nt";
        for (std::size_t k = 0; k < sol.modes.size(); ++k) out += fmt::format(",re_{0},im_{0}", k);
        out += "\n";
        for (std::size_t i = 0; i < grid.n; ++i) {
            out += io::fmt_double(grid.at(i));
            for (const auto &mode : sol.modes) {
                out += "," + io::fmt_double(mode.values[i].real()) + "," + io::fmt_double(mode.values[i].imag());
            }
            out += "\n";
        }
        os << out;
    });
    const auto ep = emit(cfg, "eigenvalues.csv", [&](std::ostream &os) {
        std::string out = "# kitten mode eigenvalues\n# meta: " + meta.dump() + "\nk,eigenvalue\n";
        for (std::size_t k = 0; k < sol.eigenvalues.size(); ++k) out += fmt::format("{},{}\n", k, io::fmt_double(sol.eigenvalues[k]));
        os << out;
    });
    for (std::size_t k = 0; k < sol.eigenvalues.size(); ++k) fmt::print("lambda_{} = {:.8g}\n", k, sol.eigenvalues[k]);
    fmt::print("J_K = {:.6g}\nwrote {}\nwrote {}\n", jk, mp.string(), ep.string());
    return kOk;
}

// ---- fit --------------------------------------------------------------------

int cmd_fit(const config::ExperimentConfig &cfg, const std::string &data, bool synthetic) {
    auto meta = base_meta(cfg, "fit", cfg.fit.synthetic.seed);
    fit::OriginCurveData points;
    if (synthetic) {
        points = fit::synthesize_origin_data(cfg.model, cfg.fit.synthetic);
        emit(cfg, "origin_data.csv", [&](std::ostream &os) { fit::write_origin_data(os, points, meta); });
        meta["data"] = "synthetic";
    } else {
        const auto text = io::read_text_file(data);
        if (text.find_first_not_of(" \t\r\n") == std::string::npos) throw UsageError("fit data file '" + data + "' is empty");
        std::istringstream is(text);
        points = fit::read_origin_data(is);
        meta["data"] = {{"path", data}, {"hash", io::fnv1a_hex(text)}};
    }

    const auto result = fit::fit_loss_model(points, cfg.model, cfg.fit.options);
    auto constant = cfg.fit.options;
    constant.fit_kappa = false;
    auto base0 = cfg.model;
    base0.loss.kappa = 0.0;
    const auto flat = fit::fit_loss_model(points, base0, constant);
    const double ratio = flat.rss / result.rss;
    meta["constant_loss_rss"] = flat.rss;
    meta["constant_loss_rss_ratio"] = ratio;

    const auto path = emit(cfg, "fit_report.txt", [&](std::ostream &os) { fit::write_fit_report(os, result, points, meta); });
    fmt::print("tau_s0 = {:.5f} +- {:.5f}\n", result.tau_s0, result.stderr_of("tau_s0"));
    if (cfg.fit.options.fit_kappa) fmt::print("kappa = {:.5f} +- {:.5f}\n", result.kappa, result.stderr_of("kappa"));
    if (cfg.fit.options.fit_tau_h) fmt::print("tau_h = {:.5f} +- {:.5f}\n", result.tau_h, result.stderr_of("tau_h"));
    fmt::print("RSS = {:.6g}; constant-loss (kappa = 0) RSS = {:.6g}; ratio = {:.4g}\n", result.rss, flat.rss, ratio);
    fmt::print("wrote {}\n", path.string());
    print_warnings(result.warnings);
    return kOk;
}

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Config: return kConfig;
        case ErrorKind::Domain: return kDomain;
        case ErrorKind::Convergence: return kConvergence;
        case ErrorKind::Io: return kIo;
    }
    return kInternal;
}

const char *kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Config: return "configuration error";
        case ErrorKind::Domain: return "domain error";
        case ErrorKind::Convergence: return "convergence error";
        case ErrorKind::Io: return "I/O error";
    }
    return "error";
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"kitten: photon-subtracted squeezed-vacuum model, tomography and calibration"};
    bool print_default = false;
    app.add_flag("--print-default-config", print_default, "Print the default configuration file and exit");
    app.require_subcommand(0, 1);

    Common common;
    std::string data;
    bool synthetic = false;
    struct Cmd {
        const char *name;
        const char *help;
    };
    const std::vector<Cmd> cmds{{"model", "Wigner grid and W(0,0)-versus-z curves from the analytic model"},
                                {"sample", "Draw homodyne quadrature samples from the model"},
                                {"reconstruct", "Maximum-likelihood density matrix from a quadrature dataset"},
                                {"pipeline", "sample, reconstruct and compare with the model"},
                                {"spectrum", "Heralding count rate versus detuning for the filter chain"},
                                {"modes", "Temporal-mode eigen-decomposition of a correlation kernel"},
                                {"fit", "Fit the pump-dependent loss model to W(0,0) data"}};
    for (const auto &c : cmds) {
        auto *sub = app.add_subcommand(c.name, c.help);
        add_common(sub, common);
        if (std::string_view(c.name) == "reconstruct") {
            sub->add_option("--data", data, "Dataset file (default <output.dir>/quadratures.csv)");
        }
        if (std::string_view(c.name) == "fit") {
            auto *d = sub->add_option("--data", data, "CSV with header tap,z,w00,sigma");
            auto *s = sub->add_flag("--synthetic", synthetic, "Fit synthetic data generated from the configured model");
            d->excludes(s);
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return kUsage;
    }

    if (print_default) {
        std::cout << config::default_config_text();
        return kOk;
    }
    if (app.get_subcommands().empty()) {
        std::cerr << app.help();
        return kUsage;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        if (command == "fit" && data.empty() && !synthetic) throw UsageError("fit needs --data FILE or --synthetic");
        const auto cfg = resolve_config(common, command);
        if (command == "model") return cmd_model(cfg);
        if (command == "sample") return cmd_sample(cfg);
        if (command == "reconstruct") return cmd_reconstruct(cfg, data);
        if (command == "pipeline") return cmd_pipeline(cfg);
        if (command == "spectrum") return cmd_spectrum(cfg);
        if (command == "modes") return cmd_modes(cfg);
        if (command == "fit") return cmd_fit(cfg, data, synthetic);
    } catch (const UsageError &e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const Error &e) {
        std::cerr << kind_name(e.kind()) << ": " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception &e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kInternal;
    }
    return kUsage;
}
