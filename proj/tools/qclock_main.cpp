#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qclock/scenario.hpp"

// Batch front end: load a scenario file, apply targeted overrides, run the
// requested product, emit files. Exit codes: 0 success, 2 validation error,
// 3 numerical-guard failure, 4 I/O error.

namespace {

namespace qs = qclock::scenario;
namespace fs = std::filesystem;

struct Options {
    std::string scenario_path;
    std::string out_dir = ".";
    std::optional<double> delta_x;
    std::optional<double> t_final;
    std::string param;
    std::vector<double> values;
};

qs::Scenario load_with_overrides(const Options& opt) {
    qs::Scenario s = qs::load_scenario(opt.scenario_path);
    if (opt.delta_x) {
        if (*opt.delta_x < 0.0)
            throw qclock::ValidationError("--delta-x-m must be nonnegative");
        s.delta_x = *opt.delta_x;
    }
    if (opt.t_final) {
        if (!(*opt.t_final > s.grid.t_start))
            throw qclock::ValidationError(
                "--t-final-s must exceed the grid start time");
        s.grid.t_end = *opt.t_final;
        s.t_final = *opt.t_final;
    }
    return s;
}

// Products already written by the subcommand are skipped; the scenario's
// outputs list supplies the rest.
void emit_requested(const qs::Scenario& s, const fs::path& out,
                    bool have_visibility, bool have_trajectory, bool have_report) {
    for (const auto kind : s.outputs) {
        switch (kind) {
        case qs::OutputKind::VisibilityCsv:
            if (!have_visibility) {
                qs::write_visibility_csv(out / "visibility.csv", qs::run_visibility(s));
                std::cout << "wrote " << (out / "visibility.csv").string() << "\n";
            }
            have_visibility = true;
            break;
        case qs::OutputKind::TrajectoryCsv:
            if (!have_trajectory) {
                qs::write_trajectory_csv(out / "trajectory.csv", qs::run_evolve(s));
                std::cout << "wrote " << (out / "trajectory.csv").string() << "\n";
            }
            have_trajectory = true;
            break;
        case qs::OutputKind::ReportJson:
            if (!have_report) {
                qs::write_report_json(out / "report.json", qs::run_report(s));
                std::cout << "wrote " << (out / "report.json").string() << "\n";
            }
            have_report = true;
            break;
        }
    }
}

int run_propertime(const Options& opt) {
    const auto s = load_with_overrides(opt);
    const fs::path out(opt.out_dir);
    const auto r = qs::run_propertime(s);
    qs::write_propertime_csv(out / "propertime.csv", r);
    std::cout << "wrote " << (out / "propertime.csv").string() << "\n";
    std::cout << "delta_tau_s at t_end: " << qs::fmt17(r.delta_taus.back())
              << "\n";
    emit_requested(s, out, false, false, false);
    return 0;
}

int run_visibility(const Options& opt) {
    const auto s = load_with_overrides(opt);
    const fs::path out(opt.out_dir);
    const auto curve = qs::run_visibility(s);
    qs::write_visibility_csv(out / "visibility.csv", curve);
    std::cout << "wrote " << (out / "visibility.csv").string() << "\n";
    std::cout << "visibility at t_end: " << qs::fmt17(curve.values.back())
              << "\n";
    emit_requested(s, out, true, false, false);
    return 0;
}

int run_dectime(const Options& opt) {
    const auto s = load_with_overrides(opt);
    const fs::path out(opt.out_dir);
    const auto rep = qs::run_report(s);
    qs::write_report_json(out / "report.json", rep);
    std::cout << "wrote " << (out / "report.json").string() << "\n";
    std::cout << "delta_h0_J: " << qs::fmt17(rep.delta_h0) << "\n";
    std::cout << "tau_dec_s: "
              << (rep.tau_dec ? qs::fmt17(*rep.tau_dec) : "n/a") << "\n";
    std::cout << "tau_dec_fit_s: "
              << (rep.tau_dec_fit ? qs::fmt17(*rep.tau_dec_fit) : "n/a") << "\n";
    emit_requested(s, out, false, false, true);
    return 0;
}

int run_evolve(const Options& opt) {
    const auto s = load_with_overrides(opt);
    const fs::path out(opt.out_dir);
    const auto traj = qs::run_evolve(s);
    qs::write_trajectory_csv(out / "trajectory.csv", traj);
    std::cout << "wrote " << (out / "trajectory.csv").string() << "\n";
    std::cout << "visibility at t_end: " << qs::fmt17(traj.visibility.back())
              << "\n";
    if (traj.step_size_too_coarse)
        std::cout << "warning: step size too coarse; halving changed the "
                     "result beyond 1e-6\n";
    emit_requested(s, out, false, true, false);
    return 0;
}

int run_frames(const Options& opt) {
    const auto s = load_with_overrides(opt);
    const fs::path out(opt.out_dir);
    auto rep = qs::run_report(s);
    rep.frames = qs::run_frames(s);
    qs::write_report_json(out / "report.json", rep);
    std::cout << "wrote " << (out / "report.json").string() << "\n";
    std::cout << "delta_tau_closed_s: " << qs::fmt17(rep.frames->delta_tau_closed)
              << "\n";
    if (rep.frames->resolvable) {
        std::cout << "delta_tau_routed_s: "
                  << qs::fmt17(rep.frames->delta_tau_routed) << "\n";
        std::cout << "residual_rel: " << qs::fmt17(rep.frames->residual_rel)
                  << "\n";
    } else {
        std::cout << "delta_tau_routed_s: unresolvable (split below "
                  << qs::fmt17(64.0 * rep.frames->resolution_floor)
                  << " s double floor)\n";
    }
    std::cout << "delta_tau_minkowski_cut_s: "
              << qs::fmt17(rep.frames->delta_tau_minkowski_cut) << "\n";
    return 0;
}

int run_scan(const Options& opt) {
    const auto s = load_with_overrides(opt);
    const fs::path out(opt.out_dir);
    const auto r = qs::run_scan(s, opt.param, opt.values);
    qs::write_scan_csv(out / "scan.csv", r);
    std::cout << "wrote " << (out / "scan.csv").string() << "\n";
    std::cout << "rows: " << r.rows.size() << "\n";
    return 0;
}

void add_common(CLI::App* sub, Options& opt) {
    sub->add_option("--scenario", opt.scenario_path, "scenario file")
        ->required();
    sub->add_option("--out", opt.out_dir, "output directory (default: .)");
    sub->add_option("--delta-x-m", opt.delta_x, "override branch separation");
    sub->add_option("--t-final-s", opt.t_final,
                    "override the grid end / frames cut time");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"time-dilation decoherence simulator"};
    app.require_subcommand(1);
    Options opt;

    CLI::App* propertime = app.add_subcommand(
        "propertime", "proper-time difference law over the grid");
    add_common(propertime, opt);
    CLI::App* visibility = app.add_subcommand(
        "visibility", "interferometric visibility curve");
    add_common(visibility, opt);
    CLI::App* dectime = app.add_subcommand(
        "dectime", "decoherence time: closed form and Gaussian fit");
    add_common(dectime, opt);
    CLI::App* evolve = app.add_subcommand(
        "evolve", "joint evolution / master equation trajectory");
    add_common(evolve, opt);
    CLI::App* frames = app.add_subcommand(
        "frames", "frame-invariance report for free-fall branches");
    add_common(frames, opt);
    CLI::App* scan = app.add_subcommand(
        "scan", "visibility curves over a parameter sweep");
    add_common(scan, opt);
    scan->add_option("--param", opt.param, "delta_x, N, T or omega")->required();
    scan->add_option("--values", opt.values, "sweep values")
        ->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "argument error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (app.got_subcommand(propertime)) return run_propertime(opt);
        if (app.got_subcommand(visibility)) return run_visibility(opt);
        if (app.got_subcommand(dectime)) return run_dectime(opt);
        if (app.got_subcommand(evolve)) return run_evolve(opt);
        if (app.got_subcommand(frames)) return run_frames(opt);
        if (app.got_subcommand(scan)) return run_scan(opt);
        std::cerr << "no subcommand selected\n";
        return 2;
    } catch (const qclock::ValidationError& e) {
        std::cerr << "validation error [" << opt.scenario_path << "]: "
                  << e.what() << "\n";
        return 2;
    } catch (const qclock::NumericalGuardError& e) {
        std::cerr << "numerical guard [" << opt.scenario_path << "]: "
                  << e.what() << "\n";
        return 3;
    } catch (const qclock::IoError& e) {
        std::cerr << "i/o error [" << opt.scenario_path << "]: " << e.what()
                  << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}
