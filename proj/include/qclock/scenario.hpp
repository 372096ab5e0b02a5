#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qclock/coherence.hpp"
#include "qclock/constants.hpp"
#include "qclock/dynamics.hpp"
#include "qclock/errors.hpp"
#include "qclock/geometry.hpp"
#include "qclock/internal.hpp"

// Scenario files, batch runners and file emission. The format is flat
// key = value text with units spelled out in the key names; parsing is
// strict (unknown or duplicate keys are errors) because the physics punishes
// silent unit mistakes. All numeric output goes through fmt17 so identical
// inputs produce byte-identical files.

namespace qclock::scenario {

inline std::string fmt17(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

enum class OutputKind { VisibilityCsv, TrajectoryCsv, ReportJson };
enum class InternalModel { TwoLevel, Einstein, Table };
enum class BranchPreset { FixedHeights, FreefallRindler };
enum class EvolveMethod { Exact, Born };
enum class BathKind { TimeDilation, QuantumBrownian };
enum class MetricTag { Minkowski, Rindler, WeakField };

struct Grid {
    double t_start = 0.0;
    double t_end = 0.0;
    std::size_t points = 0;

    std::vector<double> times() const {
        std::vector<double> t(points);
        for (std::size_t i = 0; i < points; ++i)
            t[i] = t_start + (t_end - t_start) * static_cast<double>(i) /
                                 static_cast<double>(points - 1);
        return t;
    }
};

struct Scenario {
    std::string name = "unnamed";
    Constants constants = Constants::si();
    bool natural_units = false;
    MetricTag metric = MetricTag::WeakField;

    BranchPreset branches = BranchPreset::FixedHeights;
    double g = 9.8;        // m/s^2
    double delta_x = 0.0;  // m
    double x0 = 0.0;       // m
    double mass = 1.0;     // kg

    InternalModel internal_model = InternalModel::TwoLevel;
    double omega = 0.0;       // rad/s
    double p_excited = 0.5;
    std::size_t einstein_n = 0;
    double temperature = 0.0; // K
    std::size_t n_max = 0;
    std::string spectrum_path;
    std::optional<internal::InternalSpectrum> table_spectrum;

    Grid grid;
    std::optional<double> t_final; // frames cut time; defaults to grid.t_end

    EvolveMethod evolve_method = EvolveMethod::Exact;
    BathKind bath = BathKind::TimeDilation;
    std::size_t born_steps = 4096;
    double qbm_mass = 0.0;
    double qbm_gamma = 0.0;
    double qbm_temperature = 0.0;

    std::vector<OutputKind> outputs;

    double frames_cut_time() const { return t_final ? *t_final : grid.t_end; }
};

namespace detail {

inline std::string trim(std::string_view sv) {
    std::size_t b = 0, e = sv.size();
    while (b < e && std::isspace(static_cast<unsigned char>(sv[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(sv[e - 1]))) --e;
    return std::string(sv.substr(b, e - b));
}

struct RawEntry {
    std::string value;
    std::size_t line = 0;
    bool used = false;
};

class KeyMap {
public:
    KeyMap(std::istream& is, const std::string& source) : source_(source) {
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            if (const auto hash = line.find('#'); hash != std::string::npos)
                line.erase(hash);
            const std::string body = trim(line);
            if (body.empty()) continue;
            const auto eq = body.find('=');
            if (eq == std::string::npos)
                throw ParseError(source_ + ":" + std::to_string(lineno) +
                                 ": expected key = value");
            const std::string key = trim(body.substr(0, eq));
            const std::string value = trim(body.substr(eq + 1));
            if (key.empty() || value.empty())
                throw ParseError(source_ + ":" + std::to_string(lineno) +
                                 ": empty key or value");
            if (!entries_.emplace(key, RawEntry{value, lineno, false}).second)
                throw ParseError(source_ + ":" + std::to_string(lineno) +
                                 ": duplicate key '" + key + "'");
        }
    }

    bool has(const std::string& key) const { return entries_.count(key) != 0; }

    std::optional<std::string> take(const std::string& key) {
        const auto it = entries_.find(key);
        if (it == entries_.end()) return std::nullopt;
        it->second.used = true;
        return it->second.value;
    }

    double take_double(const std::string& key, double fallback) {
        const auto v = take(key);
        return v ? parse_double(key, *v) : fallback;
    }

    std::optional<double> take_double_opt(const std::string& key) {
        const auto v = take(key);
        if (!v) return std::nullopt;
        return parse_double(key, *v);
    }

    double require_double(const std::string& key) {
        const auto v = take(key);
        if (!v)
            throw ParseError(source_ + ": missing required key '" + key + "'");
        return parse_double(key, *v);
    }

    std::size_t take_size(const std::string& key, std::size_t fallback) {
        const auto v = take(key);
        return v ? parse_size(key, *v) : fallback;
    }

    std::size_t require_size(const std::string& key) {
        const auto v = take(key);
        if (!v)
            throw ParseError(source_ + ": missing required key '" + key + "'");
        return parse_size(key, *v);
    }

    void reject_unused() const {
        for (const auto& [key, entry] : entries_)
            if (!entry.used)
                throw ParseError(source_ + ":" + std::to_string(entry.line) +
                                 ": unknown key '" + key + "'");
    }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        const auto it = entries_.find(key);
        const std::string where =
            it == entries_.end()
                ? source_
                : source_ + ":" + std::to_string(it->second.line);
        throw ParseError(where + ": " + what);
    }

private:
    double parse_double(const std::string& key, const std::string& v) const {
        char* end = nullptr;
        const double x = std::strtod(v.c_str(), &end);
        if (end != v.c_str() + v.size() || !std::isfinite(x))
            fail(key, "value '" + v + "' of '" + key + "' is not a finite number");
        return x;
    }

    std::size_t parse_size(const std::string& key, const std::string& v) const {
        if (v.find('-') != std::string::npos)
            fail(key, "value '" + v + "' of '" + key + "' must be a nonnegative integer");
        char* end = nullptr;
        const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
        if (end != v.c_str() + v.size())
            fail(key, "value '" + v + "' of '" + key + "' is not an integer");
        return static_cast<std::size_t>(x);
    }

    std::string source_;
    std::map<std::string, RawEntry> entries_;
};

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const auto end = comma == std::string::npos ? s.size() : comma;
        const std::string item = trim(std::string_view(s).substr(start, end - start));
        if (!item.empty()) out.push_back(item);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

} // namespace detail

inline Scenario parse_scenario(std::istream& is, const std::string& source,
                               const std::filesystem::path& base_dir = ".") {
    detail::KeyMap km(is, source);
    Scenario s;

    if (const auto v = km.take("name")) s.name = *v;

    if (const auto v = km.take("constants")) {
        if (*v == "SI") {
            s.constants = Constants::si();
        } else if (*v == "natural") {
            s.constants = Constants::natural();
            s.natural_units = true;
        } else {
            km.fail("constants", "constants must be SI or natural");
        }
    }

    if (const auto v = km.take("metric")) {
        if (*v == "minkowski") s.metric = MetricTag::Minkowski;
        else if (*v == "rindler") s.metric = MetricTag::Rindler;
        else if (*v == "weakfield") s.metric = MetricTag::WeakField;
        else km.fail("metric", "metric must be minkowski, rindler or weakfield");
    }

    if (const auto v = km.take("branches")) {
        if (*v == "fixed_heights") s.branches = BranchPreset::FixedHeights;
        else if (*v == "freefall_rindler") s.branches = BranchPreset::FreefallRindler;
        else km.fail("branches", "branches must be fixed_heights or freefall_rindler");
    }

    s.g = km.take_double("g_m_s2", 9.8);
    s.delta_x = km.take_double("delta_x_m", 0.0);
    s.x0 = km.take_double("x0_m", 0.0);
    s.mass = km.take_double("mass_kg", 1.0);
    if (!(s.g > 0.0)) km.fail("g_m_s2", "g_m_s2 must be positive");
    if (s.delta_x < 0.0) km.fail("delta_x_m", "delta_x_m must be nonnegative");
    if (!(s.mass > 0.0)) km.fail("mass_kg", "mass_kg must be positive");

    const auto internal_kind = km.take("internal");
    if (!internal_kind)
        throw ParseError(source + ": missing required key 'internal'");
    if (*internal_kind == "two_level") {
        s.internal_model = InternalModel::TwoLevel;
        s.omega = km.require_double("omega_rad_s");
        s.p_excited = km.take_double("p_excited", 0.5);
    } else if (*internal_kind == "einstein") {
        s.internal_model = InternalModel::Einstein;
        s.omega = km.require_double("omega_rad_s");
        s.einstein_n = km.require_size("einstein_n");
        s.temperature = km.require_double("temperature_K");
        s.n_max = km.require_size("n_max");
        if (s.einstein_n < 1) km.fail("einstein_n", "einstein_n must be >= 1");
        if (s.n_max < 1) km.fail("n_max", "n_max must be >= 1");
    } else if (*internal_kind == "table") {
        s.internal_model = InternalModel::Table;
        const auto p = km.take("spectrum_file");
        if (!p)
            throw ParseError(source + ": internal = table needs spectrum_file");
        std::filesystem::path sp(*p);
        if (sp.is_relative()) sp = base_dir / sp;
        s.spectrum_path = sp.string();
        // Eager load: referenced files must exist and validate at parse time.
        s.table_spectrum = internal::read_spectrum_table(s.spectrum_path);
    } else {
        km.fail("internal", "internal must be two_level, einstein or table");
    }

    s.grid.t_start = km.take_double("grid_t_start_s", 0.0);
    s.grid.t_end = km.require_double("grid_t_end_s");
    s.grid.points = km.require_size("grid_points");
    if (s.grid.points < 2) km.fail("grid_points", "grid_points must be >= 2");
    if (s.grid.t_start < 0.0)
        km.fail("grid_t_start_s", "grid_t_start_s must be >= 0");
    if (!(s.grid.t_end > s.grid.t_start))
        km.fail("grid_t_end_s", "grid_t_end_s must exceed grid_t_start_s");

    s.t_final = km.take_double_opt("t_final_s");
    if (s.t_final && !(*s.t_final >= 0.0))
        km.fail("t_final_s", "t_final_s must be >= 0");

    if (const auto v = km.take("evolve_method")) {
        if (*v == "exact") s.evolve_method = EvolveMethod::Exact;
        else if (*v == "born") s.evolve_method = EvolveMethod::Born;
        else km.fail("evolve_method", "evolve_method must be exact or born");
    }

    if (const auto v = km.take("bath")) {
        if (*v == "time_dilation") s.bath = BathKind::TimeDilation;
        else if (*v == "quantum_brownian") s.bath = BathKind::QuantumBrownian;
        else km.fail("bath", "bath must be time_dilation or quantum_brownian");
    }

    s.born_steps = km.take_size("born_steps", 4096);
    if (s.evolve_method == EvolveMethod::Born) {
        if (s.born_steps < 16 || s.born_steps % 2 != 0)
            km.fail("born_steps", "born_steps must be even and >= 16");
        if (s.born_steps % (s.grid.points - 1) != 0)
            km.fail("born_steps",
                    "born_steps must be a multiple of grid_points - 1 so the "
                    "trajectory lands on the output grid");
        if (s.grid.t_start != 0.0)
            km.fail("grid_t_start_s", "born evolution starts at t = 0");
    }

    if (s.bath == BathKind::QuantumBrownian) {
        s.qbm_mass = km.require_double("qbm_mass_kg");
        s.qbm_gamma = km.require_double("qbm_gamma_1_s");
        s.qbm_temperature = km.require_double("qbm_temperature_K");
        if (!(s.qbm_mass > 0.0) || !(s.qbm_gamma > 0.0) || !(s.qbm_temperature > 0.0))
            km.fail("qbm_mass_kg", "quantum_brownian parameters must be positive");
    }

    if (const auto v = km.take("outputs")) {
        for (const auto& item : detail::split_list(*v)) {
            OutputKind kind;
            if (item == "visibility_csv") kind = OutputKind::VisibilityCsv;
            else if (item == "trajectory_csv") kind = OutputKind::TrajectoryCsv;
            else if (item == "report_json") kind = OutputKind::ReportJson;
            else km.fail("outputs", "unknown output '" + item + "'");
            if (std::find(s.outputs.begin(), s.outputs.end(), kind) ==
                s.outputs.end())
                s.outputs.push_back(kind);
        }
    }

    km.reject_unused();
    return s;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f)
        throw MissingFile("cannot open scenario file: " + path.string());
    return parse_scenario(f, path.string(), path.parent_path());
}

// --- model assembly -------------------------------------------------------

inline coherence::DeltaTauLaw law_of(const Scenario& s) {
    switch (s.branches) {
    case BranchPreset::FixedHeights:
        return coherence::DeltaTauLaw::fixed_heights(s.g, s.delta_x);
    case BranchPreset::FreefallRindler:
        return coherence::DeltaTauLaw::free_fall_rindler(s.g, s.delta_x);
    }
    throw ValidationError("unreachable branch preset");
}

inline internal::InternalSpectrum spectrum_of(const Scenario& s) {
    switch (s.internal_model) {
    case InternalModel::TwoLevel:
        return internal::two_level(s.omega, s.p_excited, s.constants);
    case InternalModel::Einstein:
        return internal::einstein_spectrum({s.einstein_n, s.omega, s.temperature},
                                           s.n_max, s.constants);
    case InternalModel::Table:
        return *s.table_spectrum;
    }
    throw ValidationError("unreachable internal model");
}

// --- run products ----------------------------------------------------------

struct ProperTimeResult {
    std::vector<double> times;
    std::vector<double> delta_taus;
};

inline ProperTimeResult run_propertime(const Scenario& s) {
    const auto law = law_of(s);
    ProperTimeResult out;
    out.times = s.grid.times();
    out.delta_taus.reserve(out.times.size());
    for (double t : out.times)
        out.delta_taus.push_back(law.eval(t, s.constants));
    return out;
}

inline coherence::VisibilityCurve run_visibility(const Scenario& s) {
    const auto law = law_of(s);
    const auto spec = spectrum_of(s);
    return coherence::visibility_curve(spec, law, s.grid.times(), s.constants);
}

struct TrajectoryResult {
    std::vector<double> times;
    std::vector<std::complex<double>> offdiag;
    std::vector<double> visibility;
    std::vector<double> trace_error;
    bool step_size_too_coarse = false;
};

namespace detail {

inline dynamics::HamiltonianSpec hamiltonian_of(const Scenario& s,
                                                const internal::InternalSpectrum& sp) {
    if (s.branches != BranchPreset::FixedHeights)
        throw InapplicableParameter(
            "joint evolution supports fixed-heights branches only; free-fall "
            "branches have no static coupling");
    dynamics::HamiltonianSpec h{s.mass, sp, {}};
    // Two branches a height delta_x apart in the uniform field Phi = g x.
    h.branches = {{s.g * s.x0, 0.0, s.x0, 0.0},
                  {s.g * (s.x0 + s.delta_x), 0.0, s.x0 + s.delta_x, 0.0}};
    return h;
}

} // namespace detail

inline TrajectoryResult run_evolve(const Scenario& s) {
    const auto sp = spectrum_of(s);
    const auto ham = detail::hamiltonian_of(s, sp);
    TrajectoryResult out;
    out.times = s.grid.times();

    if (s.evolve_method == EvolveMethod::Exact) {
        const double r = 1.0 / std::sqrt(2.0);
        const auto st0 = dynamics::initial_superposition({{r, 0.0}, {r, 0.0}}, sp);
        for (double t : out.times) {
            const auto st = dynamics::evolve_exact(ham, st0, t - out.times.front(),
                                                   s.constants);
            const auto red = dynamics::trace_out_internal(st);
            out.offdiag.push_back(red(0, 1));
            out.visibility.push_back(
                std::clamp(2.0 * std::abs(red(0, 1)), 0.0, 1.0));
            out.trace_error.push_back(
                std::abs((red(0, 0) + red(1, 1)) - std::complex<double>(1.0, 0.0)));
        }
        return out;
    }

    dynamics::BathModel bath =
        s.bath == BathKind::TimeDilation
            ? dynamics::BathModel::time_dilation(
                  std::sqrt(internal::energy_variance(sp)))
            : dynamics::BathModel::quantum_brownian(s.qbm_mass, s.qbm_gamma,
                                                    s.qbm_temperature);
    Eigen::MatrixXcd rho0(2, 2);
    rho0 << 0.5, 0.5, 0.5, 0.5;
    const auto traj = dynamics::evolve_master_born(bath, ham, rho0, s.grid.t_end,
                                                   s.born_steps, s.constants);
    out.step_size_too_coarse = traj.step_size_too_coarse;
    const std::size_t stride = s.born_steps / (s.grid.points - 1);
    for (std::size_t i = 0; i < s.grid.points; ++i) {
        const auto& rho = traj.states[i * stride];
        out.offdiag.push_back(rho(0, 1));
        out.visibility.push_back(std::clamp(2.0 * std::abs(rho(0, 1)), 0.0, 1.0));
        out.trace_error.push_back(
            std::abs(rho.trace() - std::complex<double>(1.0, 0.0)));
    }
    return out;
}

struct FramesResult {
    double t_final = 0.0;
    double delta_tau_closed = 0.0;  // Rindler-side closed form
    double delta_tau_routed = 0.0;  // Minkowski-side integration, same cut
    double residual_rel = 0.0;
    double delta_tau_minkowski_cut = 0.0; // equal-Minkowski-time cut: 0
    // Doubles resolve the routed difference only down to eps * tau. When the
    // closed-form split sits below that floor (SI micron separations do by
    // many orders), the cross-check carries no information and says so.
    double resolution_floor = 0.0;
    bool resolvable = true;
};

inline FramesResult run_frames(const Scenario& s) {
    const double t_f = s.frames_cut_time();
    const Constants& k = s.constants;
    FramesResult out;
    out.t_final = t_f;
    out.delta_tau_closed =
        geometry::delta_tau_freefall_in_rindler(s.delta_x, t_f, s.g, k);

    // The same two free-falling world lines, described as inertial lines in
    // the Minkowski chart and cut at equal lab (Rindler) time.
    const auto metric = geometry::Metric::minkowski();
    const auto line_a = geometry::WorldLine::at_rest(s.x0, 0.0, t_f * 2.0 + 1.0);
    const auto line_b =
        geometry::WorldLine::at_rest(s.x0 + s.delta_x, 0.0, t_f * 2.0 + 1.0);
    geometry::BranchPair pair;
    pair.branch_a = line_a;
    pair.branch_b = line_b;
    pair.frame = geometry::MeasurementFrame::LabRindler;
    pair.t_final = t_f;
    pair.frame_g = s.g;
    const auto routed = geometry::delta_tau(metric, pair, k);
    out.delta_tau_routed = routed.delta_tau;
    out.resolution_floor =
        std::numeric_limits<double>::epsilon() *
        std::max({std::abs(routed.tau_a), std::abs(routed.tau_b), t_f});
    out.resolvable =
        std::abs(out.delta_tau_closed) > 64.0 * out.resolution_floor;
    const double scale = std::max(std::abs(out.delta_tau_closed),
                                  std::abs(out.delta_tau_routed));
    out.residual_rel =
        scale > 0.0
            ? std::abs(out.delta_tau_closed - out.delta_tau_routed) / scale
            : 0.0;

    geometry::BranchPair flat = pair;
    flat.frame = geometry::MeasurementFrame::FreeFallMinkowski;
    out.delta_tau_minkowski_cut = geometry::delta_tau(metric, flat, k).delta_tau;
    return out;
}

struct ScanRow {
    double value = 0.0;
    double t = 0.0;
    double visibility = 0.0;
};

struct ScanResult {
    std::string parameter;
    std::vector<ScanRow> rows;
};

inline ScanResult run_scan(const Scenario& s, const std::string& parameter,
                           std::vector<double> values) {
    const bool einstein = s.internal_model == InternalModel::Einstein;
    const bool two_level = s.internal_model == InternalModel::TwoLevel;
    if (parameter != "delta_x" && parameter != "N" && parameter != "T" &&
        parameter != "omega")
        throw ValidationError("unknown scan parameter '" + parameter +
                              "' (expected delta_x, N, T or omega)");
    if (parameter == "N" && !einstein)
        throw InapplicableParameter("N scans need an einstein internal model");
    if (parameter == "T" && !einstein)
        throw InapplicableParameter("T scans need an einstein internal model");
    if (parameter == "omega" && !(einstein || two_level))
        throw InapplicableParameter("omega scans need a parametric internal model");

    std::sort(values.begin(), values.end());
    ScanResult out;
    out.parameter = parameter;
    const auto times = s.grid.times();
    for (double v : values) {
        Scenario run = s;
        if (parameter == "delta_x") {
            if (v < 0.0)
                throw ValidationError("delta_x scan values must be nonnegative");
            run.delta_x = v;
        } else if (parameter == "N") {
            if (v < 1.0 || v != std::floor(v))
                throw ValidationError("N scan values must be positive integers");
            run.einstein_n = static_cast<std::size_t>(v);
        } else if (parameter == "T") {
            run.temperature = v;
        } else {
            run.omega = v;
        }
        const auto curve = coherence::visibility_curve(
            spectrum_of(run), law_of(run), times, run.constants);
        for (std::size_t i = 0; i < times.size(); ++i)
            out.rows.push_back({v, curve.times[i], curve.values[i]});
    }
    return out;
}

// --- report ----------------------------------------------------------------

struct Report {
    std::string scenario;
    std::string law_kind;
    double g = 0.0;
    double delta_x = 0.0;
    std::optional<double> law_rate;
    double delta_h0 = 0.0;
    std::optional<double> tau_dec;
    std::optional<double> tau_dec_fit;
    std::optional<coherence::RevivalResult> revival;
    std::optional<FramesResult> frames;
    bool pn_guard = false;
    bool step_size_too_coarse = false;
};

inline Report run_report(const Scenario& s) {
    Report r;
    r.scenario = s.name;
    r.law_kind = s.branches == BranchPreset::FixedHeights ? "fixed_heights"
                                                          : "freefall_rindler";
    r.g = s.g;
    r.delta_x = s.delta_x;
    const auto law = law_of(s);
    if (law.linear()) r.law_rate = law.linear_rate(s.constants);

    const auto spec = spectrum_of(s);
    r.delta_h0 = std::sqrt(internal::energy_variance(spec));
    if (r.delta_h0 > 0.0 && s.delta_x > 0.0)
        r.tau_dec = coherence::decoherence_time(r.delta_h0, s.g, s.delta_x,
                                                s.constants);

    if (law.linear())
        r.revival = coherence::revival_time(spec, law, s.constants);

    // Gaussian fit on the scenario grid; reported only if the window holds
    // enough usable points.
    const auto curve = coherence::visibility_curve(spec, law, s.grid.times(),
                                                   s.constants);
    try {
        const auto fit = coherence::fit_gaussian_decay(curve.times, curve.values);
        if (fit.tau_dec > 0.0) r.tau_dec_fit = fit.tau_dec;
    } catch (const ValidationError&) {
        // grid does not resolve the early decay; leave the field empty
    }

    if (s.delta_x > 0.0) r.frames = run_frames(s);
    return r;
}

inline nlohmann::ordered_json report_json(const Report& r) {
    nlohmann::ordered_json j;
    j["scenario"] = r.scenario;
    j["law"]["kind"] = r.law_kind;
    j["law"]["g_m_s2"] = r.g;
    j["law"]["delta_x_m"] = r.delta_x;
    if (r.law_rate) j["law"]["rate"] = *r.law_rate;
    else j["law"]["rate"] = nullptr;
    j["delta_h0_J"] = r.delta_h0;
    if (r.tau_dec) j["tau_dec_s"] = *r.tau_dec;
    else j["tau_dec_s"] = nullptr;
    if (r.tau_dec_fit) j["tau_dec_fit_s"] = *r.tau_dec_fit;
    else j["tau_dec_fit_s"] = nullptr;
    if (r.revival) {
        j["revival"]["periodic"] = r.revival->periodic;
        if (r.revival->periodic && r.revival->t_rev > 0.0)
            j["revival"]["t_rev_s"] = r.revival->t_rev;
        else if (r.revival->periodic)
            j["revival"]["t_rev_s"] = 0.0;
        else
            j["revival"]["t_rev_s"] = nullptr;
    } else {
        j["revival"] = nullptr;
    }
    if (r.frames) {
        j["frame_invariance"]["t_final_s"] = r.frames->t_final;
        j["frame_invariance"]["delta_tau_closed_s"] = r.frames->delta_tau_closed;
        j["frame_invariance"]["resolvable"] = r.frames->resolvable;
        j["frame_invariance"]["resolution_floor_s"] = r.frames->resolution_floor;
        if (r.frames->resolvable) {
            j["frame_invariance"]["delta_tau_routed_s"] = r.frames->delta_tau_routed;
            j["frame_invariance"]["residual_rel"] = r.frames->residual_rel;
        } else {
            j["frame_invariance"]["delta_tau_routed_s"] = nullptr;
            j["frame_invariance"]["residual_rel"] = nullptr;
        }
        j["frame_invariance"]["delta_tau_minkowski_cut_s"] =
            r.frames->delta_tau_minkowski_cut;
    } else {
        j["frame_invariance"] = nullptr;
    }
    j["guards"]["pn_guard"] = r.pn_guard;
    j["guards"]["step_size_too_coarse"] = r.step_size_too_coarse;
    return j;
}

// --- file emission ---------------------------------------------------------

namespace detail {

// Content is assembled fully in memory first, then written through a
// temporary and renamed into place: a failed run never leaves partial files.
inline void atomic_write(const std::filesystem::path& path,
                         const std::string& content) {
    std::error_code ec;
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path(), ec);
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f)
            throw IoError("cannot open for writing: " + tmp.string());
        f << content;
        if (!f)
            throw IoError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw IoError("cannot move " + tmp.string() + " into place: " +
                      ec.message());
}

} // namespace detail

inline void write_propertime_csv(const std::filesystem::path& path,
                                 const ProperTimeResult& r) {
    std::string out = "t_s,delta_tau_s\n";
    for (std::size_t i = 0; i < r.times.size(); ++i)
        out += fmt17(r.times[i]) + "," + fmt17(r.delta_taus[i]) + "\n";
    detail::atomic_write(path, out);
}

inline void write_visibility_csv(const std::filesystem::path& path,
                                 const coherence::VisibilityCurve& c) {
    std::string out = "t_s,delta_tau_s,visibility\n";
    for (std::size_t i = 0; i < c.times.size(); ++i)
        out += fmt17(c.times[i]) + "," + fmt17(c.delta_taus[i]) + "," +
               fmt17(c.values[i]) + "\n";
    detail::atomic_write(path, out);
}

inline void write_trajectory_csv(const std::filesystem::path& path,
                                 const TrajectoryResult& r) {
    std::string out = "t_s,re_offdiag,im_offdiag,visibility,trace_error\n";
    for (std::size_t i = 0; i < r.times.size(); ++i)
        out += fmt17(r.times[i]) + "," + fmt17(r.offdiag[i].real()) + "," +
               fmt17(r.offdiag[i].imag()) + "," + fmt17(r.visibility[i]) + "," +
               fmt17(r.trace_error[i]) + "\n";
    detail::atomic_write(path, out);
}

inline void write_scan_csv(const std::filesystem::path& path,
                           const ScanResult& r) {
    std::string out = "param,value,t_s,visibility\n";
    for (const auto& row : r.rows)
        out += r.parameter + "," + fmt17(row.value) + "," + fmt17(row.t) + "," +
               fmt17(row.visibility) + "\n";
    detail::atomic_write(path, out);
}

inline void write_report_json(const std::filesystem::path& path,
                              const Report& r) {
    detail::atomic_write(path, report_json(r).dump(2) + "\n");
}

} // namespace qclock::scenario
