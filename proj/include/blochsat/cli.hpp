#pragma once

// Command-line front end. Subcommands mirror the experiments: synthesize
// (optimal schedule + replayed trajectory + summary), sweep (duration ratio
// across amplitudes), fieldmap (dr_dot/dtheta grid and singular lines),
// switching-curve, and asymptote. Flags override config keys. Exit codes:
// 0 success, 2 usage/config error, 3 unreachable target.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "blochsat/config.hpp"
#include "blochsat/io.hpp"
#include "blochsat/synthesis.hpp"

namespace blochsat::cli {

namespace detail {

inline std::string out_path(const RunConfig& cfg, const std::string& name) {
    std::filesystem::create_directories(cfg.output_dir);
    return (std::filesystem::path(cfg.output_dir) / name).string();
}

inline nlohmann::ordered_json schedule_json(const ControlSchedule& sched,
                                            const std::string& hash) {
    nlohmann::ordered_json j;
    j["version"] = kVersion;
    j["config_hash"] = hash;
    j["params"] = {{"t1_ms", sched.physical.t1_s * 1e3},
                   {"t2_ms", sched.physical.t2_s * 1e3},
                   {"omega_max_hz", sched.physical.omega_max_hz},
                   {"big_gamma", sched.normalized.big_gamma},
                   {"small_gamma", sched.normalized.small_gamma},
                   {"u_max", sched.normalized.u_max}};
    nlohmann::ordered_json arcs = nlohmann::ordered_json::array();
    for (const Arc& a : sched.arcs) {
        nlohmann::ordered_json ja;
        ja["kind"] = to_string(a.kind);
        if (a.feedback)
            ja["u"] = "singular-feedback";
        else
            ja["u"] = a.u;
        ja["duration_tau"] = a.duration_tau;
        ja["duration_ms"] = seconds_from_tau(a.duration_tau, sched.physical) * 1e3;
        ja["start"] = {a.start.y, a.start.z};
        ja["end"] = {a.end.y, a.end.z};
        arcs.push_back(ja);
    }
    j["arcs"] = arcs;
    j["total_tau"] = sched.total_tau;
    j["total_seconds"] = sched.total_seconds;
    return j;
}

inline void write_trajectory_csv(const std::string& path, const ControlSchedule& sched,
                                 const Trajectory& traj, const std::string& hash) {
    TextFile f(path);
    f.raw(file_banner(hash));
    f.line("tau,t_ms,y,z,u,arc_kind");
    for (const auto& smp : traj.samples) {
        const char* kind =
            (smp.arc >= 0 && smp.arc < static_cast<int>(sched.arcs.size()))
                ? to_string(sched.arcs[static_cast<std::size_t>(smp.arc)].kind)
                : "none";
        f.line(fmt_double(smp.tau) + "," +
               fmt_double(seconds_from_tau(smp.tau, sched.physical) * 1e3) + "," +
               fmt_double(smp.state.y) + "," + fmt_double(smp.state.z) + "," +
               fmt_double(smp.u) + "," + kind);
    }
    f.write();
}

}  // namespace detail

inline int cmd_synthesize(const RunConfig& cfg) {
    const PhysicalParams p = to_physical(cfg);
    SynthesisOptions sopt;
    sopt.tol = cfg.tol;
    const ControlSchedule sched = synthesize_optimal(p, sopt);
    const ControlSchedule ir = inversion_recovery(p, IrOptions{cfg.tol});
    const Trajectory traj = simulate_schedule(sched, PlanarState{0.0, 1.0},
                                              SimulateOptions{cfg.tol, 0.0});
    const std::string hash = config_hash(cfg);

    TextFile sched_file(detail::out_path(cfg, "schedule.json"));
    sched_file.raw(detail::schedule_json(sched, hash).dump(2));
    sched_file.raw("\n");
    sched_file.write();

    detail::write_trajectory_csv(detail::out_path(cfg, "trajectory.csv"), sched, traj, hash);

    const double gain = 100.0 * (ir.total_seconds - sched.total_seconds) / ir.total_seconds;
    TextFile summary(detail::out_path(cfg, "summary.txt"));
    summary.raw(file_banner(hash));
    summary.line("t_opt_tau=" + fmt_double(sched.total_tau));
    summary.line("t_opt_ms=" + fmt_double(sched.total_seconds * 1e3));
    summary.line("t_ir_tau=" + fmt_double(ir.total_tau));
    summary.line("t_ir_ms=" + fmt_double(ir.total_seconds * 1e3));
    summary.line("gain_percent=" + fmt_double(gain));
    summary.line("arcs=" + sched.arc_summary());
    summary.write();

    std::cout << "t_opt_ms=" << fmt_double(sched.total_seconds * 1e3)
              << " t_ir_ms=" << fmt_double(ir.total_seconds * 1e3)
              << " gain_percent=" << fmt_double(gain) << "\n";
    return 0;
}

inline int cmd_sweep(const RunConfig& cfg, const std::vector<double>& omegas) {
    if (omegas.empty()) throw invalid_params("sweep requires at least one amplitude");
    const PhysicalParams base = to_physical(cfg);
    const std::vector<SweepRow> rows = sweep_ratio(base, omegas, SweepOptions{cfg.tol, false});
    const std::string hash = config_hash(cfg);

    TextFile f(detail::out_path(cfg, "sweep.csv"));
    f.raw(file_banner(hash));
    if (base.t1_s > base.t2_s) {
        const Asymptotics a = asymptotic_times(base.t1_s, base.t2_s);
        f.line("# asymptote t_opt_inf_s=" + fmt_double(a.t_opt_inf_s) +
               " t_ir_inf_s=" + fmt_double(a.t_ir_inf_s) +
               " ratio_inf=" + fmt_double(a.ratio_inf));
    } else {
        f.line("# asymptote undefined (t1 <= t2)");
    }
    f.line("omega_hz,t_opt_s,t_ir_s,ratio,reachable");
    for (const SweepRow& r : rows)
        f.line(fmt_double(r.omega_hz) + "," + fmt_double(r.t_opt_s) + "," +
               fmt_double(r.t_ir_s) + "," + fmt_double(r.ratio) + "," +
               (r.reachable ? "1" : "0"));
    f.write();
    return 0;
}

inline int cmd_fieldmap(const RunConfig& cfg) {
    const PhysicalParams p = to_physical(cfg);
    const NormalizedParams n = normalize(p);
    const FieldMap map = field_map(n, cfg.grid_n);
    const double y_min = admissibility_bound(n);
    const std::string hash = config_hash(cfg);

    auto class_name = [](int c) { return c == 1 ? "min" : (c == 0 ? "max" : "none"); };

    TextFile grid(detail::out_path(cfg, "fieldmap.csv"));
    grid.raw(file_banner(hash));
    grid.line("y,z,dr_dot_dtheta,det_f1v,on_singular,classification");
    for (const FieldMapCell& c : map.cells)
        grid.line(fmt_double(c.y) + "," + fmt_double(c.z) + "," +
                  fmt_double(c.dr_dot_dtheta) + "," + fmt_double(c.det_f1v) + "," +
                  (c.on_singular ? "1" : "0") + "," + class_name(c.classification));
    grid.write();

    const double step = 2.0 / (cfg.grid_n - 1);
    TextFile horiz(detail::out_path(cfg, "singular_horizontal.csv"));
    horiz.raw(file_banner(hash));
    horiz.line("y,z,admissible,classification");
    for (int i = 0; i < cfg.grid_n; ++i) {
        const double y = -1.0 + step * i;
        const PlanarState s{y, map.z0};
        const char* cls =
            s.radius() < 1e-14
                ? "none"
                : (classify_singular_point(s, n) == Classification::time_minimizing ? "min"
                                                                                    : "max");
        horiz.line(fmt_double(y) + "," + fmt_double(map.z0) + "," +
                   (std::abs(y) >= y_min ? "1" : "0") + "," + cls);
    }
    horiz.write();

    TextFile vert(detail::out_path(cfg, "singular_vertical.csv"));
    vert.raw(file_banner(hash));
    vert.line("y,z,classification");
    for (int j = 0; j < cfg.grid_n; ++j) {
        const double z = -1.0 + step * j;
        const PlanarState s{0.0, z};
        const char* cls =
            s.radius() < 1e-14
                ? "none"
                : (classify_singular_point(s, n) == Classification::time_minimizing ? "min"
                                                                                    : "max");
        vert.line("0," + fmt_double(z) + "," + cls);
    }
    vert.write();
    return 0;
}

inline int cmd_switching_curve(const RunConfig& cfg) {
    const PhysicalParams p = to_physical(cfg);
    const NormalizedParams n = normalize(p);
    OdeOptions opt;
    opt.rtol = cfg.tol;
    const SwitchingCurve curve =
        trace_switching_curve(n, default_switching_seeds(n), 10.0, opt);
    const std::string hash = config_hash(cfg);

    TextFile f(detail::out_path(cfg, "switching_curve.csv"));
    f.raw(file_banner(hash));
    f.line("# emanation_point=" + fmt_double(curve.emanation_point.y) + "," +
           fmt_double(curve.emanation_point.z));
    for (const double s : curve.skipped_seeds)
        f.line("# skipped_seed=" + fmt_double(s));
    f.line("seed_y,switch_y,switch_z,tau_to_switch");
    for (const auto& pt : curve.points)
        f.line(fmt_double(pt.seed_y) + "," + fmt_double(pt.state.y) + "," +
               fmt_double(pt.state.z) + "," + fmt_double(pt.tau_to_switch));
    f.write();
    return 0;
}

inline int cmd_asymptote(const RunConfig& cfg) {
    const PhysicalParams p = to_physical(cfg);
    const Asymptotics a = asymptotic_times(p.t1_s, p.t2_s);
    const std::string hash = config_hash(cfg);

    TextFile f(detail::out_path(cfg, "asymptote.txt"));
    f.raw(file_banner(hash));
    f.line("t_opt_inf_s=" + fmt_double(a.t_opt_inf_s));
    f.line("t_ir_inf_s=" + fmt_double(a.t_ir_inf_s));
    f.line("ratio_inf=" + fmt_double(a.ratio_inf));
    f.write();

    std::cout << "t_opt_inf_s=" << fmt_double(a.t_opt_inf_s)
              << " t_ir_inf_s=" << fmt_double(a.t_ir_inf_s)
              << " ratio_inf=" << fmt_double(a.ratio_inf) << "\n";
    return 0;
}

namespace detail {

inline std::vector<double> parse_omega_range(const std::string& range) {
    const auto c1 = range.find(':');
    const auto c2 = range.find(':', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
        throw invalid_params("malformed --omega-range, expected LO:HI:N");
    double lo = 0.0, hi = 0.0;
    long count = 0;
    try {
        std::size_t used = 0;
        lo = std::stod(range.substr(0, c1), &used);
        hi = std::stod(range.substr(c1 + 1, c2 - c1 - 1), &used);
        count = std::stol(range.substr(c2 + 1), &used);
    } catch (const std::exception&) {
        throw invalid_params("malformed --omega-range, expected LO:HI:N");
    }
    if (!(lo > 0.0) || hi < lo || count < 1)
        throw invalid_params("malformed --omega-range: need 0 < LO <= HI and N >= 1");
    std::vector<double> omegas;
    omegas.reserve(static_cast<std::size_t>(count));
    if (count == 1) {
        omegas.push_back(lo);
    } else {
        for (long i = 0; i < count; ++i)
            omegas.push_back(lo + (hi - lo) * static_cast<double>(i) /
                                      static_cast<double>(count - 1));
    }
    return omegas;
}

}  // namespace detail

/// Entry point shared by the binary and the in-process tests.
inline int run(const std::vector<std::string>& args) {
    CLI::App app{"time-optimal saturation of a dissipative spin-1/2"};
    app.require_subcommand(1);

    struct Common {
        std::string config_path;
        double omega = -1.0;
        double tol = -1.0;
        int grid = -1;
        std::string out;
        std::string omega_range;
    } c;

    auto add_common = [&](CLI::App* sub, bool with_range) {
        sub->add_option("--config", c.config_path, "path to the JSON run config")->required();
        sub->add_option("--omega", c.omega, "override omega_max_hz [Hz]");
        sub->add_option("--tol", c.tol, "override integration tolerance");
        sub->add_option("--grid", c.grid, "override field-map grid size");
        sub->add_option("--out", c.out, "override output directory");
        if (with_range)
            sub->add_option("--omega-range", c.omega_range, "sweep amplitudes LO:HI:N [Hz]");
    };

    CLI::App* synthesize = app.add_subcommand("synthesize", "optimal schedule + trajectory");
    CLI::App* sweep = app.add_subcommand("sweep", "duration ratio across amplitudes");
    CLI::App* fieldmap = app.add_subcommand("fieldmap", "dr_dot/dtheta grid and singular lines");
    CLI::App* curve = app.add_subcommand("switching-curve", "trace the switching curve");
    CLI::App* asymptote = app.add_subcommand("asymptote", "large-amplitude closed forms");
    add_common(synthesize, false);
    add_common(sweep, true);
    add_common(fieldmap, false);
    add_common(curve, false);
    add_common(asymptote, false);

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        RunConfig cfg = load_config(c.config_path);
        if (c.omega > 0.0) cfg.omega_max_hz = c.omega;
        if (c.tol > 0.0) cfg.tol = c.tol;
        if (c.grid > 0) cfg.grid_n = c.grid;
        if (!c.out.empty()) cfg.output_dir = c.out;
        validate(cfg);

        if (synthesize->parsed()) return cmd_synthesize(cfg);
        if (fieldmap->parsed()) return cmd_fieldmap(cfg);
        if (curve->parsed()) return cmd_switching_curve(cfg);
        if (asymptote->parsed()) return cmd_asymptote(cfg);
        if (sweep->parsed()) {
            std::vector<double> omegas;
            if (!c.omega_range.empty())
                omegas = detail::parse_omega_range(c.omega_range);
            else if (c.omega > 0.0)
                omegas.push_back(c.omega);
            else
                throw invalid_params("sweep requires --omega or --omega-range");
            return cmd_sweep(cfg, omegas);
        }
        throw invalid_params("no subcommand given");
    } catch (const unreachable_error& e) {
        std::cerr << "unreachable: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

inline int run(int argc, const char* const* argv) {
    std::vector<std::string> args;
    args.reserve(static_cast<std::size_t>(argc > 0 ? argc - 1 : 0));
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args);
}

}  // namespace blochsat::cli
