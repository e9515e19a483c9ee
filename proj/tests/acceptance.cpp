// Acceptance suite: one line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "blochsat/cli.hpp"
#include "blochsat/synthesis.hpp"

using namespace blochsat;
namespace fs = std::filesystem;

namespace {

const PhysicalParams kReference{0.740, 0.060, 32.3};

struct Check {
    std::vector<std::string> failures;

    void expect(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
    void expect_near(double got, double want, double tol, const std::string& what) {
        if (!(std::abs(got - want) <= tol)) {
            std::ostringstream ss;
            ss << what << " (got " << got << ", want " << want << " +- " << tol << ")";
            failures.push_back(ss.str());
        }
    }
};

double elapsed_s(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// --- criterion bodies -------------------------------------------------------

void criterion_durations(Check& c) {
    const auto t0 = std::chrono::steady_clock::now();
    const ControlSchedule opt = synthesize_optimal(kReference);
    const ControlSchedule ir = inversion_recovery(kReference);
    const double wall = elapsed_s(t0);

    const double t_opt_ms = opt.total_seconds * 1e3;
    const double t_ir_ms = ir.total_seconds * 1e3;
    const double gain = 100.0 * (t_ir_ms - t_opt_ms) / t_ir_ms;
    c.expect_near(t_opt_ms, 202.0, 5.0, "T_opt [ms]");
    c.expect_near(t_ir_ms, 478.0, 10.0, "T_IR [ms]");
    c.expect_near(gain, 58.0, 2.0, "gain [%]");
    c.expect(wall < 1.0, "runtime under 1 s");
}

void criterion_normalization(Check& c) {
    const NormalizedParams n = normalize(kReference);
    c.expect_near(1.0 / n.small_gamma, 23.9, 0.1, "1/gamma");
    c.expect_near(1.0 / n.big_gamma, 1.94, 0.01, "1/Gamma");
}

void criterion_asymptotics(Check& c) {
    const Asymptotics a = asymptotic_times(0.740, 0.060);
    c.expect_near(a.ratio_inf, 0.389, 0.001, "limit ratio");
    const double t_ir_exact = 0.740 * std::log(2.0);
    c.expect(std::abs(a.t_ir_inf_s / t_ir_exact - 1.0) <= 1e-12,
             "T_IR_inf equals T1*ln 2 to 1e-12 relative");
}

void criterion_sweep(Check& c) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<double> omegas;
    const int count = 50;
    for (int i = 0; i < count; ++i)
        omegas.push_back(2.0 * std::pow(500.0 / 2.0, static_cast<double>(i) / (count - 1)));
    const std::vector<SweepRow> rows = sweep_ratio(kReference, omegas);

    bool monotone = true;
    double prev_ratio = 2.0;
    double max_ratio = 0.0, max_ratio_omega = 0.0;
    int reachable = 0;
    double first_reachable_omega = -1.0;
    for (const SweepRow& r : rows) {
        if (!r.reachable) continue;
        ++reachable;
        if (first_reachable_omega < 0.0) first_reachable_omega = r.omega_hz;
        if (r.ratio > prev_ratio + 1e-3) monotone = false;
        if (r.ratio > max_ratio) {
            max_ratio = r.ratio;
            max_ratio_omega = r.omega_hz;
        }
        prev_ratio = r.ratio;
    }
    c.expect(reachable >= 40, "most amplitudes synthesize");
    c.expect(monotone, "ratio decreases monotonically (1e-3 noise)");
    c.expect(max_ratio_omega == first_reachable_omega,
             "ratio is largest adjacent to the reachability threshold");
    c.expect(max_ratio >= 0.7, "near-threshold ratio approaches 1 from below");
    c.expect_near(rows.back().ratio, 0.389, 0.02, "ratio at 500 Hz");

    const double thr = reachability_threshold_hz(kReference);
    c.expect(thr >= 2.0 && thr <= 3.5, "bisected reachability threshold in [2.0, 3.5] Hz");
    c.expect(elapsed_s(t0) < 30.0, "runtime under 30 s for 50 amplitudes");
}

void criterion_structure(Check& c) {
    // The switching-curve check inside synthesize_optimal throws on any
    // crossing; it is re-run here explicitly on the replayed second bang.
    const ControlSchedule s = synthesize_optimal(kReference);
    c.expect(s.arcs.size() == 4, "exactly four arcs");
    if (s.arcs.size() == 4) {
        c.expect(s.arcs[0].kind == ArcKind::bang, "arc 1 is a bang");
        c.expect(s.arcs[1].kind == ArcKind::singular_horizontal,
                 "arc 2 follows the horizontal singular line");
        c.expect(s.arcs[2].kind == ArcKind::bang, "arc 3 is a bang");
        c.expect(s.arcs[3].kind == ArcKind::singular_vertical,
                 "arc 4 follows the vertical singular line");
    }
    const Trajectory replay = simulate_schedule(s, PlanarState{0.0, 1.0});
    const PlanarState end = replay.samples.back().state;
    c.expect(std::hypot(end.y, end.z) < 1e-6, "terminal radius below 1e-6");

    const NormalizedParams n = s.normalized;
    const SwitchingCurve curve = trace_switching_curve(n, default_switching_seeds(n));
    std::vector<PlanarState> arc3;
    for (const auto& smp : replay.samples)
        if (smp.arc == 2) arc3.push_back(smp.state);
    std::vector<PlanarState> curve_poly;
    for (const auto& pt : curve.points) curve_poly.push_back(pt.state);
    c.expect(arc3.size() > 2 && !curve_poly.empty(), "second bang and curve sampled");
    c.expect(!polylines_intersect(arc3, curve_poly),
             "second bang does not cross the switching curve");
}

void criterion_properties(Check& c) {
    const NormalizedParams n = normalize(kReference);
    const double z0 = singular_z0(n);
    const double y_min = admissibility_bound(n);

    // det(F1,V) = r * dr_dot/dtheta on 1000 random disk points.
    {
        std::mt19937 rng(2024);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        int done = 0;
        double worst = 0.0;
        while (done < 1000) {
            const PlanarState s{u(rng), u(rng)};
            if (s.radius() > 1.0 || s.radius() < 1e-9) continue;
            ++done;
            const PolarDiagnostics d = polar_diagnostics(s, n);
            worst = std::max(worst, std::abs(det_f1_v(s, n) - d.r * d.dr_dot_dtheta));
        }
        c.expect(worst < 1e-10, "det(F1,V) = r*dr_dot/dtheta on 1000 points (1e-10)");
    }

    // Singular feedback pins dz/dtau; vanishes on the vertical line; odd.
    {
        bool ok = true;
        for (double y = y_min; y <= 1.0; y += 0.01) {
            const PlanarState s{y, z0};
            if (std::abs(rhs(s, singular_control(s, n), n).z) >= 1e-10) ok = false;
        }
        for (double z = -0.9; z <= 0.9; z += 0.1)
            if (singular_control(PlanarState{0.0, z}, n) != 0.0) ok = false;
        for (double y = 0.05; y <= 0.95; y += 0.05)
            if (std::abs(singular_control(PlanarState{-y, z0}, n) +
                         singular_control(PlanarState{y, z0}, n)) > 1e-14)
                ok = false;
        c.expect(ok, "u_s pins dz/dtau, vanishes at y = 0, is odd in y");
    }

    // Admissibility bound: closed form vs feedback magnitude and bisection.
    {
        const double at_bound = std::abs(singular_control(PlanarState{y_min, z0}, n));
        const double at_neg = std::abs(singular_control(PlanarState{-y_min, z0}, n));
        c.expect(std::abs(at_bound - kTwoPi) < 1e-6 && std::abs(at_neg - kTwoPi) < 1e-6,
                 "|u_s(+-y_min, z0)| = 2*pi (1e-6)");
        double lo = 1e-6, hi = 1.0;
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            (std::abs(singular_control(PlanarState{mid, z0}, n)) > kTwoPi ? lo : hi) = mid;
        }
        c.expect(std::abs(0.5 * (lo + hi) - y_min) < 1e-6,
                 "bisection root agrees with the closed-form bound (1e-6)");
    }

    // Clock form vs integrator-measured time differences on three pairs.
    {
        bool match = true, antisym = true;
        for (const double depth : {0.12, 0.22, 0.32}) {
            const PlanarState A{0.8, z0};
            auto field_dn = [&n](double, const StateVec<2>& x, StateVec<2>& dx) {
                dx[0] = -n.big_gamma * x[0] + kTwoPi * x[1];
                dx[1] = n.small_gamma * (1.0 - x[1]) - kTwoPi * x[0];
            };
            auto field_up = [&n](double, const StateVec<2>& x, StateVec<2>& dx) {
                dx[0] = -n.big_gamma * x[0] - kTwoPi * x[1];
                dx[1] = n.small_gamma * (1.0 - x[1]) + kTwoPi * x[0];
            };
            OdeOptions oo;
            oo.sample_dt = 2e-4;
            const auto leg1 = integrate<2>(field_dn, StateVec<2>{A.y, A.z}, depth, oo);
            std::vector<Event<2>> ev{{"z0",
                                      [z0](double, const StateVec<2>& x) {
                                          return x[1] - z0;
                                      },
                                      EventDirection::rising, 0.0}};
            const auto leg2 = integrate<2>(field_up, leg1.back_state(), 5.0, oo, ev);

            Trajectory bang;
            for (const auto& smp : leg1.samples)
                bang.samples.push_back({smp.tau, PlanarState{smp.x[0], smp.x[1]}, -kTwoPi, -1});
            for (std::size_t i = 1; i < leg2.samples.size(); ++i)
                bang.samples.push_back({leg1.duration() + leg2.samples[i].tau,
                                        PlanarState{leg2.samples[i].x[0], leg2.samples[i].x[1]},
                                        kTwoPi, -1});
            const double yB = bang.samples.back().state.y;
            std::vector<PlanarEvent> sev{{"yB",
                                          [yB](double, const PlanarState& s) {
                                              return s.y - yB;
                                          },
                                          EventDirection::falling, 0.0}};
            OdeOptions so;
            so.sample_dt = 2e-4;
            const SingularArc sing =
                propagate_singular(A, SingularBranch::horizontal, sev, 100.0, n, so);
            Trajectory sing_path;
            sing_path.samples = sing.samples;

            const double cc = clock_compare(bang, sing_path, n);
            if (std::abs(cc - (bang.duration() - sing_path.duration())) >= 1e-6)
                match = false;
            if (std::abs(clock_compare(sing_path, bang, n) + cc) >= 1e-10) antisym = false;
            // The singular path is a slice of the optimal sequence; the bang
            // competitor between the same endpoints must not beat it.
            if (cc < -1e-6) match = false;
        }
        c.expect(match, "clock form equals measured time difference (1e-6, 3 pairs)");
        c.expect(antisym, "clock form antisymmetry (1e-10)");
    }

    // Hamiltonian positivity/constancy and adjoint-scaling invariance.
    {
        bool h_ok = true, scale_ok = true;
        for (const double seed : {0.002, 0.004, 0.006}) {
            const PlanarState s0{seed, z0};
            const AdjointState p1 = singular_adjoint_seed(s0, n);
            const AdjointState p3{3.0 * p1.p_y, 3.0 * p1.p_z};
            const ExtremalArc a = propagate_bang(make_extremal_point(0.0, s0, p1, kTwoPi, n),
                                                 +1, {}, 10.0, n, {});
            const ExtremalArc b = propagate_bang(make_extremal_point(0.0, s0, p3, kTwoPi, n),
                                                 +1, {}, 10.0, n, {});
            const double h0 = a.points.front().h;
            for (const auto& pt : a.points)
                if (pt.h < -1e-9 || std::abs(pt.h - h0) > 1e-8) h_ok = false;
            if (std::abs(a.duration() - b.duration()) > 1e-10) scale_ok = false;
        }
        c.expect(h_ok, "H >= -1e-9 and constant per arc (1e-8)");
        c.expect(scale_ok, "switch times invariant under adjoint scaling (1e-10)");
    }

    // Self-convergence of the synthesized duration.
    {
        SynthesisOptions o1, o2;
        o1.check_switching_curve = o2.check_switching_curve = false;
        o1.tol = 1e-10;
        o2.tol = 5e-11;
        const double d = std::abs(synthesize_optimal(kReference, o1).total_tau -
                                  synthesize_optimal(kReference, o2).total_tau);
        c.expect(d < 1e-6, "halving the tolerance moves T_opt by < 1e-6");
    }
}

void criterion_determinism(Check& c) {
    const fs::path dir = fs::temp_directory_path() / "blochsat_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path cfg = dir / "config.json";
    {
        std::ofstream out(cfg, std::ios::binary);
        out << "{\"t1_ms\": 740.0, \"t2_ms\": 60.0, \"omega_max_hz\": 32.3, "
               "\"output_dir\": \""
            << (dir / "out").string() << "\"}\n";
    }
    c.expect(cli::run({"synthesize", "--config", cfg.string()}) == 0, "first run exits 0");
    const std::string sched = read_file(dir / "out" / "schedule.json");
    const std::string traj = read_file(dir / "out" / "trajectory.csv");
    const std::string summary = read_file(dir / "out" / "summary.txt");
    c.expect(cli::run({"synthesize", "--config", cfg.string()}) == 0, "second run exits 0");
    c.expect(read_file(dir / "out" / "schedule.json") == sched &&
                 read_file(dir / "out" / "trajectory.csv") == traj &&
                 read_file(dir / "out" / "summary.txt") == summary,
             "byte-identical outputs");
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* label;
        std::function<void(Check&)> body;
    };
    const std::vector<Criterion> criteria{
        {1, "reference durations (T_opt 202+-5 ms, T_IR 478+-10 ms, gain 58+-2%)",
         criterion_durations},
        {2, "normalization (1/gamma 23.9+-0.1, 1/Gamma 1.94+-0.01)", criterion_normalization},
        {3, "asymptotics (ratio 0.389+-0.001, T_IR_inf = T1 ln 2)", criterion_asymptotics},
        {4, "sweep shape, threshold and runtime", criterion_sweep},
        {5, "four-arc structure, terminal radius, switching curve", criterion_structure},
        {6, "property suite (oracles and invariants)", criterion_properties},
        {7, "deterministic synthesize outputs", criterion_determinism},
    };

    int failed = 0;
    for (const Criterion& cr : criteria) {
        Check check;
        std::string error;
        try {
            cr.body(check);
        } catch (const std::exception& e) {
            error = e.what();
        }
        const bool ok = check.failures.empty() && error.empty();
        std::printf("criterion %d: %s - %s\n", cr.id, ok ? "PASS" : "FAIL", cr.label);
        if (!error.empty()) std::printf("    exception: %s\n", error.c_str());
        for (const std::string& f : check.failures)
            std::printf("    failed: %s\n", f.c_str());
        if (!ok) ++failed;
    }
    return failed;
}
