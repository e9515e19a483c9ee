#pragma once

// Maximum-principle machinery for the planar saturation problem: coupled
// state/adjoint flow, switching function phi = P.F1, bang and singular arc
// propagation, the numerically traced switching curve, and the clock-form
// comparison that measures travel-time differences from path geometry alone.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "blochsat/model.hpp"
#include "blochsat/ode.hpp"

namespace blochsat {

/// PMP costate, defined up to positive scaling.
struct AdjointState {
    double p_y = 0.0;
    double p_z = 0.0;

    double norm() const { return std::hypot(p_y, p_z); }
};

/// phi(X, P) = P.F1 = -p_y*z + p_z*y. Its sign selects the bang control;
/// its vanishing on an interval defines singular arcs.
inline double switching_function(const PlanarState& s, const AdjointState& p) {
    return -p.p_y * s.z + p.p_z * s.y;
}

/// Pseudo-Hamiltonian H = P.(F0 + u*F1); must stay >= 0 along extremals.
inline double hamiltonian(const PlanarState& s, const AdjointState& p, double u,
                          const NormalizedParams& n) {
    const Vec2 f0 = drift_field(s, n);
    const Vec2 f1 = control_field(s);
    return p.p_y * (f0.y + u * f1.y) + p.p_z * (f0.z + u * f1.z);
}

/// One sample of an extremal: state, costate, control, and the two scalars
/// that certify it (switching function, Hamiltonian).
struct ExtremalPoint {
    double tau = 0.0;
    PlanarState state;
    AdjointState adjoint;
    double u = 0.0;
    double phi = 0.0;
    double h = 0.0;
};

inline ExtremalPoint make_extremal_point(double tau, const PlanarState& s,
                                         const AdjointState& p, double u,
                                         const NormalizedParams& n) {
    return ExtremalPoint{tau, s, p, u, switching_function(s, p), hamiltonian(s, p, u, n)};
}

/// Coupled flow: X' = F0 + u*F1, P' = -(dF/dX)^T P, i.e.
///   p_y' = Gamma*p_y - u*p_z,  p_z' = u*p_y + gamma*p_z.
inline StateVec<4> extremal_rhs(const StateVec<4>& x, double u, const NormalizedParams& n) {
    const double y = x[0], z = x[1], py = x[2], pz = x[3];
    return StateVec<4>{-n.big_gamma * y - u * z,
                       n.small_gamma * (1.0 - z) + u * y,
                       n.big_gamma * py - u * pz,
                       u * py + n.small_gamma * pz};
}

/// Stop condition expressed on the planar state part of whatever system an
/// arc propagator integrates.
struct PlanarEvent {
    std::string name;
    std::function<double(double, const PlanarState&)> guard;
    EventDirection direction = EventDirection::either;
    double arm_threshold = 0.0;
};

struct ExtremalArc {
    std::vector<ExtremalPoint> points;
    std::optional<std::string> terminal_event;

    double duration() const { return points.empty() ? 0.0 : points.back().tau; }
    const ExtremalPoint& back() const { return points.back(); }
};

inline constexpr const char* kPhiZeroEvent = "phi-zero";

/// Propagate a bang extremal with u = sign*2*pi until phi crosses zero, a
/// caller event fires, or the horizon runs out. The costate is normalized
/// at entry (legal: the PMP is positively homogeneous in P). Requires
/// phi(e0)*sign >= -1e-10 so the control is consistent with maximization.
inline ExtremalArc propagate_bang(const ExtremalPoint& e0, int sign,
                                  const std::vector<PlanarEvent>& stop_events,
                                  double horizon, const NormalizedParams& n,
                                  const OdeOptions& opt = {}) {
    if (sign != 1 && sign != -1)
        throw std::invalid_argument("bang sign must be +1 or -1");
    const double phi0 = switching_function(e0.state, e0.adjoint);
    if (phi0 * sign < -1e-10)
        throw std::invalid_argument("bang sign inconsistent with switching function");
    const double pn = e0.adjoint.norm();
    if (!(pn > 0.0)) throw std::invalid_argument("adjoint state must be nonzero");

    const double u = sign * n.u_max;
    StateVec<4> x0{e0.state.y, e0.state.z, e0.adjoint.p_y / pn, e0.adjoint.p_z / pn};
    auto field = [&n, u](double, const StateVec<4>& x, StateVec<4>& dx) {
        dx = extremal_rhs(x, u, n);
    };

    std::vector<Event<4>> events;
    events.push_back(Event<4>{kPhiZeroEvent,
                              [](double, const StateVec<4>& x) {
                                  return -x[2] * x[1] + x[3] * x[0];
                              },
                              EventDirection::either, 1e-9});
    for (const auto& ev : stop_events)
        events.push_back(Event<4>{ev.name,
                                  [&ev](double tau, const StateVec<4>& x) {
                                      return ev.guard(tau, PlanarState{x[0], x[1]});
                                  },
                                  ev.direction, ev.arm_threshold});

    const OdeTrajectory<4> raw = integrate<4>(field, x0, horizon, opt, events);

    ExtremalArc arc;
    arc.terminal_event = raw.terminal_event;
    arc.points.reserve(raw.samples.size());
    for (const auto& smp : raw.samples)
        arc.points.push_back(make_extremal_point(smp.tau, PlanarState{smp.x[0], smp.x[1]},
                                                 AdjointState{smp.x[2], smp.x[3]}, u, n));
    return arc;
}

enum class SingularBranch { horizontal, vertical };

struct SingularArc {
    std::vector<Trajectory::Sample> samples;  ///< u holds the feedback value
    std::optional<std::string> terminal_event;

    double duration() const { return samples.empty() ? 0.0 : samples.back().tau; }
    const PlanarState& back_state() const { return samples.back().state; }
};

inline constexpr const char* kAdmissibilityEvent = "admissibility-loss";

/// Follow a singular arc in reduced coordinates. On the horizontal branch
/// z is pinned to z0 and y obeys y' = -Gamma*y - u_s(y,z0)*z0, stopping at
/// admissibility loss (|u_s| = 2*pi) or a caller event. On the vertical
/// branch u = 0, y = 0 and z relaxes as z' = gamma*(1-z).
inline SingularArc propagate_singular(const PlanarState& s0, SingularBranch branch,
                                      const std::vector<PlanarEvent>& stop_events,
                                      double horizon, const NormalizedParams& n,
                                      const OdeOptions& opt = {}) {
    SingularArc arc;
    if (branch == SingularBranch::horizontal) {
        const double z0 = singular_z0(n);
        if (std::abs(s0.z - z0) > 1e-8)
            throw std::invalid_argument("seed is off the horizontal singular line");
        const double us0 = singular_control(PlanarState{s0.y, z0}, n);
        if (std::abs(us0) > n.u_max + 1e-9)
            throw std::invalid_argument("singular control inadmissible at the seed");

        auto field = [&n, z0](double, const StateVec<1>& x, StateVec<1>& dx) {
            const double us = singular_control(PlanarState{x[0], z0}, n);
            dx[0] = -n.big_gamma * x[0] - us * z0;
        };
        std::vector<Event<1>> events;
        events.push_back(Event<1>{kAdmissibilityEvent,
                                  [&n, z0](double, const StateVec<1>& x) {
                                      return std::abs(singular_control(
                                                 PlanarState{x[0], z0}, n)) -
                                             n.u_max;
                                  },
                                  EventDirection::rising, 0.0});
        for (const auto& ev : stop_events)
            events.push_back(Event<1>{ev.name,
                                      [&ev, z0](double tau, const StateVec<1>& x) {
                                          return ev.guard(tau, PlanarState{x[0], z0});
                                      },
                                      ev.direction, ev.arm_threshold});

        const OdeTrajectory<1> raw = integrate<1>(field, StateVec<1>{s0.y}, horizon, opt, events);
        arc.terminal_event = raw.terminal_event;
        arc.samples.reserve(raw.samples.size());
        for (const auto& smp : raw.samples) {
            const PlanarState s{smp.x[0], z0};
            arc.samples.push_back({smp.tau, s, singular_control(s, n), -1});
        }
        return arc;
    }

    // Vertical branch.
    if (std::abs(s0.y) > 1e-8)
        throw std::invalid_argument("seed is off the vertical singular line");
    auto field = [&n](double, const StateVec<1>& x, StateVec<1>& dx) {
        dx[0] = n.small_gamma * (1.0 - x[0]);
    };
    std::vector<Event<1>> events;
    for (const auto& ev : stop_events)
        events.push_back(Event<1>{ev.name,
                                  [&ev](double tau, const StateVec<1>& x) {
                                      return ev.guard(tau, PlanarState{0.0, x[0]});
                                  },
                                  ev.direction, ev.arm_threshold});
    const OdeTrajectory<1> raw = integrate<1>(field, StateVec<1>{s0.z}, horizon, opt, events);
    arc.terminal_event = raw.terminal_event;
    arc.samples.reserve(raw.samples.size());
    for (const auto& smp : raw.samples)
        arc.samples.push_back({smp.tau, PlanarState{0.0, smp.x[0]}, 0.0, -1});
    return arc;
}

/// Costate seed used on the singular locus: unit normal to F1 (so phi = 0)
/// oriented so that H = P.F0 >= 0; ties broken toward positive p_z.
inline AdjointState singular_adjoint_seed(const PlanarState& s, const NormalizedParams& n) {
    const Vec2 f1 = control_field(s);
    AdjointState p{f1.z, -f1.y};  // perpendicular to F1
    const double nrm = p.norm();
    if (!(nrm > 0.0)) throw std::invalid_argument("F1 vanishes at the seed");
    p.p_y /= nrm;
    p.p_z /= nrm;
    const double h = hamiltonian(s, p, 0.0, n);
    if (h < 0.0 || (h == 0.0 && p.p_z < 0.0)) {
        p.p_y = -p.p_y;
        p.p_z = -p.p_z;
    }
    return p;
}

struct SwitchingCurve {
    struct Point {
        double seed_y = 0.0;
        PlanarState state;        ///< first phi-zero after leaving the seed
        double tau_to_switch = 0.0;
    };
    std::vector<Point> points;           ///< ordered by seed
    std::vector<double> skipped_seeds;   ///< seeds whose phi never re-vanished
    PlanarState emanation_point;         ///< admissibility-loss point (y_min, z0)
};

/// Default seed ladder: 64 logarithmically spaced y values in (1e-5, y_min).
inline std::vector<double> default_switching_seeds(const NormalizedParams& n,
                                                   std::size_t count = 64) {
    const double y_min = admissibility_bound(n);
    const double lo = 1e-5;
    if (!(y_min > lo))
        throw std::invalid_argument("admissibility bound below the seed floor");
    std::vector<double> seeds(count);
    const double ratio = std::pow(y_min / lo, 1.0 / static_cast<double>(count));
    double v = lo;
    for (std::size_t i = 0; i < count; ++i) {
        seeds[i] = v;
        v *= ratio;
    }
    return seeds;
}

/// Trace the switching curve: for each seed (y_i, z0) on the inadmissible
/// part of the horizontal singular line, launch a u = +2*pi extremal with
/// the phi = 0 costate seed and record the first state where phi vanishes
/// again. Seeds with no crossing before the horizon are flagged and omitted.
inline SwitchingCurve trace_switching_curve(const NormalizedParams& n,
                                            const std::vector<double>& seeds,
                                            double horizon = 10.0,
                                            const OdeOptions& opt = {}) {
    const double z0 = singular_z0(n);
    SwitchingCurve curve;
    curve.emanation_point = PlanarState{admissibility_bound(n), z0};
    for (const double seed_y : seeds) {
        const PlanarState s0{seed_y, z0};
        const ExtremalPoint e0 =
            make_extremal_point(0.0, s0, singular_adjoint_seed(s0, n), n.u_max, n);
        const ExtremalArc arc = propagate_bang(e0, +1, {}, horizon, n, opt);
        if (arc.terminal_event && *arc.terminal_event == kPhiZeroEvent)
            curve.points.push_back({seed_y, arc.back().state, arc.duration()});
        else
            curve.skipped_seeds.push_back(seed_y);
    }
    return curve;
}

// ---------------------------------------------------------------------------
// Clock form alpha: alpha(F0) = 1, alpha(F1) = 0, defined away from the set
// where F0 and F1 are collinear. In coordinates
//   alpha = (y dy + z dz) / det(F0, F1).
// The integral of alpha along any admissible trajectory equals its duration,
// so loop integrals measure time differences purely from geometry.
// ---------------------------------------------------------------------------

inline Vec2 clock_form_coefficients(const PlanarState& s, const NormalizedParams& n) {
    const double d = det_f0_f1(s, n);
    if (std::abs(d) < 1e-12)
        throw std::domain_error("clock form undefined: F0 and F1 collinear on path");
    return Vec2{s.y / d, s.z / d};
}

/// Coefficient of d(alpha) = c(y,z) dy ^ dz by central finite differences;
/// analytically c = det(F1,V)/det(F0,F1)^2, zero exactly on the singular set.
inline double dalpha_fd(const PlanarState& s, const NormalizedParams& n, double h = 1e-5) {
    const Vec2 az_p = clock_form_coefficients(PlanarState{s.y + h, s.z}, n);
    const Vec2 az_m = clock_form_coefficients(PlanarState{s.y - h, s.z}, n);
    const Vec2 ay_p = clock_form_coefficients(PlanarState{s.y, s.z + h}, n);
    const Vec2 ay_m = clock_form_coefficients(PlanarState{s.y, s.z - h}, n);
    return (az_p.z - az_m.z) / (2.0 * h) - (ay_p.y - ay_m.y) / (2.0 * h);
}

namespace detail {
// 5-point Gauss-Legendre nodes/weights on [0, 1].
inline constexpr double gl_x[5] = {0.5 - 0.4530899229693320,
                                   0.5 - 0.26923465505284155,
                                   0.5,
                                   0.5 + 0.26923465505284155,
                                   0.5 + 0.4530899229693320};
inline constexpr double gl_w[5] = {0.11846344252809454, 0.23931433524968324,
                                   0.28444444444444444, 0.23931433524968324,
                                   0.11846344252809454};
}  // namespace detail

/// Line integral of the clock form along a sampled polyline, segment-wise
/// 5-point Gauss-Legendre. Accuracy is limited by the sampling density of
/// the path, so feed densely resampled trajectories. Throws when the path
/// touches or crosses the set where F0 and F1 are collinear (det changes
/// sign or drops below 1e-12).
inline double clock_form_integral(const Trajectory& traj, const NormalizedParams& n) {
    double total = 0.0;
    int det_sign = 0;
    auto coefficients = [&](const PlanarState& s) {
        const double d = det_f0_f1(s, n);
        if (std::abs(d) < 1e-12)
            throw std::domain_error("clock form undefined: F0 and F1 collinear on path");
        const int sgn = d > 0.0 ? 1 : -1;
        if (det_sign == 0) det_sign = sgn;
        if (sgn != det_sign)
            throw std::domain_error("clock form undefined: path crosses a collinear point");
        return Vec2{s.y / d, s.z / d};
    };
    for (std::size_t i = 0; i + 1 < traj.samples.size(); ++i) {
        const PlanarState& a = traj.samples[i].state;
        const PlanarState& b = traj.samples[i + 1].state;
        const double dy = b.y - a.y, dz = b.z - a.z;
        if (dy == 0.0 && dz == 0.0) continue;
        double seg = 0.0;
        for (int q = 0; q < 5; ++q) {
            const double t = detail::gl_x[q];
            const Vec2 c = coefficients(PlanarState{a.y + t * dy, a.z + t * dz});
            seg += detail::gl_w[q] * (c.y * dy + c.z * dz);
        }
        total += seg;
    }
    return total;
}

/// Loop integral of alpha over traj_a followed by traj_b reversed. For
/// trajectories sharing both endpoints this equals tau_a - tau_b.
inline double clock_compare(const Trajectory& traj_a, const Trajectory& traj_b,
                            const NormalizedParams& n) {
    if (traj_a.samples.empty() || traj_b.samples.empty())
        throw std::invalid_argument("clock_compare requires non-empty trajectories");
    auto gap = [](const PlanarState& p, const PlanarState& q) {
        return std::hypot(p.y - q.y, p.z - q.z);
    };
    if (gap(traj_a.samples.front().state, traj_b.samples.front().state) > 1e-8 ||
        gap(traj_a.samples.back().state, traj_b.samples.back().state) > 1e-8)
        throw std::invalid_argument("clock_compare endpoints do not match");
    return clock_form_integral(traj_a, n) - clock_form_integral(traj_b, n);
}

enum class Classification { time_minimizing, time_maximizing };

/// Optimality type of a singular point: the vertical line is minimizing for
/// z > z0 and maximizing below; the horizontal line is minimizing. Matches
/// the sign test r_dot * d2(r_dot)/dtheta2 < 0 (|r_dot| maximal at fixed r).
inline Classification classify_singular_point(const PlanarState& s,
                                              const NormalizedParams& n,
                                              double locus_tol = 1e-8) {
    const double z0 = singular_z0(n);
    const bool on_vertical = std::abs(s.y) <= locus_tol;
    const bool on_horizontal = std::abs(s.z - z0) <= locus_tol;
    if (!on_vertical && !on_horizontal)
        throw std::invalid_argument("point is off the singular locus");
    if (on_vertical && !on_horizontal)
        return s.z > z0 ? Classification::time_minimizing : Classification::time_maximizing;
    return Classification::time_minimizing;
}

/// True if segment polylines a and b properly intersect anywhere.
inline bool polylines_intersect(const std::vector<PlanarState>& a,
                                const std::vector<PlanarState>& b) {
    auto orient = [](const PlanarState& p, const PlanarState& q, const PlanarState& r) {
        return (q.y - p.y) * (r.z - p.z) - (q.z - p.z) * (r.y - p.y);
    };
    for (std::size_t i = 0; i + 1 < a.size(); ++i) {
        for (std::size_t j = 0; j + 1 < b.size(); ++j) {
            const PlanarState &p1 = a[i], &p2 = a[i + 1], &q1 = b[j], &q2 = b[j + 1];
            const double o1 = orient(p1, p2, q1), o2 = orient(p1, p2, q2);
            const double o3 = orient(q1, q2, p1), o4 = orient(q1, q2, p2);
            if (((o1 > 0) != (o2 > 0)) && ((o3 > 0) != (o4 > 0))) return true;
        }
    }
    return false;
}

}  // namespace blochsat
