#pragma once

// Planar reduction of the dissipative Bloch dynamics:
//
//   dy/dtau = -Gamma*y           - u*z
//   dz/dtau =  gamma*(1 - z)     + u*y
//
// i.e. X' = F0(X) + u*F1(X) with drift F0 = (-Gamma*y, gamma - gamma*z)
// and control field F1 = (-z, y), |u| <= 2*pi. The singular locus, the
// feedback singular control, its admissibility bound and the polar
// diagnostics (r_dot, dr_dot/dtheta) all live here as closed forms.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "blochsat/params.hpp"

namespace blochsat {

struct Vec2 {
    double y = 0.0;
    double z = 0.0;
};

struct PlanarState {
    double y = 0.0;
    double z = 0.0;

    double radius() const { return std::hypot(y, z); }
};

/// Drift field F0 = (-Gamma*y, gamma*(1-z)); fixed point at equilibrium (0,1).
inline Vec2 drift_field(const PlanarState& s, const NormalizedParams& n) {
    return Vec2{-n.big_gamma * s.y, n.small_gamma * (1.0 - s.z)};
}

/// Control field F1 = (-z, y): infinitesimal rotation about the x-axis.
inline Vec2 control_field(const PlanarState& s) {
    return Vec2{-s.z, s.y};
}

/// F0 + u*F1. Throws std::domain_error if |u| exceeds the bound.
inline Vec2 rhs(const PlanarState& s, double u, const NormalizedParams& n) {
    if (std::abs(u) > n.u_max + 1e-12)
        throw std::domain_error("control out of bounds: |u| > u_max");
    return Vec2{-n.big_gamma * s.y - u * s.z,
                n.small_gamma * (1.0 - s.z) + u * s.y};
}

/// V = (-gamma + (gamma-Gamma)*z, (gamma-Gamma)*y), the field with
/// dphi/dtau = P.V along extremals.
inline Vec2 v_field(const PlanarState& s, const NormalizedParams& n) {
    const double d = n.small_gamma - n.big_gamma;
    return Vec2{-n.small_gamma + d * s.z, d * s.y};
}

/// det(F1, V) = y*(gamma - 2*(gamma-Gamma)*z); zero exactly on the singular
/// set S = {y = 0} u {z = z0}.
inline double det_f1_v(const PlanarState& s, const NormalizedParams& n) {
    const double d = n.small_gamma - n.big_gamma;
    return s.y * (n.small_gamma - 2.0 * d * s.z);
}

/// det(F0, F1) = gamma*z*(1-z) - Gamma*y^2; vanishes where drift and control
/// fields are collinear (origin, equilibrium and the oval between them).
inline double det_f0_f1(const PlanarState& s, const NormalizedParams& n) {
    return n.small_gamma * s.z * (1.0 - s.z) - n.big_gamma * s.y * s.y;
}

struct SingularLocus {
    double z0 = 0.0;                 ///< ordinate of the horizontal line (if defined)
    bool horizontal_defined = true;  ///< false when Gamma = gamma
};

/// Singular set: the vertical line y = 0 plus, for Gamma != gamma, the
/// horizontal line z0 = -gamma/(2*(Gamma-gamma)) = -T2/(2*(T1-T2)).
inline SingularLocus singular_locus(const NormalizedParams& n) {
    if (relaxation_degenerate(n))
        return SingularLocus{0.0, false};
    return SingularLocus{-n.small_gamma / (2.0 * (n.big_gamma - n.small_gamma)), true};
}

inline double singular_z0(const NormalizedParams& n) {
    const SingularLocus locus = singular_locus(n);
    if (!locus.horizontal_defined)
        throw degenerate_relaxation("horizontal singular line undefined for t1 = t2");
    return locus.z0;
}

/// Feedback singular control
///   u_s(y,z) = [-y*gamma*(Gamma-2*gamma) - 2*y*z0*(gamma^2-Gamma^2)]
///              / [2*(Gamma-gamma)*(y^2 - z0^2) - gamma*z0].
/// Vanishes identically on the vertical line; on the horizontal line it
/// reduces to the feedback that pins dz/dtau = 0. Defined wherever the
/// denominator is nonzero so that maps and tracers can sample it off-locus.
inline double singular_control(const PlanarState& s, const NormalizedParams& n) {
    if (s.y == 0.0) return 0.0;
    const double g = n.small_gamma, G = n.big_gamma;
    const double z0 = singular_z0(n);
    const double num = -s.y * g * (G - 2.0 * g) - 2.0 * s.y * z0 * (g * g - G * G);
    const double den = 2.0 * (G - g) * (s.y * s.y - z0 * z0) - g * z0;
    if (std::abs(den) < 1e-14)
        throw std::domain_error("singular control denominator vanishes");
    return num / den;
}

/// Smallest |y| on the horizontal singular line where |u_s| <= 2*pi:
///   y_min = |gamma*(gamma - 2*Gamma)| / (2*pi * |2*Gamma - 2*gamma|).
/// Below it the feedback exceeds the bound and the arc must be abandoned.
inline double admissibility_bound(const NormalizedParams& n) {
    if (relaxation_degenerate(n))
        throw degenerate_relaxation("admissibility bound undefined for t1 = t2");
    const double g = n.small_gamma, G = n.big_gamma;
    return std::abs(g * (g - 2.0 * G)) / (kTwoPi * std::abs(2.0 * G - 2.0 * g));
}

struct PolarDiagnostics {
    double r = 0.0;
    double theta = 0.0;
    double r_dot = 0.0;          ///< radial drift, control-independent
    double dr_dot_dtheta = 0.0;  ///< zero exactly on the singular set
};

/// r_dot = -(Gamma*cos^2 + gamma*sin^2)*r + gamma*sin(theta),
/// dr_dot/dtheta = -(gamma-Gamma)*r*sin(2*theta) + gamma*cos(theta).
inline PolarDiagnostics polar_diagnostics(const PlanarState& s, const NormalizedParams& n) {
    const double r = s.radius();
    if (r < 1e-14)
        throw std::domain_error("polar diagnostics undefined at the origin");
    const double theta = std::atan2(s.z, s.y);
    const double c = std::cos(theta), si = std::sin(theta);
    const double g = n.small_gamma, G = n.big_gamma;
    PolarDiagnostics d;
    d.r = r;
    d.theta = theta;
    d.r_dot = -(G * c * c + g * si * si) * r + g * si;
    d.dr_dot_dtheta = -(g - G) * r * std::sin(2.0 * theta) + g * c;
    return d;
}

/// Second theta-derivative of r_dot at fixed r; used to cross-check the
/// time-minimizing / time-maximizing split of the singular lines
/// (|r_dot| is maximal over theta exactly on the optimal branch).
inline double d2r_dot_dtheta2(const PlanarState& s, const NormalizedParams& n) {
    const double r = s.radius();
    if (r < 1e-14)
        throw std::domain_error("polar diagnostics undefined at the origin");
    const double theta = std::atan2(s.z, s.y);
    const double g = n.small_gamma, G = n.big_gamma;
    return -2.0 * (g - G) * r * std::cos(2.0 * theta) - g * std::sin(theta);
}

/// Time-stamped planar trajectory with the applied control at each sample.
struct Trajectory {
    struct Sample {
        double tau = 0.0;
        PlanarState state;
        double u = 0.0;
        int arc = -1;  ///< index into the generating schedule, -1 if none
    };
    std::vector<Sample> samples;
    std::optional<std::string> terminal_event;

    double duration() const { return samples.empty() ? 0.0 : samples.back().tau; }
    const PlanarState& back_state() const { return samples.back().state; }
};

}  // namespace blochsat
