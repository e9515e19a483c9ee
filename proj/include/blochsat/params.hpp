#pragma once

// Relaxation parameters of the driven spin and their dimensionless form.
//
// Lab-frame inputs are the two relaxation times T1, T2 (seconds) and the
// peak control amplitude f = omega_max/(2*pi) in Hz. All dynamics run in
// normalized units: time tau = f * t, control bounded by |u| <= 2*pi,
// decay rates Gamma = 2*pi/(omega_max*T2) = 1/(f*T2) and
// gamma = 2*pi/(omega_max*T1) = 1/(f*T1). Magnetization is scaled by the
// equilibrium value, so the thermal state sits at z = +1.

#include <cmath>
#include <stdexcept>

namespace blochsat {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Normalized control bound; the scaling fixes it at 2*pi exactly.
inline constexpr double kUMax = kTwoPi;

struct invalid_params : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Horizontal singular line is undefined when T1 = T2.
struct degenerate_relaxation : std::domain_error {
    using std::domain_error::domain_error;
};

/// Lab-frame description of the spin and the control hardware.
struct PhysicalParams {
    double t1_s = 0.0;          ///< longitudinal relaxation time [s]
    double t2_s = 0.0;          ///< transverse relaxation time [s]
    double omega_max_hz = 0.0;  ///< peak control amplitude omega_max/(2*pi) [Hz]
};

/// Dimensionless rates; all propagation happens in these units.
struct NormalizedParams {
    double big_gamma = 0.0;    ///< transverse decay rate Gamma per unit tau
    double small_gamma = 0.0;  ///< longitudinal decay rate gamma per unit tau
    double u_max = kUMax;      ///< control bound, 2*pi by construction
};

inline void validate(const PhysicalParams& p) {
    if (!(p.t1_s > 0.0) || !(p.t2_s > 0.0) || !(p.omega_max_hz > 0.0))
        throw invalid_params("physical params must be positive (t1, t2, omega_max)");
    // Positivity of the relaxation superoperator requires T2 <= 2*T1.
    if (p.t2_s > 2.0 * p.t1_s)
        throw invalid_params("unphysical relaxation times: t2 > 2*t1");
}

/// Gamma = 1/(f*T2), gamma = 1/(f*T1) with f in Hz; throws invalid_params.
inline NormalizedParams normalize(const PhysicalParams& p) {
    validate(p);
    return NormalizedParams{1.0 / (p.omega_max_hz * p.t2_s),
                            1.0 / (p.omega_max_hz * p.t1_s), kUMax};
}

/// Normalized time elapsed after t seconds: tau = f * t.
inline double tau_from_seconds(double t_seconds, const PhysicalParams& p) {
    return t_seconds * p.omega_max_hz;
}

inline double seconds_from_tau(double tau, const PhysicalParams& p) {
    return tau / p.omega_max_hz;
}

inline bool relaxation_degenerate(const NormalizedParams& n) {
    return std::abs(n.big_gamma - n.small_gamma) <=
           1e-12 * (std::abs(n.big_gamma) + std::abs(n.small_gamma));
}

}  // namespace blochsat
