#pragma once

// Explicit adaptive Dormand-Prince 5(4) propagator with a quartic dense
// interpolant and event localization. Events are detected on sign changes
// of a guard between accepted steps and refined by bisection on the dense
// output until the bracketing interval is below 1e-13 in tau.
//
// Stateless: every call owns its workspace, so integrations may run
// concurrently.

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace blochsat {

struct step_underflow : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class EventDirection { rising, falling, either };

template <std::size_t N>
using StateVec = std::array<double, N>;

template <std::size_t N>
struct Event {
    std::string name;
    std::function<double(double, const StateVec<N>&)> guard;
    EventDirection direction = EventDirection::either;
    /// The event only becomes active once |guard| has exceeded this value;
    /// lets arcs start exactly on a guard zero without firing immediately.
    double arm_threshold = 0.0;
};

struct OdeOptions {
    double rtol = 1e-10;
    double initial_step = 0.0;  ///< 0 = choose automatically
    double max_step = std::numeric_limits<double>::infinity();
    /// When > 0, record uniformly spaced samples from the dense output
    /// instead of the raw accepted steps.
    double sample_dt = 0.0;
};

template <std::size_t N>
struct OdeTrajectory {
    struct Sample {
        double tau = 0.0;
        StateVec<N> x{};
    };
    std::vector<Sample> samples;
    /// Name of the event that stopped the integration; nullopt = horizon.
    std::optional<std::string> terminal_event;

    double duration() const { return samples.empty() ? 0.0 : samples.back().tau; }
    const StateVec<N>& back_state() const { return samples.back().x; }
};

namespace detail {

// Dormand-Prince 5(4) tableau.
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                        a53 = 64448.0 / 6561, a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
inline constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// Dense-output weights (stages 1,3,4,5,6,7).
inline constexpr double d1 = -12715105075.0 / 11282082432.0;
inline constexpr double d3 = 87487479700.0 / 32700410799.0;
inline constexpr double d4 = -10690763975.0 / 1880347072.0;
inline constexpr double d5 = 701980252875.0 / 199316789632.0;
inline constexpr double d6 = -1453857185.0 / 822651844.0;
inline constexpr double d7 = 69997945.0 / 29380423.0;

/// Quartic interpolant over one accepted step, built from the stage values.
template <std::size_t N>
struct DenseSegment {
    double t0 = 0.0, h = 0.0;
    std::array<StateVec<N>, 5> rcont{};

    StateVec<N> eval(double t) const {
        const double th = (t - t0) / h;
        const double th1 = 1.0 - th;
        StateVec<N> out;
        for (std::size_t i = 0; i < N; ++i)
            out[i] = rcont[0][i] +
                     th * (rcont[1][i] +
                           th1 * (rcont[2][i] + th * (rcont[3][i] + th1 * rcont[4][i])));
        return out;
    }
};

}  // namespace detail

/// Integrate dx/dtau = field(tau, x) from x0 over [0, horizon]. Stops early
/// at the first event whose guard crosses zero in the requested direction;
/// the trajectory then ends at the refined event point and terminal_event
/// holds its name. Throws step_underflow if the step collapses.
template <std::size_t N, typename Field>
OdeTrajectory<N> integrate(Field&& field, const StateVec<N>& x0, double horizon,
                           const OdeOptions& opt = {},
                           const std::vector<Event<N>>& events = {}) {
    using namespace detail;
    if (!(horizon > 0.0)) throw std::invalid_argument("integration horizon must be > 0");
    if (!(opt.rtol >= 1e-13 && opt.rtol <= 1e-3))
        throw std::invalid_argument("integration tolerance must lie in [1e-13, 1e-3]");

    const double atol = opt.rtol;  // states here are O(1)
    auto err_norm = [&](const StateVec<N>& y0, const StateVec<N>& y1,
                        const StateVec<N>& err) {
        double sum = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double sc = atol + opt.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
            const double q = err[i] / sc;
            sum += q * q;
        }
        return std::sqrt(sum / static_cast<double>(N));
    };

    OdeTrajectory<N> traj;
    traj.samples.push_back({0.0, x0});

    StateVec<N> y = x0, k1, k2, k3, k4, k5, k6, k7, ytmp, ynew, yerr;
    double t = 0.0;
    field(t, y, k1);

    // Initial step: conservative scale-based guess, then controlled.
    double h = opt.initial_step;
    if (h <= 0.0) {
        double d0 = 0.0, d1n = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double sc = atol + opt.rtol * std::abs(y[i]);
            d0 += (y[i] / sc) * (y[i] / sc);
            d1n += (k1[i] / sc) * (k1[i] / sc);
        }
        d0 = std::sqrt(d0 / N);
        d1n = std::sqrt(d1n / N);
        h = (d1n > 1e-10) ? 0.01 * d0 / d1n : 1e-6;
        h = std::min(h, horizon);
        if (h <= 0.0) h = 1e-6;
    }
    h = std::min(h, opt.max_step);

    // Guard bookkeeping for event detection.
    std::vector<double> g_prev(events.size());
    std::vector<char> armed(events.size());
    for (std::size_t e = 0; e < events.size(); ++e) {
        g_prev[e] = events[e].guard(0.0, y);
        armed[e] = std::abs(g_prev[e]) > events[e].arm_threshold;
    }

    double next_out = opt.sample_dt;
    std::size_t n_steps = 0;

    while (t < horizon) {
        if (++n_steps > 20'000'000)
            throw std::runtime_error("integration exceeded step budget");
        if (h < 1e-15 * std::max(1.0, std::abs(t)))
            throw step_underflow("step size underflow (stiff or singular field)");
        bool last = false;
        if (t + h >= horizon) {
            h = horizon - t;
            last = true;
        }

        for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
        field(t + c2 * h, ytmp, k2);
        for (std::size_t i = 0; i < N; ++i)
            ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        field(t + c3 * h, ytmp, k3);
        for (std::size_t i = 0; i < N; ++i)
            ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        field(t + c4 * h, ytmp, k4);
        for (std::size_t i = 0; i < N; ++i)
            ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        field(t + c5 * h, ytmp, k5);
        for (std::size_t i = 0; i < N; ++i)
            ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                                  a65 * k5[i]);
        field(t + h, ytmp, k6);
        for (std::size_t i = 0; i < N; ++i)
            ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] +
                                  b6 * k6[i]);
        field(t + h, ynew, k7);
        for (std::size_t i = 0; i < N; ++i)
            yerr[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                           e6 * k6[i] + e7 * k7[i]);

        const double err = err_norm(y, ynew, yerr);
        if (err > 1.0) {
            h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
            continue;
        }

        detail::DenseSegment<N> seg;
        seg.t0 = t;
        seg.h = h;
        for (std::size_t i = 0; i < N; ++i) {
            const double ydiff = ynew[i] - y[i];
            const double bspl = h * k1[i] - ydiff;
            seg.rcont[0][i] = y[i];
            seg.rcont[1][i] = ydiff;
            seg.rcont[2][i] = bspl;
            seg.rcont[3][i] = ydiff - h * k7[i] - bspl;
            seg.rcont[4][i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] +
                                   d6 * k6[i] + d7 * k7[i]);
        }
        const double t1 = t + h;

        // Event scan: earliest refined crossing wins; ties go to list order.
        int fired = -1;
        double t_event = std::numeric_limits<double>::infinity();
        StateVec<N> x_event{};
        for (std::size_t e = 0; e < events.size(); ++e) {
            const double g1 = events[e].guard(t1, ynew);
            if (!armed[e]) {
                if (std::abs(g1) > events[e].arm_threshold) armed[e] = true;
                g_prev[e] = g1;
                continue;
            }
            const double g0 = g_prev[e];
            const bool up = g0 < 0.0 && g1 >= 0.0;
            const bool down = g0 > 0.0 && g1 <= 0.0;
            const bool hit = (events[e].direction == EventDirection::rising && up) ||
                             (events[e].direction == EventDirection::falling && down) ||
                             (events[e].direction == EventDirection::either && (up || down));
            g_prev[e] = g1;
            if (!hit) continue;

            double lo = t, hi = t1, g_lo = g0;
            while (hi - lo > 1e-13) {
                const double mid = 0.5 * (lo + hi);
                if (mid <= lo || mid >= hi) break;  // interval is ulp-limited
                const StateVec<N> xm = seg.eval(mid);
                const double gm = events[e].guard(mid, xm);
                if ((g_lo < 0.0) == (gm < 0.0) && gm != 0.0) {
                    lo = mid;
                    g_lo = gm;
                } else {
                    hi = mid;
                }
            }
            if (hi < t_event - 1e-12) {
                fired = static_cast<int>(e);
                t_event = hi;
                x_event = seg.eval(hi);
            }
        }

        if (fired >= 0) {
            if (opt.sample_dt > 0.0) {
                while (next_out < t_event - 1e-15) {
                    traj.samples.push_back({next_out, seg.eval(next_out)});
                    next_out += opt.sample_dt;
                }
            }
            traj.samples.push_back({t_event, x_event});
            traj.terminal_event = events[static_cast<std::size_t>(fired)].name;
            return traj;
        }

        const double t_rec = last ? horizon : t1;
        if (opt.sample_dt > 0.0) {
            while (next_out <= t1 + 1e-15 && next_out < horizon - 1e-15) {
                traj.samples.push_back({next_out, seg.eval(next_out)});
                next_out += opt.sample_dt;
            }
            if (last) traj.samples.push_back({t_rec, ynew});
        } else {
            traj.samples.push_back({t_rec, ynew});
        }

        t = last ? horizon : t1;
        y = ynew;
        k1 = k7;  // FSAL
        const double scale =
            std::min(5.0, std::max(0.2, 0.9 * std::pow(std::max(err, 1e-10), -0.2)));
        h = std::min(h * scale, opt.max_step);
    }

    return traj;
}

/// integrate() with the returned tuple spelled out: the trajectory plus the
/// fired event name (nullopt when the horizon was reached first).
template <std::size_t N, typename Field>
OdeTrajectory<N> integrate_until(Field&& field, const StateVec<N>& x0,
                                 const std::vector<Event<N>>& events, double horizon,
                                 const OdeOptions& opt = {}) {
    if (events.empty())
        throw std::invalid_argument("integrate_until requires at least one event");
    return integrate<N>(std::forward<Field>(field), x0, horizon, opt, events);
}

}  // namespace blochsat
