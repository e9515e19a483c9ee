#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "blochsat/model.hpp"

using namespace blochsat;

namespace {

const PhysicalParams kReference{0.740, 0.060, 32.3};

NormalizedParams reference_params() { return normalize(kReference); }

}  // namespace

TEST_CASE("normalize reproduces the worked normalized rates") {
    const NormalizedParams n = reference_params();
    // 1/gamma = 23.9 and 1/Gamma = 1.94 in normalized time units.
    CHECK(1.0 / n.small_gamma == doctest::Approx(23.9).epsilon(0.1 / 23.9));
    CHECK(1.0 / n.big_gamma == doctest::Approx(1.94).epsilon(0.01 / 1.94));
    CHECK(n.u_max == kTwoPi);
    CHECK(n.big_gamma >= 0.5 * n.small_gamma);
}

TEST_CASE("normalize: equal relaxation times give equal rates") {
    const NormalizedParams n = normalize(PhysicalParams{1.0, 1.0, 1.0});
    CHECK(n.big_gamma == n.small_gamma);
    CHECK(n.big_gamma == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(relaxation_degenerate(n));
}

TEST_CASE("normalize: rates scale inversely with amplitude") {
    const NormalizedParams n = normalize(PhysicalParams{0.740, 0.060, 500.0});
    CHECK(n.big_gamma == doctest::Approx(1.0 / 30.0).epsilon(1e-14));
    CHECK(n.small_gamma == doctest::Approx(1.0 / 370.0).epsilon(1e-14));
}

TEST_CASE("normalize rejects invalid parameters") {
    CHECK_THROWS_AS(normalize(PhysicalParams{-1.0, 0.06, 32.3}), invalid_params);
    CHECK_THROWS_AS(normalize(PhysicalParams{0.74, 0.0, 32.3}), invalid_params);
    CHECK_THROWS_AS(normalize(PhysicalParams{0.74, 0.06, -3.0}), invalid_params);
    // t2 > 2*t1 is unphysical; the boundary t2 = 2*t1 is accepted.
    CHECK_THROWS_AS(normalize(PhysicalParams{0.1, 0.21, 32.3}), invalid_params);
    CHECK_NOTHROW(normalize(PhysicalParams{0.1, 0.2, 32.3}));
}

TEST_CASE("time conversion round-trips") {
    for (const double t : {1e-4, 0.013, 0.202, 3.5}) {
        const double back = seconds_from_tau(tau_from_seconds(t, kReference), kReference);
        CHECK(back == doctest::Approx(t).epsilon(1e-12));
    }
}

TEST_CASE("drift field values") {
    const NormalizedParams n = reference_params();
    const Vec2 eq = drift_field(PlanarState{0.0, 1.0}, n);
    CHECK(eq.y == 0.0);
    CHECK(eq.z == 0.0);

    const Vec2 t = drift_field(PlanarState{1.0, 0.0}, n);
    CHECK(t.y == -n.big_gamma);
    CHECK(t.z == n.small_gamma);

    const Vec2 d = drift_field(PlanarState{0.5, -0.044117}, n);
    CHECK(d.y == doctest::Approx(-0.258).epsilon(5e-5));
    CHECK(d.z == doctest::Approx(0.043683).epsilon(5e-5));
}

TEST_CASE("control field is an infinitesimal rotation") {
    const Vec2 a = control_field(PlanarState{0.0, 1.0});
    CHECK(a.y == -1.0);
    CHECK(a.z == 0.0);
    const Vec2 b = control_field(PlanarState{1.0, 0.0});
    CHECK(b.y == 0.0);
    CHECK(b.z == 1.0);

    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 50; ++i) {
        const PlanarState s{u(rng), u(rng)};
        const Vec2 f1 = control_field(s);
        CHECK(std::abs(f1.y * s.y + f1.z * s.z) < 1e-15);
    }
}

TEST_CASE("rhs: bound check and special values") {
    const NormalizedParams n = reference_params();
    const Vec2 eq = rhs(PlanarState{0.0, 1.0}, 0.0, n);
    CHECK(eq.y == 0.0);
    CHECK(eq.z == 0.0);

    const Vec2 pole = rhs(PlanarState{0.0, 1.0}, -kTwoPi, n);
    CHECK(pole.y == kTwoPi);
    CHECK(pole.z == 0.0);

    CHECK_THROWS_AS(rhs(PlanarState{0.1, 0.1}, kTwoPi * 1.001, n), std::domain_error);
}

TEST_CASE("rhs: control cannot modify the radial velocity") {
    const NormalizedParams n = reference_params();
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> pos(-1.0, 1.0);
    std::uniform_real_distribution<double> ctl(-kTwoPi, kTwoPi);
    for (int i = 0; i < 200; ++i) {
        const PlanarState s{pos(rng), pos(rng)};
        const Vec2 v0 = rhs(s, ctl(rng), n);
        const Vec2 v1 = rhs(s, ctl(rng), n);
        const double r0 = v0.y * s.y + v0.z * s.z;
        const double r1 = v1.y * s.y + v1.z * s.z;
        CHECK(std::abs(r0 - r1) < 1e-12);
    }
}

TEST_CASE("singular locus: horizontal ordinate and defining determinant") {
    const NormalizedParams n = reference_params();
    const SingularLocus locus = singular_locus(n);
    REQUIRE(locus.horizontal_defined);
    CHECK(locus.z0 == doctest::Approx(-3.0 / 68.0).epsilon(1e-14));
    CHECK(locus.z0 == doctest::Approx(-0.044117647058823530).epsilon(1e-12));

    // det(F1, V) vanishes on both branches.
    for (double s = -0.95; s < 1.0; s += 0.1) {
        CHECK(std::abs(det_f1_v(PlanarState{0.0, s}, n)) < 1e-12);
        CHECK(std::abs(det_f1_v(PlanarState{s, locus.z0}, n)) < 1e-12);
    }
}

TEST_CASE("singular locus degenerates for t1 = t2") {
    const NormalizedParams n = normalize(PhysicalParams{0.5, 0.5, 10.0});
    const SingularLocus locus = singular_locus(n);
    CHECK_FALSE(locus.horizontal_defined);
    CHECK_THROWS_AS(singular_z0(n), degenerate_relaxation);
    CHECK_THROWS_AS(admissibility_bound(n), degenerate_relaxation);
}

TEST_CASE("singular control: values, oddness, vertical branch") {
    const NormalizedParams n = reference_params();
    const double z0 = singular_z0(n);

    CHECK(singular_control(PlanarState{0.0, 0.3}, n) == 0.0);
    CHECK(singular_control(PlanarState{0.0, z0}, n) == 0.0);

    // Independent oracle: on z = z0 the feedback must cancel dz/dtau, i.e.
    // u_s = -gamma*(1 - z0)/y.
    const double us = singular_control(PlanarState{0.5, z0}, n);
    CHECK(us == doctest::Approx(-n.small_gamma * (1.0 - z0) / 0.5).epsilon(1e-12));
    CHECK(us == doctest::Approx(-0.0874).epsilon(5e-3));

    for (double y = 0.05; y < 1.0; y += 0.07)
        CHECK(singular_control(PlanarState{-y, z0}, n) ==
              doctest::Approx(-singular_control(PlanarState{y, z0}, n)).epsilon(1e-14));
}

TEST_CASE("singular feedback pins dz/dtau to zero on the horizontal line") {
    const NormalizedParams n = reference_params();
    const double z0 = singular_z0(n);
    const double y_min = admissibility_bound(n);
    for (double y = y_min; y < 1.0; y += 0.02) {
        const PlanarState s{y, z0};
        const Vec2 v = rhs(s, singular_control(s, n), n);
        CHECK(std::abs(v.z) < 1e-10);
    }
}

TEST_CASE("admissibility bound: closed form vs bisection oracle") {
    const NormalizedParams n = reference_params();
    const double z0 = singular_z0(n);
    const double y_min = admissibility_bound(n);
    CHECK(y_min == doctest::Approx(0.006952).epsilon(2e-4));

    CHECK(std::abs(singular_control(PlanarState{y_min, z0}, n)) ==
          doctest::Approx(kTwoPi).epsilon(1e-6 / kTwoPi));
    CHECK(std::abs(singular_control(PlanarState{-y_min, z0}, n)) ==
          doctest::Approx(kTwoPi).epsilon(1e-6 / kTwoPi));

    // Bisection on |u_s(y, z0)| = 2*pi over (0, 1]; |u_s| decreases in |y|.
    double lo = 1e-6, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (std::abs(singular_control(PlanarState{mid, z0}, n)) > kTwoPi)
            lo = mid;
        else
            hi = mid;
    }
    CHECK(std::abs(0.5 * (lo + hi) - y_min) < 1e-6);
}

TEST_CASE("admissibility bound vanishes with the longitudinal rate") {
    const NormalizedParams n{1.0, 1e-9, kTwoPi};
    CHECK(admissibility_bound(n) < 1e-9);
}

TEST_CASE("polar diagnostics: values and consistency") {
    const NormalizedParams n = reference_params();

    const PolarDiagnostics eq = polar_diagnostics(PlanarState{0.0, 1.0}, n);
    CHECK(eq.r == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::abs(eq.r_dot) < 1e-15);

    const PolarDiagnostics t = polar_diagnostics(PlanarState{1.0, 0.0}, n);
    CHECK(t.r_dot == doctest::Approx(-n.big_gamma).epsilon(1e-14));
    CHECK(t.dr_dot_dtheta == doctest::Approx(n.small_gamma).epsilon(1e-14));

    CHECK_THROWS_AS(polar_diagnostics(PlanarState{0.0, 0.0}, n), std::domain_error);

    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int done = 0;
    while (done < 100) {
        const PlanarState s{u(rng), u(rng)};
        if (s.radius() < 1e-3 || s.radius() > 1.0) continue;
        ++done;
        const PolarDiagnostics d = polar_diagnostics(s, n);
        CHECK(std::abs(d.r * std::cos(d.theta) - s.y) < 1e-12);
        CHECK(std::abs(d.r * std::sin(d.theta) - s.z) < 1e-12);
        // Algebraic identity: det(F1,V) = r * dr_dot/dtheta.
        CHECK(std::abs(det_f1_v(s, n) - d.r * d.dr_dot_dtheta) < 1e-10);
    }
}

TEST_CASE("sign of det(F1,V) matches the sign of r*dr_dot/dtheta off the origin") {
    const NormalizedParams n = reference_params();
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int done = 0;
    while (done < 200) {
        const PlanarState s{u(rng), u(rng)};
        if (s.radius() < 1e-3 || s.radius() > 1.0) continue;
        ++done;
        const PolarDiagnostics d = polar_diagnostics(s, n);
        const double lhs = det_f1_v(s, n);
        if (std::abs(lhs) > 1e-9) CHECK(lhs * (d.r * d.dr_dot_dtheta) > 0.0);
    }
}
