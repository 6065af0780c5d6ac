#include <doctest.h>

#include <random>

#include "fcs/design.hpp"
#include "fcs/numerics.hpp"
#include "support/aircraft.hpp"

using namespace fcs;
using namespace fcs::design;

namespace {

std::mt19937 rng(777);

model::Plant random_plant(int n_p, int m) {
    std::normal_distribution<double> dist;
    auto mat = [&](int r, int c) {
        Mat out(r, c);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) out(i, j) = dist(rng);
        return out;
    };
    model::Plant p;
    p.A_p = mat(n_p, n_p);
    p.A_p -= (numerics::spectrum(p.A_p).max_real() + 1.0) * Mat::Identity(n_p, n_p);
    p.B_p = mat(n_p, m);
    p.C_reg = mat(m, n_p);
    p.D_reg = mat(m, m);
    p.C_lim = mat(m, n_p);
    return p;
}

model::ServoGains random_gains(int n_p, int m) {
    std::normal_distribution<double> dist;
    model::ServoGains g;
    g.K_I = Mat::Identity(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) g.K_I(i, j) += 0.3 * dist(rng);
    g.K_P = Mat(m, n_p);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n_p; ++j) g.K_P(i, j) = dist(rng);
    return g;
}

model::ConstraintBox unit_box(int m) {
    model::ConstraintBox box;
    box.u_min = -Vec::Ones(m);
    box.u_max = Vec::Ones(m);
    box.z_min = -Vec::Ones(m);
    box.z_max = Vec::Ones(m);
    return box;
}

} // namespace

TEST_SUITE("design") {

TEST_CASE("lqr pi design on a double-integrator servo chain") {
    model::Plant p;
    p.A_p = Mat{{0.0, 1.0}, {0.0, 0.0}};
    p.B_p = Mat{{0.0}, {1.0}};
    p.C_reg = Mat{{1.0, 0.0}};
    p.D_reg = Mat{{0.0}};
    p.C_lim = Mat{{0.0, 1.0}};   // rate-limited channel, relative degree one
    const auto gains = lqr_pi_design(p, Mat::Identity(3, 3), Mat::Identity(1, 1));

    // residual + Hurwitz oracle on the extended closed loop
    Mat a = Mat::Zero(3, 3);
    a.topRightCorner(1, 2) = p.C_reg;
    a.bottomRightCorner(2, 2) = p.A_p;
    Mat b(3, 1);
    b << p.D_reg, p.B_p;
    CHECK(numerics::is_hurwitz(Mat(a - b * gains.K_x())));
    const auto sol = numerics::care_solve(a, b, Mat::Identity(3, 3), Mat::Identity(1, 1));
    CHECK(sol.residual <= 1e-9);
    CHECK((gains.K_x() - sol.k).norm() <= 1e-8 * sol.k.norm());
}

TEST_CASE("aircraft design: Hurwitz closed loop and invertible integral gain") {
    const auto& d = fixtures::aircraft_design();
    CHECK(numerics::is_hurwitz(Mat(d.ext.A - d.ext.B_u() * d.gains.K_x())));
    CHECK(std::abs(d.gains.K_I.determinant()) > 1e-6);
}

TEST_CASE("zero state cost is rejected: the integrator mode needs a weight") {
    // On the extended servo system, Q = 0 leaves the integrator pole at the
    // origin undetectable, so no stabilizing solution (and no invertible K_I)
    // exists; the design must refuse rather than return useless gains.
    model::Plant p;
    p.A_p = Mat{{-1.0}};
    p.B_p = Mat{{1.0}};
    p.C_reg = Mat{{1.0}};
    p.D_reg = Mat{{0.0}};
    p.C_lim = Mat{{1.0}};
    CHECK_THROWS_AS(lqr_pi_design(p, Mat::Zero(2, 2), Mat::Identity(1, 1)), Error);
}

TEST_CASE("relative degrees on the aircraft are all one") {
    const auto& d = fixtures::aircraft_design();
    const auto degrees = relative_degree(d.ext);
    REQUIRE(degrees.size() == 4);
    for (int deg : degrees) CHECK(deg == 1);

    // the nonzero entries that certify degree one for the output rows
    CHECK(d.ext.C_lim.row(2) * d.ext.B == Eigen::RowVectorXd{{0.0, 0.0, -7.9662, 2.6875}});
    CHECK((d.ext.C_lim.row(3) * d.ext.B)(3) == 0.015257);
}

TEST_CASE("relative degree two appears when the limited output is a position") {
    model::Plant p;
    p.A_p = Mat{{0.0, 1.0}, {0.0, 0.0}};
    p.B_p = Mat{{0.0}, {1.0}};
    p.C_reg = Mat{{0.0, 1.0}};
    p.D_reg = Mat{{0.0}};
    p.C_lim = Mat{{1.0, 0.0}};   // position output: two differentiations to reach u
    model::ServoGains g;
    g.K_I = Mat{{1.0}};
    g.K_P = Mat{{1.0, 1.0}};
    const auto ext = model::build_extended(p, g, unit_box(1));
    const auto degrees = relative_degree(ext);
    CHECK(degrees[0] == 1);
    CHECK(degrees[1] == 2);
}

TEST_CASE("an identically zero limited-output row is rejected") {
    model::Plant p;
    p.A_p = Mat{{-1.0}};
    p.B_p = Mat{{1.0}};
    p.C_reg = Mat{{1.0}};
    p.D_reg = Mat{{0.0}};
    p.C_lim = Mat{{0.0}};
    model::ServoGains g;
    g.K_I = Mat{{1.0}};
    g.K_P = Mat{{0.0}};
    const auto ext = model::build_extended(p, g, unit_box(1));
    CHECK_THROWS_AS(relative_degree(ext), Error);
}

TEST_CASE("published slope set maps to the diagonal of the slope matrix") {
    const auto& d = fixtures::aircraft_design();
    CHECK(d.dsn.alpha == Vec{{80.0, 8.0, 40.0, 40.0}});
    // integer-exact zero-order coefficients from integer roots
    PolynomialSpec spec;
    spec.roots = {{-2.0, -3.0}, {-4.0}};
    CHECK(spec.alpha()[0] == 6.0);
    CHECK(spec.alpha()[1] == 4.0);
}

TEST_CASE("polynomial spec validation") {
    PolynomialSpec spec = PolynomialSpec::from_alpha(Vec{{1.0, 2.0}});
    CHECK_NOTHROW(spec.validate({1, 1}));
    CHECK_THROWS_AS(spec.validate({1, 2}), Error);   // root count mismatch
    spec.roots[0][0] = 0.5;                          // unstable root
    CHECK_THROWS_AS(spec.validate({1, 1}), Error);
}

TEST_CASE("H_u block identity and inverse quality on random valid designs") {
    for (int rep = 0; rep < 12; ++rep) {
        const auto plant = random_plant(3, 2);
        const auto gains = random_gains(3, 2);
        const auto ext = model::build_extended(plant, gains, unit_box(2));
        AugmentationDesign dsn;
        try {
            dsn = build_sensitivities(ext, gains,
                                      PolynomialSpec::from_alpha(Vec{{3.0, 5.0, 2.0, 4.0}}));
        } catch (const Error& e) {
            // randomly singular H_w is legitimate rejection, not failure
            CHECK(std::string(e.code()).find("design.") == 0);
            continue;
        }
        CHECK((dsn.H_u_inv * dsn.H_u - Mat::Identity(4, 4)).norm() <= 1e-10 * dsn.H_u_condition);

        // one-term product for relative degree one: H_x = C_lim A + diag(alpha) C_lim
        const Mat expect = ext.C_lim * ext.A + dsn.alpha.asDiagonal() * ext.C_lim;
        CHECK((dsn.H_x - expect).norm() <= 1e-12 * std::max(1.0, expect.norm()));
    }
}

TEST_CASE("H_u closed form for unit integral gain and no feedthrough") {
    model::Plant p;
    p.A_p = Mat{{-1.0, 0.2}, {0.0, -2.0}};
    p.B_p = Mat{{1.0, 0.0}, {0.3, 1.0}};
    p.C_reg = Mat{{1.0, 0.0}, {0.0, 1.0}};
    p.D_reg = Mat::Zero(2, 2);
    p.C_lim = Mat{{0.5, 0.0}, {0.0, 2.0}};
    model::ServoGains g;
    g.K_I = Mat::Identity(2, 2);
    g.K_P = Mat::Zero(2, 2);
    const auto ext = model::build_extended(p, g, unit_box(2));
    const auto dsn =
        build_sensitivities(ext, g, PolynomialSpec::from_alpha(Vec{{1.0, 1.0, 1.0, 1.0}}));
    CHECK(dsn.H_u.topLeftCorner(2, 2) == Mat(-Mat::Identity(2, 2)));
    CHECK(dsn.H_u.topRightCorner(2, 2).isZero(1e-15));
    CHECK(dsn.H_u.bottomLeftCorner(2, 2).isZero(0.0));
    CHECK((dsn.H_u.bottomRightCorner(2, 2) - p.C_lim * p.B_p).norm() <= 1e-14);
}

} // TEST_SUITE
