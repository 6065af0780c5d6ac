#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "fcs/margins.hpp"
#include "fcs/numerics.hpp"
#include "support/aircraft.hpp"

using namespace fcs;
using namespace fcs::margins;

namespace {

LoopGainModel baseline_model(const fixtures::AircraftDesign& d) {
    return build_loop_model(d.ext, d.gains, d.dsn, DeltaPattern::none(4));
}

FrequencyGrid coarse_grid() {
    FrequencyGrid g;
    g.points = 800;
    return g;
}

} // namespace

TEST_SUITE("margins") {

TEST_CASE("pattern parsing round-trips") {
    const auto p = DeltaPattern::from_string("1010");
    CHECK(p.flags[0] == 1);
    CHECK(p.flags[1] == 0);
    CHECK(p.to_string() == "1010");
    CHECK_THROWS_AS(DeltaPattern::from_string("10x0"), Error);
}

TEST_CASE("inactive pattern reproduces the baseline loop exactly") {
    const auto& d = fixtures::aircraft_design();
    const auto model = baseline_model(d);
    CHECK(model.K_eff == d.gains.K_x());
    CHECK(model.A_eff == d.ext.A);

    // and the loop gain matches the directly-constructed baseline loop at
    // every grid point to 1e-12
    LoopGainModel direct;
    direct.pattern = DeltaPattern::none(4);
    direct.K_eff = d.gains.K_x();
    direct.A_eff = d.ext.A;
    direct.B_u = d.ext.B_u();
    for (double w : FrequencyGrid{1e-3, 1e4, 60}.omegas()) {
        const CMat l1 = loop_gain_at(model, w);
        const CMat l2 = loop_gain_at(direct, w);
        CHECK((l1 - l2).norm() <= 1e-12 * (1.0 + l2.norm()));
    }
}

TEST_CASE("scalar chain loop gain at zero frequency") {
    LoopGainModel m;
    m.pattern = DeltaPattern::none(0);
    m.K_eff = Mat{{1.0}};
    m.A_eff = Mat{{-1.0}};
    m.B_u = Mat{{1.0}};
    const CMat l = loop_gain_at(m, 0.0);
    CHECK(std::abs(l(0, 0) - std::complex<double>(1.0, 0.0)) <= 1e-14);
}

TEST_CASE("loop gain matches an eigendecomposition oracle") {
    const auto& d = fixtures::aircraft_design();
    const auto model = baseline_model(d);
    const double w = 1.0;
    const CMat l = loop_gain_at(model, w);

    Eigen::ComplexEigenSolver<CMat> es(model.A_eff.cast<std::complex<double>>());
    const CMat v = es.eigenvectors();
    CVec denom = es.eigenvalues();
    for (Eigen::Index i = 0; i < denom.size(); ++i)
        denom[i] = std::complex<double>(0.0, w) - denom[i];
    const CMat resolvent =
        v * denom.cwiseInverse().asDiagonal() * v.inverse() * model.B_u.cast<std::complex<double>>();
    const CMat l_oracle = model.K_eff.cast<std::complex<double>>() * resolvent;
    CHECK((l - l_oracle).norm() <= 1e-8 * (1.0 + l_oracle.norm()));
}

TEST_CASE("loop gain rolls off at high frequency") {
    const auto& d = fixtures::aircraft_design();
    const auto model = baseline_model(d);
    const double lo = loop_gain_at(model, 10.0).norm();
    const double hi = loop_gain_at(model, 1e4).norm();
    CHECK(hi < 1e-2 * lo);
    CHECK(hi < 0.05);
}

TEST_CASE("projection identities hold for every active pattern") {
    const auto& d = fixtures::aircraft_design();
    for (const char* bits : {"1000", "0100", "1100", "0010", "0001", "1111"})
        CHECK_NOTHROW(build_loop_model(d.ext, d.gains, d.dsn, DeltaPattern::from_string(bits)));
}

TEST_CASE("baseline aircraft margins: alpha in the LQR band, finite envelope") {
    const auto& d = fixtures::aircraft_design();
    const auto rep = mimo_margins(baseline_model(d), coarse_grid());
    REQUIRE(rep.stable);
    CHECK(rep.alpha >= 0.9);
    CHECK(rep.alpha <= 1.0);
    CHECK(rep.beta_defined);
    CHECK(rep.gm_db_lo < 0.0);
    CHECK(rep.gm_db_hi > 0.0);
    CHECK(rep.pm_deg > 30.0);
    // raw intervals are retained and bracket the envelope
    CHECK(rep.gm_db_lo <= rep.gm_alpha_db_lo);
    CHECK(rep.gm_db_lo <= rep.gm_beta_db_lo);
    CHECK(rep.pm_deg == doctest::Approx(std::max(rep.pm_alpha_deg, rep.pm_beta_deg)));
}

TEST_CASE("per-channel margins dominate the simultaneous envelope guarantee") {
    const auto& d = fixtures::aircraft_design();
    const auto rep = mimo_margins(baseline_model(d), coarse_grid());
    for (const auto& s : rep.siso) {
        if (s.pm_bounded) CHECK(s.pm_deg >= rep.pm_deg - 1e-6);
        if (s.gm_hi_bounded) CHECK(s.gm_hi_db >= rep.gm_db_hi - 1e-6);
        if (s.gm_lo_bounded) CHECK(s.gm_lo_db <= rep.gm_db_lo + 1e-6);
    }
}

TEST_CASE("textbook double-pole loop: phase margin 51.8 degrees at 0.786 rad/s") {
    LoopGainModel m;
    m.pattern = DeltaPattern::none(0);
    m.K_eff = Mat{{1.0, 0.0}};
    m.A_eff = Mat{{0.0, 1.0}, {0.0, -1.0}};
    m.B_u = Mat{{0.0}, {1.0}};
    const auto s = siso_margins(m, 0, coarse_grid());
    REQUIRE(s.pm_bounded);
    CHECK(s.pm_deg == doctest::Approx(51.8273).epsilon(1e-3));
    CHECK(s.pm_crossover_rad_s == doctest::Approx(0.7862).epsilon(1e-3));
    CHECK_FALSE(s.gm_hi_bounded);   // phase never reaches -180 at finite frequency
}

TEST_CASE("open loop: alpha is one, beta degenerate, channel flagged") {
    LoopGainModel m;
    m.pattern = DeltaPattern::none(2);
    m.K_eff = Mat::Zero(1, 2);
    m.A_eff = Mat{{-1.0, 0.0}, {0.0, -2.0}};
    m.B_u = Mat{{1.0}, {0.0}};
    const auto rep = mimo_margins(m, coarse_grid());
    REQUIRE(rep.stable);
    CHECK(rep.open_loop);
    CHECK(rep.open_channels == std::vector<int>{0});
    CHECK(rep.alpha == doctest::Approx(1.0));
    CHECK_FALSE(rep.beta_defined);
    CHECK_FALSE(rep.gm_hi_bounded);
    REQUIRE(rep.siso.size() == 1);
    CHECK(rep.siso[0].open_loop);
}

TEST_CASE("margins are withheld for an unstable closed loop") {
    LoopGainModel m;
    m.pattern = DeltaPattern::none(2);
    m.K_eff = Mat{{0.01, 0.0}};
    m.A_eff = Mat{{1.0, 0.0}, {0.0, -1.0}};
    m.B_u = Mat{{1.0}, {0.0}};
    const auto rep = mimo_margins(m, coarse_grid());
    CHECK_FALSE(rep.stable);
    CHECK(std::isnan(rep.alpha));
}

TEST_CASE("grid refinement changes the minima by less than 1e-3") {
    const auto& d = fixtures::aircraft_design();
    FrequencyGrid g1;
    g1.points = 2000;
    FrequencyGrid g2;
    g2.points = 4000;
    const auto r1 = mimo_margins(baseline_model(d), g1);
    const auto r2 = mimo_margins(baseline_model(d), g2);
    CHECK(std::abs(r1.alpha - r2.alpha) < 1e-3);
    CHECK(std::abs(r1.beta - r2.beta) < 1e-3);
}

TEST_CASE("all four published activity patterns pass the stability gate") {
    const auto& d = fixtures::aircraft_design();
    for (const char* bits : {"0000", "1000", "0100", "1100"}) {
        const auto model = build_loop_model(d.ext, d.gains, d.dsn, DeltaPattern::from_string(bits));
        CHECK(numerics::is_hurwitz(Mat(model.A_eff - model.B_u * model.K_eff), 1e-9));
        CHECK(mimo_margins(model, coarse_grid()).stable);
    }
}

TEST_CASE("saturation analysis: no channel saturated equals the inactive pattern") {
    const auto& d = fixtures::aircraft_design();
    const auto r1 = saturation_margins(d.ext, d.gains, {}, coarse_grid());
    const auto r2 = mimo_margins(baseline_model(d), coarse_grid());
    CHECK(r1.alpha == doctest::Approx(r2.alpha).epsilon(1e-12));
    CHECK(r1.beta == doctest::Approx(r2.beta).epsilon(1e-12));
}

TEST_CASE("saturation analysis: flags and structure per saturated set") {
    const auto& d = fixtures::aircraft_design();

    const auto sat_rudder = saturation_margins(d.ext, d.gains, {1}, coarse_grid());
    CHECK(sat_rudder.saturated == std::vector<int>{1});
    CHECK(sat_rudder.open_channels == std::vector<int>{1});
    CHECK(sat_rudder.winding_integrators == std::vector<int>{1});
    CHECK(sat_rudder.stable);   // aileron loop alone still stabilizes the rest

    const auto sat_aileron = saturation_margins(d.ext, d.gains, {0}, coarse_grid());
    CHECK(sat_aileron.open_channels == std::vector<int>{0});

    const auto sat_both = saturation_margins(d.ext, d.gains, {0, 1}, coarse_grid());
    CHECK(sat_both.open_loop);
    CHECK_FALSE(sat_both.stable);   // bare extended system keeps integrators at the origin
}

TEST_CASE("comparison table enumerates every scenario and treatment") {
    const auto& d = fixtures::aircraft_design();
    const auto rows = table2_report(d.ext, d.gains, d.dsn, coarse_grid());
    REQUIRE(rows.size() == 12);

    int n_na = 0, n_aw_stable = 0;
    for (const auto& row : rows) {
        if (row.treatment == "baseline" && !row.active_inputs.empty()) {
            CHECK_FALSE(row.report.has_value());
            CHECK(row.note.find("constraint violated") != std::string::npos);
            ++n_na;
        }
        if (row.treatment == "aw") {
            REQUIRE(row.report.has_value());
            CHECK(row.report->stable);
            ++n_aw_stable;
        }
    }
    CHECK(n_na == 3);
    CHECK(n_aw_stable == 4);
}

} // TEST_SUITE
