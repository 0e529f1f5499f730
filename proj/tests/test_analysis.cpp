#include <cmath>

#include "doctest.h"
#include "specnet/analysis.hpp"
#include "specnet/errors.hpp"
#include "specnet/experiment.hpp"
#include "specnet/rng.hpp"

using namespace specnet;

namespace {

std::vector<TrajectoryRecord> synth_records(const std::vector<double>& phis,
                                            const std::vector<double>& thetas, long long stride) {
    std::vector<TrajectoryRecord> recs;
    for (std::size_t i = 0; i < phis.size(); ++i) {
        TrajectoryRecord r;
        r.t = static_cast<long long>(i) * stride;
        r.phi = phis[i];
        r.theta = thetas[i];
        recs.push_back(r);
    }
    return recs;
}

}  // namespace

TEST_CASE("stewart-sun bound arithmetic") {
    SUBCASE("documented examples") {
        SsBound a = stewart_sun_bound(1.0, 2.0, 1.0);
        CHECK(a.bound == doctest::Approx(0.5));
        CHECK(a.condition);
        SsBound b = stewart_sun_bound(1.0, 2.0, 2.5);
        CHECK(b.bound == doctest::Approx(1.25));
        CHECK(!b.condition);
        SsBound c = stewart_sun_bound(1.0, 2.0, 0.0);
        CHECK(c.bound == 0.0);
        CHECK(c.condition);
    }
    SUBCASE("zero gap rejected") {
        CHECK_THROWS_AS(stewart_sun_bound(1.0, 0.0, 1.0), ValidationError);
    }
    SUBCASE("monotone in its arguments") {
        RngStream rng(3);
        for (int trial = 0; trial < 200; ++trial) {
            double kappa = 1.0 + 4.0 * rng.next_double();
            double gamma = 0.5 + 4.0 * rng.next_double();
            double omega = 3.0 * rng.next_double();
            double bump = rng.next_double();
            CHECK(stewart_sun_bound(kappa + bump, gamma, omega).bound >=
                  stewart_sun_bound(kappa, gamma, omega).bound);
            CHECK(stewart_sun_bound(kappa, gamma + bump, omega).bound <=
                  stewart_sun_bound(kappa, gamma, omega).bound);
            CHECK(stewart_sun_bound(kappa, gamma, omega + bump).bound >=
                  stewart_sun_bound(kappa, gamma, omega).bound);
        }
    }
}

TEST_CASE("participation bound") {
    PerturbationLedger ledger(8);
    CHECK(participation_bound(ledger) == 0.0);
    ledger.record(SwapMove{0, 1, 2, 3});
    ledger.record(SwapMove{0, 2, 4, 5});
    CHECK(participation_bound(ledger) == 4.0);  // vertex 0 took part twice

    // Always dominates the spectral norm of omega.
    RngStream rng(10);
    for (int trial = 0; trial < 100; ++trial) {
        PerturbationLedger led(20);
        DirectedGraph g(20);
        for (int v = 0; v < 20; ++v) {
            g.add_edge(v, (v + 1) % 20);
            g.add_edge(v, (v + 3) % 20);
            g.add_edge(v, (v + 7) % 20);
        }
        for (int step = 0; step < 12; ++step) {
            auto m = static_cast<std::uint64_t>(g.edge_count());
            auto [a, b] = g.edge_at(static_cast<std::size_t>(rng.next_below(m)));
            auto [c, d] = g.edge_at(static_cast<std::size_t>(rng.next_below(m)));
            SwapMove mv{a, b, c, d};
            if (!g.swap_feasible(mv)) continue;
            g.apply_swap(mv);
            led.record(mv);
        }
        NormResult norm = spectral_norm(led.omega);
        CHECK(participation_bound(led) >= norm.value - 1e-9);
    }
}

TEST_CASE("degree angle bound") {
    SUBCASE("documented examples") {
        auto b = degree_angle_bound(0.0, 1.0, 2.0, 1.0);
        REQUIRE(b.has_value());
        CHECK(*b == doctest::Approx(std::asin(0.5)));
        auto zero = degree_angle_bound(0.3, 1.0, 2.0, 0.0);
        REQUIRE(zero.has_value());
        CHECK(*zero == doctest::Approx(0.3));
    }
    SUBCASE("condition failure yields no value") {
        CHECK(!degree_angle_bound(0.0, 1.0, 2.0, 2.5).has_value());
    }
    SUBCASE("clamped to the quarter turn") {
        auto b = degree_angle_bound(1.5, 1.0, 2.0, 1.9);
        REQUIRE(b.has_value());
        CHECK(*b == doctest::Approx(std::acos(-1.0) / 2));
    }
}

TEST_CASE("ensemble moments") {
    SUBCASE("single trajectory reproduces its own values") {
        auto recs = synth_records({0.1, 0.2, 0.3}, {0.5, 0.4, 0.6}, 10);
        MomentSummary s = ensemble_moments({recs});
        CHECK(s.ensemble_size == 1);
        CHECK(s.grid == std::vector<long long>{0, 10, 20});
        CHECK(s.e_phi[1] == doctest::Approx(0.2));
        CHECK(s.e_theta[2] == doctest::Approx(0.6));
        CHECK(s.var_phi[0] == doctest::Approx(0.0));
    }
    SUBCASE("pathwise monotone inputs give exactly monotone sample means") {
        RngStream rng(8);
        std::vector<std::vector<TrajectoryRecord>> ensemble;
        for (int r = 0; r < 32; ++r) {
            std::vector<double> phis(12), thetas(12);
            double phi = rng.next_double() * 0.1;
            for (int t = 0; t < 12; ++t) {
                phi += rng.next_double() * 0.05;
                phis[static_cast<std::size_t>(t)] = phi;
                thetas[static_cast<std::size_t>(t)] = rng.next_double();
            }
            ensemble.push_back(synth_records(phis, thetas, 5));
        }
        MomentSummary s = ensemble_moments(ensemble);
        for (std::size_t k = 1; k < s.grid.size(); ++k) {
            CHECK(s.e_phi[k] >= s.e_phi[k - 1]);
            CHECK(s.e_phi2[k] >= s.e_phi2[k - 1]);
        }
        for (double v : s.var_phi) CHECK(v >= -1e-12);
    }
    SUBCASE("disjoint grids are rejected") {
        std::vector<TrajectoryRecord> a = synth_records({0.1, 0.2}, {0.0, 0.0}, 10);
        std::vector<TrajectoryRecord> b = synth_records({0.1, 0.2}, {0.0, 0.0}, 10);
        for (auto& rec : b) rec.t += 5;  // 5, 15: never aligned with 0, 10
        CHECK_THROWS_AS(ensemble_moments({a, b}), ValidationError);
    }
    SUBCASE("shorter trajectories truncate the grid") {
        auto a = synth_records({0.1, 0.2, 0.3}, {0.0, 0.0, 0.0}, 10);
        auto b = synth_records({0.1, 0.2}, {0.0, 0.0}, 10);
        MomentSummary s = ensemble_moments({a, b});
        CHECK(s.truncated);
        CHECK(s.grid.size() == 2);
    }
    SUBCASE("off-stride terminal records aggregate on the intersection") {
        // First trajectory recorded 0,10,13 (terminal at t=13); second has
        // 0,10,20. Only 0 and 10 are common.
        auto a = synth_records({0.1, 0.2, 0.25}, {0.0, 0.0, 0.0}, 10);
        a[2].t = 13;
        auto b = synth_records({0.1, 0.3, 0.4}, {0.0, 0.0, 0.0}, 10);
        MomentSummary s = ensemble_moments({a, b});
        CHECK(s.grid == std::vector<long long>{0, 10});
        CHECK(s.truncated);
        CHECK(s.e_phi[1] == doctest::Approx(0.25));
    }
    SUBCASE("empty ensemble rejected") {
        CHECK_THROWS_AS(ensemble_moments({}), ValidationError);
    }
}

TEST_CASE("variance non-monotonicity is flagged, not asserted") {
    // Construct an ensemble whose variance provably shrinks late: all
    // trajectories converge to the same ceiling value.
    std::vector<std::vector<TrajectoryRecord>> ensemble;
    ensemble.push_back(synth_records({0.0, 0.5, 1.0}, {0, 0, 0}, 1));
    ensemble.push_back(synth_records({0.0, 0.1, 1.0}, {0, 0, 0}, 1));
    MomentSummary s = ensemble_moments(ensemble);
    CHECK(s.var_first_decrease == 2);
}

TEST_CASE("envelope fitting") {
    SUBCASE("all-zero angles give a zero envelope") {
        auto recs = synth_records({0.1, 0.2}, {0.0, 0.0}, 1);
        MomentSummary s = ensemble_moments({recs});
        EnvelopeInputs in;
        in.kappa_star = 2.0;
        in.gamma_star = 1.0;
        in.d_max_p = 3;
        in.d_max_q = 3;
        EnvelopeEstimate est = fit_envelope(s, in);
        CHECK(est.m_hat == 0.0);
    }
    SUBCASE("single grid point arithmetic") {
        auto recs = synth_records({0.5}, {0.2}, 1);
        MomentSummary s = ensemble_moments({recs});
        EnvelopeInputs in;
        in.stat = StatKind::k_cycle;
        in.kappa_star = 1.0;
        in.gamma_star = 2.0;
        in.r_budget = 3;
        in.d_max_p = 4;
        in.d_max_q = 5;
        EnvelopeEstimate est = fit_envelope(s, in);
        CHECK(est.m_hat == doctest::Approx(0.2 / 1.5));
        CHECK(est.lambda_phi == doctest::Approx(20.0));
        CHECK(est.composite == doctest::Approx(0.5 * 3 * 20.0));
        CHECK(est.ratio == doctest::Approx(est.m_hat / est.composite));
    }
    SUBCASE("assortativity uses the nu conversion factor") {
        auto recs = synth_records({0.3}, {0.1}, 1);
        MomentSummary s = ensemble_moments({recs});
        EnvelopeInputs in;
        in.stat = StatKind::assortativity;
        in.kappa_star = 2.0;
        in.gamma_star = 4.0;
        in.r_budget = 2;
        in.d_max_p = 6;
        in.d_max_q = 7;
        in.nu = 0.25;
        EnvelopeEstimate est = fit_envelope(s, in);
        CHECK(est.lambda_phi == doctest::Approx(0.25 * 42.0));
        CHECK(est.composite == doctest::Approx(0.5 * 2 * 0.25 * 42.0));
    }
    SUBCASE("the defining inequality holds at every grid point by construction") {
        RngStream rng(77);
        std::vector<double> phis, thetas;
        double phi = 0;
        for (int t = 0; t < 20; ++t) {
            phi += rng.next_double() * 0.1;
            phis.push_back(phi);
            thetas.push_back(rng.next_double());
        }
        MomentSummary s = ensemble_moments({synth_records(phis, thetas, 1)});
        EnvelopeInputs in;
        in.kappa_star = 1.0;
        in.gamma_star = 1.0;
        in.d_max_p = 1;
        in.d_max_q = 1;
        EnvelopeEstimate est = fit_envelope(s, in);
        for (std::size_t k = 0; k < s.grid.size(); ++k) {
            CHECK(s.e_theta[k] <= est.m_hat * (1.0 + std::abs(s.e_phi[k])) + 1e-12);
        }
    }
}

TEST_CASE("hill tail-index estimate") {
    SUBCASE("pareto-like degrees recover the exponent roughly") {
        RngStream rng(5);
        std::vector<int> degrees;
        const double alpha = 2.5;
        for (int i = 0; i < 5000; ++i) {
            double u = rng.next_double();
            degrees.push_back(
                static_cast<int>(std::floor(2.0 * std::pow(1.0 - u, -1.0 / alpha))));
        }
        double est = hill_alpha(degrees);
        CHECK(est > 1.8);
        CHECK(est < 3.2);
    }
    SUBCASE("constant tail returns infinity") {
        std::vector<int> degrees(100, 7);
        CHECK(std::isinf(hill_alpha(degrees)));
    }
}

TEST_CASE("log-log regression slope") {
    std::vector<double> xs{100, 200, 400}, ys;
    for (double x : xs) ys.push_back(3.0 * std::pow(x, 0.8));
    CHECK(loglog_slope(xs, ys) == doctest::Approx(0.8).epsilon(1e-9));
    CHECK_THROWS_AS(loglog_slope({1.0}, {1.0}), ValidationError);
}

TEST_CASE("bound report evaluation") {
    BaselineInfo baseline;
    baseline.kappa = 2.0;
    baseline.gamma = 4.0;
    baseline.theta0 = 0.1;
    baseline.lambda1 = 5.0;

    std::vector<TrajectoryRecord> recs;
    for (int t = 0; t <= 2; ++t) {
        TrajectoryRecord r;
        r.t = t;
        r.omega_norm = static_cast<double>(t);
        r.ss_bound = baseline.kappa * r.omega_norm / baseline.gamma;
        r.ss_condition = r.omega_norm < baseline.gamma / baseline.kappa;
        r.theta_rot = 0.1 * t;
        r.theta = 0.1 + 0.05 * t;
        r.kappa_t = 2.0 + 0.1 * t;
        r.gamma_t = 4.0 - 0.2 * t;
        r.dense_evaluated = true;
        recs.push_back(r);
    }
    BoundReport rep = evaluate_bounds(baseline, recs);
    CHECK(rep.rows.size() == 3);
    CHECK(rep.kappa_star == doctest::Approx(2.2));
    CHECK(rep.gamma_star == doctest::Approx(3.6));
    // t=0 and t=1 satisfy the condition (omega < 2), t=2 does not.
    CHECK(rep.conforming_rows == 2);
    CHECK(rep.violation_count == 0);
    CHECK(rep.rows[1].slack ==
          doctest::Approx(rep.rows[1].ss_bound - rep.rows[1].sin_rotation));
    CHECK(rep.rows[1].sin_rotation == doctest::Approx(std::sin(0.1)));
}
