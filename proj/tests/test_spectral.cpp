#include <Eigen/Dense>

#include <cmath>
#include <complex>

#include "doctest.h"
#include "specnet/errors.hpp"
#include "specnet/graph.hpp"
#include "specnet/rng.hpp"
#include "specnet/spectral.hpp"

using namespace specnet;

namespace {

DirectedGraph random_scc_digraph(int n, double p, RngStream& rng) {
    // Hamilton cycle plus random chords: strongly connected by construction.
    DirectedGraph g(n);
    for (int v = 0; v < n; ++v) g.add_edge(v, (v + 1) % n);
    for (int u = 0; u < n; ++u) {
        for (int v = 0; v < n; ++v) {
            if (u != v && !g.has_edge(u, v) && rng.next_double() < p) g.add_edge(u, v);
        }
    }
    return g;
}

Eigen::VectorXd uniform_unit(int n) {
    return Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
}

}  // namespace

TEST_CASE("power iteration on canonical graphs") {
    SUBCASE("directed three-cycle") {
        DirectedGraph g(3);
        g.add_edge(0, 1);
        g.add_edge(1, 2);
        g.add_edge(2, 0);
        PowerResult r = leading_right_eigenvector(g, uniform_unit(3));
        CHECK(r.converged);
        CHECK(r.lambda1 == doctest::Approx(1.0).epsilon(1e-10));
        for (int i = 0; i < 3; ++i) {
            CHECK(r.v[i] == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-9));
        }
    }
    SUBCASE("rank-one neutral: right vector is the unit out-degree vector") {
        std::vector<int> d_out{5, 3, 1, 2, 4}, d_in{3, 3, 3, 3, 3};
        Eigen::MatrixXd a = rank_one_neutral(d_out, d_in);
        DegreeVectors dv = DegreeVectors::of(d_out, d_in);
        PowerResult r = leading_right_eigenvector(a, dv.d_out_unit);
        CHECK(r.converged);
        CHECK(r.residual < 1e-10);
        CHECK(angle_between(r.v, dv.d_out_unit) < 1e-10);
        PowerResult l = leading_left_eigenvector(a, dv.d_in_unit);
        CHECK(angle_between(l.v, dv.d_in_unit) < 1e-10);
        CHECK(r.lambda1 == doctest::Approx(l.lambda1).epsilon(1e-9));
        // The only nonzero eigenvalue of the rank-one baseline.
        double dot = 0;
        for (std::size_t i = 0; i < d_out.size(); ++i) dot += double(d_out[i]) * d_in[i];
        CHECK(r.lambda1 == doctest::Approx(dot / 15.0).epsilon(1e-10));
    }
    SUBCASE("left equals right on symmetric graphs") {
        RngStream rng(42);
        DirectedGraph g(12);
        for (int u = 0; u < 12; ++u) {
            int v = (u + 1) % 12;
            g.add_edge(u, v);
            g.add_edge(v, u);
        }
        for (int u = 0; u < 12; ++u) {
            for (int v = u + 1; v < 12; ++v) {
                if (!g.has_edge(u, v) && rng.next_double() < 0.3) {
                    g.add_edge(u, v);
                    g.add_edge(v, u);
                }
            }
        }
        DegreeVectors dv = DegreeVectors::of(g);
        PowerResult r = leading_right_eigenvector(g, dv.d_out_unit);
        PowerResult l = leading_left_eigenvector(g, dv.d_in_unit);
        CHECK((r.v - l.v).norm() < 1e-9);
        CHECK(r.lambda1 == doctest::Approx(l.lambda1).epsilon(1e-9));
    }
}

TEST_CASE("power iteration agrees with the dense solver on random digraphs") {
    RngStream rng(2024);
    for (int trial = 0; trial < 12; ++trial) {
        int n = 10 + static_cast<int>(rng.next_below(41));
        DirectedGraph g = random_scc_digraph(n, 0.15, rng);
        DegreeVectors dv = DegreeVectors::of(g);
        PowerResult pr = leading_right_eigenvector(g, dv.d_out_unit);
        REQUIRE(pr.converged);

        Spectrum spec = full_spectrum(g.to_dense());
        double lambda_dense = std::abs(spec.eigenvalues[0]);
        CHECK(pr.lambda1 == doctest::Approx(lambda_dense).epsilon(1e-8));

        Eigen::VectorXcd lead = spec.eigenvectors.col(0);
        Eigen::VectorXd lead_real = lead.real();
        if (lead_real.norm() > 0) {
            lead_real.normalize();
            CHECK(angle_between(pr.v, lead_real) < 1e-6);
        }
    }
}

TEST_CASE("full spectrum ordering and reconstruction") {
    SUBCASE("diagonal ordering") {
        Eigen::MatrixXd a = Eigen::Vector3d(3, 1, -1).asDiagonal();
        Spectrum spec = full_spectrum(a);
        CHECK(spec.eigenvalues[0].real() == doctest::Approx(3.0));
        CHECK(spec.eigenvalues[1].real() == doctest::Approx(1.0));
        CHECK(spec.eigenvalues[2].real() == doctest::Approx(-1.0));
    }
    SUBCASE("three-cycle eigenvalues are the cube roots of unity") {
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 3);
        a(0, 1) = a(1, 2) = a(2, 0) = 1.0;
        Spectrum spec = full_spectrum(a);
        for (int k = 0; k < 3; ++k) {
            CHECK(std::abs(spec.eigenvalues[k]) == doctest::Approx(1.0).epsilon(1e-12));
        }
        // Tie-break puts the real root first.
        CHECK(spec.eigenvalues[0].real() == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("reconstruction error") {
        RngStream rng(5);
        for (int trial = 0; trial < 5; ++trial) {
            Eigen::MatrixXd a(30, 30);
            for (int i = 0; i < 30; ++i) {
                for (int j = 0; j < 30; ++j) a(i, j) = 2.0 * rng.next_double() - 1.0;
            }
            Spectrum spec = full_spectrum(a);
            Eigen::MatrixXcd lambda = spec.eigenvalues.asDiagonal();
            Eigen::MatrixXcd recon =
                spec.eigenvectors * lambda * spec.eigenvectors.inverse();
            double norm_a = a.norm();
            CHECK((recon - a.cast<std::complex<double>>()).norm() <= 1e-8 * norm_a);
        }
    }
    SUBCASE("dense cap enforced") {
        Eigen::MatrixXd a = Eigen::MatrixXd::Identity(5, 5);
        CHECK_THROWS_AS(full_spectrum(a, 4), ValidationError);
    }
}

TEST_CASE("spectral gap") {
    SUBCASE("real examples") {
        Eigen::VectorXcd vals(3);
        vals << 3.0, 1.0, -1.0;
        GapResult r = spectral_gap(vals);
        CHECK(r.simple);
        CHECK(r.gap == doctest::Approx(2.0));
    }
    SUBCASE("rank-one spectrum") {
        Eigen::VectorXcd vals(4);
        vals << 2.5, 0.0, 0.0, 0.0;
        CHECK(spectral_gap(vals).gap == doctest::Approx(2.5));
    }
    SUBCASE("complex modulus") {
        Eigen::VectorXcd vals(3);
        vals << std::complex<double>(2, 0), std::complex<double>(1, 1),
            std::complex<double>(1, -1);
        CHECK(spectral_gap(vals).gap == doctest::Approx(std::sqrt(2.0)));
    }
    SUBCASE("repeated leading eigenvalue flagged") {
        Eigen::VectorXcd vals(3);
        vals << 2.0, 2.0, 0.5;
        GapResult r = spectral_gap(vals);
        CHECK(!r.simple);
        CHECK(r.gap == 0.0);
    }
}

TEST_CASE("distortion factor") {
    SUBCASE("orthogonal basis gives one") {
        Eigen::MatrixXd q = Eigen::MatrixXd::Identity(4, 4);
        CHECK(distortion_factor(q) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("shear example: golden ratio squared") {
        Eigen::MatrixXd v(2, 2);
        v << 1, 1, 0, 1;
        // Oracle: singular values of [[1,1],[0,1]] are phi and 1/phi.
        CHECK(distortion_factor(v) == doctest::Approx(2.618033988749895).epsilon(1e-9));
        Eigen::MatrixXcd vc = v.cast<std::complex<double>>();
        CHECK(distortion_factor(vc) == doctest::Approx(2.618033988749895).epsilon(1e-9));
    }
    SUBCASE("symmetric matrices have orthogonal eigenbases") {
        RngStream rng(9);
        for (int trial = 0; trial < 5; ++trial) {
            Eigen::MatrixXd a(12, 12);
            for (int i = 0; i < 12; ++i) {
                for (int j = i; j < 12; ++j) {
                    double x = 2.0 * rng.next_double() - 1.0;
                    a(i, j) = x;
                    a(j, i) = x;
                }
            }
            Spectrum spec = full_spectrum(a);
            CHECK(distortion_factor(spec.eigenvectors) <= 1.0 + 1e-6);
        }
    }
    SUBCASE("singular matrix throws") {
        Eigen::MatrixXd v = Eigen::MatrixXd::Zero(3, 3);
        CHECK_THROWS_AS(distortion_factor(v), NumericalError);
    }
}

TEST_CASE("angle between vectors") {
    Eigen::VectorXd e1(2), e2(2), diag(2);
    e1 << 1, 0;
    e2 << 0, 1;
    diag << 1, 1;
    CHECK(angle_between(e1, e1) == doctest::Approx(0.0));
    CHECK(angle_between(e1, e2) == doctest::Approx(std::acos(-1.0) / 2));
    CHECK(angle_between(diag, e1) == doctest::Approx(std::acos(-1.0) / 4));
    CHECK_THROWS_AS(angle_between(Eigen::VectorXd::Zero(2), e1), ValidationError);

    // Exact symmetry properties.
    RngStream rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::VectorXd x(5), y(5);
        for (int i = 0; i < 5; ++i) {
            x[i] = 2.0 * rng.next_double() - 1.0;
            y[i] = 2.0 * rng.next_double() - 1.0;
        }
        double a = angle_between(x, y);
        CHECK(angle_between(y, x) == a);
        CHECK(angle_between(-x, y) == a);
        CHECK(a >= 0.0);
        CHECK(a <= std::acos(-1.0) / 2);
    }
}

TEST_CASE("sparse signed matrix bookkeeping") {
    SparseSignedMatrix m(6);
    m.add(0, 1, 1);
    m.add(0, 2, -1);
    m.add(3, 1, 1);
    CHECK(m.nonzero_count() == 3);
    CHECK(m.value(0, 1) == 1);
    m.add(0, 1, -1);  // cancel to zero: entry must disappear
    CHECK(m.value(0, 1) == 0);
    CHECK(m.nonzero_count() == 2);
    CHECK(m.row_abs_sums()[0] == 1);
    CHECK(m.col_abs_sums()[1] == 1);
    CHECK(m.max_row_abs_sum() == 1);

    // Caches match recomputation from the dense image.
    Eigen::MatrixXd dense = m.to_dense();
    for (int i = 0; i < 6; ++i) {
        CHECK(m.row_abs_sums()[static_cast<std::size_t>(i)] ==
              doctest::Approx(dense.row(i).cwiseAbs().sum()));
        CHECK(m.col_abs_sums()[static_cast<std::size_t>(i)] ==
              doctest::Approx(dense.col(i).cwiseAbs().sum()));
    }
}

TEST_CASE("sparse spectral norm") {
    SUBCASE("empty matrix") {
        SparseSignedMatrix m(5);
        NormResult r = spectral_norm(m);
        CHECK(r.value == 0.0);
        CHECK(r.cap == 0.0);
        CHECK(r.converged);
    }
    SUBCASE("single swap matrix has norm two") {
        // Delta = (e_a - e_c)(e_d - e_b)^T for distinct vertices: norm 2.
        RngStream rng(17);
        for (int trial = 0; trial < 25; ++trial) {
            int n = 6 + static_cast<int>(rng.next_below(10));
            std::vector<int> picks;
            while (picks.size() < 4) {
                int v = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
                bool dup = false;
                for (int p : picks) dup = dup || p == v;
                if (!dup) picks.push_back(v);
            }
            int a = picks[0], b = picks[1], c = picks[2], d = picks[3];
            SparseSignedMatrix delta(n);
            delta.add(a, b, -1);
            delta.add(c, d, -1);
            delta.add(a, d, 1);
            delta.add(c, b, 1);
            NormResult r = spectral_norm(delta);
            CHECK(r.converged);
            CHECK(r.value == doctest::Approx(2.0).epsilon(1e-9));
            // Dense SVD oracle.
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(delta.to_dense());
            CHECK(r.value == doctest::Approx(svd.singularValues()[0]).epsilon(1e-9));
        }
    }
    SUBCASE("norm never exceeds the analytic cap") {
        RngStream rng(23);
        for (int trial = 0; trial < 20; ++trial) {
            SparseSignedMatrix m(12);
            for (int k = 0; k < 15; ++k) {
                int i = static_cast<int>(rng.next_below(12));
                int j = static_cast<int>(rng.next_below(12));
                m.add(i, j, rng.next_double() < 0.5 ? 1 : -1);
            }
            NormResult r = spectral_norm(m);
            CHECK(r.value <= r.cap + 1e-9);
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(m.to_dense());
            CHECK(r.value == doctest::Approx(svd.singularValues()[0]).epsilon(1e-8));
        }
    }
}

TEST_CASE("spectral summary") {
    RngStream rng(77);
    DirectedGraph g = random_scc_digraph(24, 0.2, rng);
    SpectralSummary s = compute_spectral_summary(g);
    CHECK(s.v_right.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.v_left.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.gap >= 0.0);
    CHECK(s.kappa >= 1.0 - 1e-9);
    DegreeVectors dv = DegreeVectors::of(g);
    CHECK(s.v_right.dot(dv.d_out_unit) >= 0.0);
    CHECK(s.v_left.dot(dv.d_in_unit) >= 0.0);

    // Spectral gap of the rank-one neutral matrix equals lambda1.
    Eigen::MatrixXd neutral = rank_one_neutral(g.out_degrees(), g.in_degrees());
    Spectrum spec = full_spectrum(neutral);
    GapResult gap = spectral_gap(spec.eigenvalues);
    CHECK(gap.gap == doctest::Approx(std::abs(spec.eigenvalues[0])).epsilon(1e-9));
}
