// Acceptance suite: one self-contained check per shipped guarantee, one
// [PASS]/[FAIL] line each. Run with no arguments for the full battery or with
// a list of criterion numbers.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "specnet/analysis.hpp"
#include "specnet/errors.hpp"
#include "specnet/experiment.hpp"
#include "specnet/graph.hpp"
#include "specnet/netstats.hpp"
#include "specnet/rewire.hpp"
#include "specnet/rng.hpp"
#include "specnet/spectral.hpp"

using namespace specnet;
namespace fs = std::filesystem;

#ifndef SPECNET_CONFIG_DIR
#define SPECNET_CONFIG_DIR "configs"
#endif

namespace {

struct Outcome {
    bool pass = true;
    std::string details;

    void fail(const std::string& msg) {
        pass = false;
        if (!details.empty()) details += "; ";
        details += msg;
    }
    void note(const std::string& msg) {
        if (!details.empty()) details += "; ";
        details += msg;
    }
};

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.3g", x);
    return buf;
}

DirectedGraph random_digraph(int n, double p, RngStream& rng) {
    DirectedGraph g(n);
    for (int u = 0; u < n; ++u) {
        for (int v = 0; v < n; ++v) {
            if (u != v && rng.next_double() < p) g.add_edge(u, v);
        }
    }
    return g;
}

DirectedGraph powerlaw_baseline(int n, double alpha, int d_min, int d_max,
                                std::uint64_t seed) {
    GenerateSpec spec;
    spec.n = n;
    spec.degrees = DegreeModelSpec::parse("powerlaw");
    spec.degrees.alpha = alpha;
    spec.degrees.d_min = d_min;
    spec.degrees.d_max_cap = d_max;
    spec.compute_spectral = false;
    return generate_baseline(spec, seed).graph;
}

// Dense symmetric baseline with heterogeneous degrees: kappa is 1 and the
// spectral gap scales with the mean degree, so the Stewart-Sun condition is
// satisfiable at depth r >= 1.
DirectedGraph dense_reciprocal_baseline(int n, std::uint64_t seed) {
    RngStream rng(seed);
    std::vector<int> degrees(static_cast<std::size_t>(n));
    int lo = static_cast<int>(0.30 * n), hi = static_cast<int>(0.45 * n);
    long long total = 0;
    for (auto& d : degrees) {
        d = lo + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(hi - lo + 1)));
        total += d;
    }
    if (total % 2 != 0) ++degrees[0];
    return sample_reciprocal_graph(degrees, rng);
}

// Brute-force simple directed k-cycle count over ordered vertex tuples.
long long tuple_cycle_oracle(const DirectedGraph& g, int k) {
    const int n = g.vertex_count();
    std::vector<int> tuple;
    std::vector<char> used(static_cast<std::size_t>(n), 0);
    long long closed = 0;
    std::function<void()> rec = [&]() {
        if (static_cast<int>(tuple.size()) == k) {
            for (int i = 0; i < k; ++i) {
                if (!g.has_edge(tuple[static_cast<std::size_t>(i)],
                                tuple[static_cast<std::size_t>((i + 1) % k)])) {
                    return;
                }
            }
            ++closed;
            return;
        }
        for (int v = 0; v < n; ++v) {
            if (used[static_cast<std::size_t>(v)]) continue;
            used[static_cast<std::size_t>(v)] = 1;
            tuple.push_back(v);
            rec();
            tuple.pop_back();
            used[static_cast<std::size_t>(v)] = 0;
        }
    };
    rec();
    return closed / k;
}

RewiringPolicy mixed_policy(int which, const DirectedGraph& g, int r) {
    RewiringPolicy policy;
    switch (which % 4) {
        case 0:
            policy.stat = StatKind::assortativity;
            break;
        case 1:
            policy.stat = StatKind::core_periphery;
            policy.partition = Partition::degree_split(g, 0.25, DegreeMode::out);
            break;
        case 2:
            policy.stat = StatKind::community;
            policy.partition = Partition::contiguous_blocks(g.vertex_count(), 2);
            break;
        default:
            policy.stat = StatKind::triangle;
            break;
    }
    policy.r_budget = r;
    policy.max_accepted = 40;
    policy.max_proposals = 25000;
    policy.recorder_stride = 5;
    policy.dense_spectral_at_records = false;
    return policy;
}

// ---------------------------------------------------------------------------

Outcome criterion_1_rank_one_alignment() {
    Outcome out;
    RngStream rng(101);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        int n = 20 + static_cast<int>(rng.next_below(281));  // up to 300
        std::vector<int> d_out(static_cast<std::size_t>(n)), d_in(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            d_out[static_cast<std::size_t>(i)] = 1 + static_cast<int>(rng.next_below(20));
            d_in[static_cast<std::size_t>(i)] = 1 + static_cast<int>(rng.next_below(20));
        }
        Eigen::MatrixXd neutral = rank_one_neutral(d_out, d_in);
        DegreeVectors dv = DegreeVectors::of(d_out, d_in);
        PowerResult right = leading_right_eigenvector(neutral, dv.d_out_unit);
        PowerResult left = leading_left_eigenvector(neutral, dv.d_in_unit);
        double ar = angle_between(right.v, dv.d_out_unit);
        double al = angle_between(left.v, dv.d_in_unit);
        worst = std::max({worst, ar, al});
        if (!(ar < 1e-9) || !(al < 1e-9)) {
            out.fail("n=" + std::to_string(n) + " angle right=" + fmt(ar) + " left=" + fmt(al));
        }
    }
    out.note("20 sequences, worst angle " + fmt(worst) + " rad");
    return out;
}

Outcome criterion_2_single_swap_norm() {
    Outcome out;
    RngStream rng(202);
    double worst = 0.0;
    int done = 0;
    while (done < 1000) {
        int n = 12 + static_cast<int>(rng.next_below(20));
        DirectedGraph g = random_digraph(n, 0.25, rng);
        auto m = static_cast<std::uint64_t>(g.edge_count());
        if (m < 2) continue;
        for (int pick = 0; pick < 20 && done < 1000; ++pick) {
            auto [a, b] = g.edge_at(static_cast<std::size_t>(rng.next_below(m)));
            auto [c, d] = g.edge_at(static_cast<std::size_t>(rng.next_below(m)));
            SwapMove mv{a, b, c, d};
            if (!g.swap_feasible(mv)) continue;
            std::set<int> distinct{a, b, c, d};
            if (distinct.size() != 4) continue;

            SparseSignedMatrix delta(n);
            delta.add(mv.a, mv.b, -1);
            delta.add(mv.c, mv.d, -1);
            delta.add(mv.a, mv.d, +1);
            delta.add(mv.c, mv.b, +1);
            NormResult norm = spectral_norm(delta);
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(delta.to_dense());
            double oracle = svd.singularValues()[0];
            worst = std::max({worst, std::abs(norm.value - 2.0), std::abs(oracle - 2.0)});
            if (std::abs(norm.value - 2.0) > 1e-9 || std::abs(oracle - 2.0) > 1e-9) {
                out.fail("norm=" + fmt(norm.value) + " svd=" + fmt(oracle));
            }
            ++done;
        }
    }
    out.note("1000 swaps, worst |norm-2| " + fmt(worst));
    return out;
}

Outcome criterion_3_participation_cap() {
    Outcome out;
    const int r_values[] = {1, 2, 3, 5};
    long long records_checked = 0;
    int violations = 0;
    double max_ratio = 0.0;
    for (int i = 0; i < 100; ++i) {
        DirectedGraph g = powerlaw_baseline(200, 2.5, 2, 25, 3000 + static_cast<std::uint64_t>(i % 8));
        int r = r_values[(i / 4) % 4];
        RewiringPolicy policy = mixed_policy(i, g, r);
        TrajectoryResult res = run_trajectory(g, policy, 4000 + static_cast<std::uint64_t>(i));
        for (const auto& rec : res.records) {
            ++records_checked;
            if (rec.omega_cap > 0.0) max_ratio = std::max(max_ratio, rec.omega_norm / rec.omega_cap);
            if (rec.omega_norm > rec.omega_cap + 1e-9) {
                ++violations;
            }
            if (rec.omega_cap > 2.0 * r + 1e-9) ++violations;  // s(u) <= r must hold too
        }
    }
    if (violations > 0) out.fail(std::to_string(violations) + " violations");
    out.note(std::to_string(records_checked) + " records over 100 trajectories, max norm/cap " +
             fmt(max_ratio));
    return out;
}

Outcome criterion_4_assortativity_invariance() {
    Outcome out;
    int checked = 0;
    double worst_identity = 0.0;
    const DegreeMode modes[] = {DegreeMode::out, DegreeMode::in};
    for (int i = 0; i < 8; ++i) {
        DirectedGraph g = powerlaw_baseline(100, 2.5, 2, 20, 5000 + static_cast<std::uint64_t>(i));
        DegreeMode p = modes[i % 2], q = modes[(i / 2) % 2];
        AssortativityContext base = AssortativityContext::build(g, p, q);
        if (base.degenerate()) continue;
        Rational mu_t = base.mu_t_exact(), mu_h = base.mu_h_exact();
        Rational var_t = base.sigma_t2_exact(), var_h = base.sigma_h2_exact();
        double phi0 = base.phi();
        double nu = base.nu();
        long long s0 = base.s, m = base.m;

        RewiringPolicy policy;
        policy.stat = StatKind::assortativity;
        policy.p = p;
        policy.q = q;
        policy.r_budget = 4;
        policy.max_accepted = 50;
        policy.max_proposals = 30000;
        policy.recorder_stride = 10;
        policy.dense_spectral_at_records = false;

        bool exact_ok = true;
        double local_worst = 0.0;
        TrajectoryResult res = run_trajectory(
            g, policy, 6000 + static_cast<std::uint64_t>(i),
            [&](const DirectedGraph& cur, const PerturbationLedger&) {
                AssortativityContext now = AssortativityContext::build(cur, p, q);
                exact_ok = exact_ok && now.mu_t_exact() == mu_t && now.mu_h_exact() == mu_h &&
                           now.sigma_t2_exact() == var_t && now.sigma_h2_exact() == var_h;
                double lhs = now.phi() - phi0;
                double rhs = nu * static_cast<double>(now.s - s0) / static_cast<double>(m);
                local_worst = std::max(local_worst, std::abs(lhs - rhs));
            });
        checked += static_cast<int>(res.ledger.accepted);
        worst_identity = std::max(worst_identity, local_worst);
        if (!exact_ok) out.fail("exact moment invariance broken (p,q case " + std::to_string(i) + ")");
        if (local_worst > 1e-10) out.fail("phi identity residual " + fmt(local_worst));
    }
    out.note(std::to_string(checked) + " accepted swaps checked, worst identity residual " +
             fmt(worst_identity));
    return out;
}

Outcome criterion_5_stewart_sun() {
    Outcome out;
    const int sizes[] = {50, 150, 300};
    const int traj_per_size[] = {20, 20, 10};
    int trajectories = 0, conforming_records = 0, violations = 0;
    double min_slack = 1e9, min_theta_slack = 1e9;
    double min_slack_active = 1e9;  // excluding the trivial t=0 rows
    for (int si = 0; si < 3; ++si) {
        int n = sizes[si];
        DirectedGraph g = dense_reciprocal_baseline(n, 7000 + static_cast<std::uint64_t>(si));
        if (!is_strongly_connected(g)) {
            out.fail("baseline n=" + std::to_string(n) + " not strongly connected");
            continue;
        }
        for (int t = 0; t < traj_per_size[si]; ++t) {
            RewiringPolicy policy = mixed_policy(t, g, 1 + t % 2);
            policy.max_accepted = 20;
            policy.recorder_stride = 5;
            policy.dense_spectral_at_records = false;
            if (policy.stat == StatKind::assortativity) policy.strict = false;
            TrajectoryResult res =
                run_trajectory(g, policy, 7100 + static_cast<std::uint64_t>(si * 100 + t));
            ++trajectories;
            BoundReport rep = evaluate_bounds(res.baseline, res.records);
            conforming_records += rep.conforming_rows;
            violations += rep.violation_count;
            if (rep.conforming_rows > 0) {
                min_slack = std::min(min_slack, rep.min_slack);
                min_theta_slack = std::min(min_theta_slack, rep.min_theta_slack);
            }
            for (const auto& row : rep.rows) {
                if (row.t > 0 && row.condition) {
                    min_slack_active = std::min(min_slack_active, row.slack);
                }
            }
            // The tuned regime must actually bite: the condition holds at
            // every record of these runs.
            for (const auto& rec : res.records) {
                if (!rec.ss_condition) {
                    out.fail("condition failed at t=" + std::to_string(rec.t) +
                             " (n=" + std::to_string(n) + ")");
                }
            }
        }
    }
    if (violations > 0) out.fail(std::to_string(violations) + " bound violations");
    if (trajectories < 50) out.fail("only " + std::to_string(trajectories) + " trajectories");
    out.note(std::to_string(trajectories) + " trajectories, " +
             std::to_string(conforming_records) + " conforming records, min slack " +
             fmt(min_slack) + " (t>0: " + fmt(min_slack_active) + "), min theta slack " +
             fmt(min_theta_slack));
    return out;
}

Outcome criterion_6_cycle_oracles() {
    Outcome out;
    RngStream rng(606);
    for (int trial = 0; trial < 100; ++trial) {
        int n = 4 + static_cast<int>(rng.next_below(4));
        DirectedGraph g = random_digraph(n, 0.35, rng);
        for (int k = 3; k <= 5; ++k) {
            if (n < k) continue;
            if (k_cycle_count(g, k) != tuple_cycle_oracle(g, k)) {
                out.fail("count mismatch n=" + std::to_string(n) + " k=" + std::to_string(k));
            }
        }
    }
    for (int trial = 0; trial < 100; ++trial) {
        DirectedGraph g = random_digraph(50, 0.06, rng);
        if (triangle_count_trace(g) != k_cycle_count(g, 3)) {
            out.fail("trace route mismatch at trial " + std::to_string(trial));
        }
    }
    out.note("100 small digraphs x k in {3,4,5} and 100 n=50 trace cross-checks, exact");
    return out;
}

Outcome criterion_7_structure_monotonicity() {
    Outcome out;

    // Community: cross-block edge count falls by exactly 2 per accepted move.
    {
        DirectedGraph g = powerlaw_baseline(80, 2.5, 2, 18, 7770);
        Partition part = Partition::contiguous_blocks(80, 3);
        RewiringPolicy policy;
        policy.stat = StatKind::community;
        policy.partition = part;
        policy.r_budget = 4;
        policy.max_accepted = 40;
        policy.max_proposals = 30000;
        policy.dense_spectral_at_records = false;
        auto cross = [&part](const DirectedGraph& cur) {
            long long c = 0;
            for (auto [u, v] : cur.edges()) {
                c += part.block_of[static_cast<std::size_t>(u)] !=
                     part.block_of[static_cast<std::size_t>(v)];
            }
            return c;
        };
        long long prev = cross(g);
        long long steps = 0;
        run_trajectory(g, policy, 811, [&](const DirectedGraph& cur, const PerturbationLedger&) {
            long long now = cross(cur);
            if (now != prev - 2) out.fail("community cross-block delta != -2");
            prev = now;
            ++steps;
        });
        if (steps == 0) out.fail("community run accepted nothing");
        out.note("community: " + std::to_string(steps) + " moves, cross-block -2 each");
    }

    // Core-periphery: periphery-internal count falls by exactly 1 per move.
    {
        DirectedGraph g = powerlaw_baseline(80, 2.5, 2, 18, 7771);
        Partition part = Partition::degree_split(g, 0.25, DegreeMode::out);
        RewiringPolicy policy;
        policy.stat = StatKind::core_periphery;
        policy.partition = part;
        policy.r_budget = 4;
        policy.max_accepted = 40;
        policy.max_proposals = 30000;
        policy.dense_spectral_at_records = false;
        long long prev = periphery_internal_edges(g, part);
        long long steps = 0;
        run_trajectory(g, policy, 812, [&](const DirectedGraph& cur, const PerturbationLedger&) {
            long long now = periphery_internal_edges(cur, part);
            if (now != prev - 1) out.fail("cp periphery delta != -1");
            prev = now;
            ++steps;
        });
        if (steps == 0) out.fail("cp run accepted nothing");
        out.note("cp: " + std::to_string(steps) + " moves, L->L -1 each");
    }

    // k-cycle: the count grows by at least one per accepted move. Verified by
    // the tuple oracle on n <= 7 and by full recounts at larger n.
    {
        RngStream rng(7772);
        long long small_checked = 0;
        for (int trial = 0; trial < 60 && small_checked < 12; ++trial) {
            DirectedGraph g = random_digraph(7, 0.3, rng);
            if (!is_strongly_connected(g)) continue;
            RewiringPolicy policy;
            policy.stat = StatKind::k_cycle;
            policy.cycle_k = 3;
            policy.r_budget = 3;
            policy.max_accepted = 3;
            policy.max_proposals = 2000;
            policy.dense_spectral_at_records = false;
            long long prev = tuple_cycle_oracle(g, 3);
            TrajectoryResult res = run_trajectory(
                g, policy, 813 + static_cast<std::uint64_t>(trial),
                [&](const DirectedGraph& cur, const PerturbationLedger&) {
                    long long now = tuple_cycle_oracle(cur, 3);
                    if (now < prev + 1) out.fail("small-graph cycle delta < +1");
                    prev = now;
                    ++small_checked;
                });
            (void)res;
        }
        DirectedGraph g = powerlaw_baseline(60, 2.5, 2, 15, 7773);
        RewiringPolicy policy;
        policy.stat = StatKind::k_cycle;
        policy.cycle_k = 3;
        policy.r_budget = 4;
        policy.max_accepted = 25;
        policy.max_proposals = 30000;
        policy.recorder_stride = 1;
        policy.dense_spectral_at_records = false;
        long long prev = k_cycle_count(g, 3);
        long long big_checked = 0;
        TrajectoryResult res = run_trajectory(
            g, policy, 814, [&](const DirectedGraph& cur, const PerturbationLedger&) {
                long long now = k_cycle_count(cur, 3);
                if (now < prev + 1) out.fail("large-graph cycle delta < +1");
                prev = now;
                ++big_checked;
            });
        // Incremental counter consistency: the recorded density matches the
        // final recount.
        long long denom = complete_k_cycle_count(60, 3);
        double recorded = res.records.back().phi;
        double recounted =
            static_cast<double>(k_cycle_count(res.graph, 3)) / static_cast<double>(denom);
        if (recorded != recounted) out.fail("incremental cycle counter drifted");
        if (small_checked == 0 || big_checked == 0) out.fail("cycle runs accepted nothing");
        out.note("cycles: " + std::to_string(small_checked) + " oracle-checked + " +
                 std::to_string(big_checked) + " recount-checked moves");
    }
    return out;
}

Outcome criterion_8_sample_monotone_moments() {
    Outcome out;
    struct Setup {
        StatKind stat;
        double shift;
        const char* name;
    };
    const Setup setups[] = {{StatKind::k_cycle, 0.0, "k_cycle"},
                            {StatKind::core_periphery, 1.0, "cp+1"}};
    for (const auto& setup : setups) {
        DirectedGraph g = powerlaw_baseline(70, 2.5, 2, 16, 8800);
        std::vector<std::vector<TrajectoryRecord>> ensemble;
        for (int i = 0; i < 32; ++i) {
            RewiringPolicy policy;
            policy.stat = setup.stat;
            policy.cycle_k = 3;
            if (setup.stat == StatKind::core_periphery) {
                policy.partition = Partition::degree_split(g, 0.25, DegreeMode::out);
            }
            policy.r_budget = 4;
            policy.max_accepted = 20;
            policy.max_proposals = 40000;
            policy.recorder_stride = 4;
            policy.dense_spectral_at_records = false;
            TrajectoryResult res =
                run_trajectory(g, policy, 8900 + static_cast<std::uint64_t>(i));
            if (res.reason != TerminationReason::reached_max_accepted) {
                out.fail(std::string(setup.name) + ": trajectory " + std::to_string(i) +
                         " exhausted early");
            }
            ensemble.push_back(res.records);
        }
        MomentSummary moments = ensemble_moments(ensemble);
        // Shifted sample moments, accumulated in trajectory order.
        std::vector<double> m1(moments.grid.size(), 0.0), m2(moments.grid.size(), 0.0);
        for (const auto& records : ensemble) {
            for (std::size_t k = 0; k < moments.grid.size(); ++k) {
                double v = records[k].phi + setup.shift;
                m1[k] += v;
                m2[k] += v * v;
            }
        }
        for (std::size_t k = 1; k < m1.size(); ++k) {
            if (!(m1[k] >= m1[k - 1])) out.fail(std::string(setup.name) + ": E[phi] decreased");
            if (!(m2[k] >= m2[k - 1])) out.fail(std::string(setup.name) + ": E[phi^2] decreased");
        }
        std::string flag = moments.var_first_decrease >= 0
                               ? "var first decrease at grid index " +
                                     std::to_string(moments.var_first_decrease)
                               : "variance monotone on this run";
        out.note(std::string(setup.name) + ": R=32 exact-monotone, " + flag);
    }
    return out;
}

Outcome criterion_9_envelope_sweep() {
    Outcome out;
    const int sizes[] = {100, 200, 400};
    const double alphas[] = {2.2, 3.0};
    std::string slopes;
    for (double alpha : alphas) {
        std::vector<double> ns, mhats;
        for (int n : sizes) {
            DirectedGraph g =
                powerlaw_baseline(n, alpha, 2, std::max(12, n / 8),
                                  9900 + static_cast<std::uint64_t>(n) +
                                      static_cast<std::uint64_t>(alpha * 10));
            std::vector<std::vector<TrajectoryRecord>> ensemble;
            RewiringPolicy policy;
            policy.stat = StatKind::core_periphery;
            policy.partition = Partition::degree_split(g, 0.25, DegreeMode::out);
            policy.r_budget = 3;
            policy.max_accepted = 24;
            policy.max_proposals = 40000;
            policy.recorder_stride = 6;
            policy.dense_spectral_at_records = false;
            BaselineInfo baseline;
            for (int i = 0; i < 6; ++i) {
                TrajectoryResult res =
                    run_trajectory(g, policy, 9800 + static_cast<std::uint64_t>(i));
                baseline = res.baseline;
                ensemble.push_back(res.records);
            }
            MomentSummary moments = ensemble_moments(ensemble);
            BoundReport rep = evaluate_bounds(baseline, ensemble);
            EnvelopeInputs inputs;
            inputs.stat = StatKind::core_periphery;
            inputs.r_budget = policy.r_budget;
            inputs.kappa_star = rep.kappa_star;
            inputs.gamma_star = rep.gamma_star;
            inputs.d_max_p = *std::max_element(g.out_degrees().begin(), g.out_degrees().end());
            inputs.d_max_q = *std::max_element(g.in_degrees().begin(), g.in_degrees().end());
            inputs.alpha_configured = alpha;
            inputs.degrees = g.out_degrees();
            EnvelopeEstimate est = fit_envelope(moments, inputs);
            if (!std::isfinite(est.m_hat)) out.fail("m_hat not finite");
            // Defining inequality holds on the grid by construction.
            for (std::size_t k = 0; k < moments.grid.size(); ++k) {
                if (moments.e_theta[k] > est.m_hat * (1.0 + std::abs(moments.e_phi[k])) + 1e-12) {
                    out.fail("envelope inequality violated at a grid point");
                }
            }
            if (!(est.composite > 0.0)) out.fail("composite not positive");
            ns.push_back(static_cast<double>(n));
            mhats.push_back(std::max(est.m_hat, 1e-12));
        }
        double slope = loglog_slope(ns, mhats);
        slopes += "alpha=" + fmt(alpha) + ": slope " + fmt(slope) + " vs 2/alpha " +
                  fmt(2.0 / alpha) + "  ";
    }
    out.note("reported (not asserted): " + slopes);
    return out;
}

Outcome criterion_10_determinism() {
    Outcome out;
    ExperimentConfig cfg;
    cfg.n = 60;
    cfg.degrees = DegreeModelSpec::parse("powerlaw");
    cfg.degrees.alpha = 2.5;
    cfg.degrees.d_min = 2;
    cfg.degrees.d_max_cap = 14;
    cfg.policy.stat = "core_periphery";
    cfg.policy.r = 3;
    cfg.policy.max_accepted = 16;
    cfg.policy.max_proposals = 30000;
    cfg.policy.stride = 4;
    cfg.policy.dense_spectral_at_records = false;
    cfg.ensemble_size = 8;
    cfg.master_seed = 4242;

    fs::path base = fs::temp_directory_path() / "specnet_acceptance_det";
    fs::remove_all(base);
    fs::path d1 = base / "w1", d8 = base / "w8";
    run_ensemble(cfg, d1, 1);
    run_ensemble(cfg, d8, 8);

    int compared = 0;
    for (const auto& entry : fs::directory_iterator(d1)) {
        std::string name = entry.path().filename().string();
        std::string a = read_text_file(d1 / name);
        std::string b = read_text_file(d8 / name);
        if (a != b) out.fail(name + " differs between worker counts");
        ++compared;
    }
    if (compared < 10) out.fail("too few files compared");
    out.note(std::to_string(compared) + " files byte-identical at workers 1 vs 8");
    fs::remove_all(base);
    return out;
}

Outcome criterion_11_wandering_angle() {
    Outcome out;
    fs::path config_path = fs::path(SPECNET_CONFIG_DIR) / "assortativity_wander.json";
    ExperimentConfig cfg = ExperimentConfig::from_json_text(read_text_file(config_path));

    GenerateSpec gen;
    gen.n = cfg.n;
    gen.degrees = cfg.degrees;
    gen.randomize_steps = cfg.randomize_steps;
    gen.compute_spectral = false;
    DirectedGraph g = generate_baseline(gen, RngStream::derive(cfg.master_seed, 0)).graph;
    RewiringPolicy policy = resolve_policy(cfg.policy, g);

    bool wandering_seen = false;
    std::string detail;
    for (int i = 0; i < cfg.ensemble_size && !wandering_seen; ++i) {
        TrajectoryResult res = run_trajectory(
            g, policy, RngStream::derive(cfg.master_seed, static_cast<std::uint64_t>(i + 1)));
        const auto& last = res.records.back();
        if (last.theta_increase_seen && last.theta_decrease_seen) {
            wandering_seen = true;
            detail = "trajectory " + std::to_string(i) + " wandered (theta rose and fell across " +
                     std::to_string(res.records.size()) + " records)";
        }
    }
    if (!wandering_seen) {
        out.fail("no seeded trajectory in the shipped config wandered");
    } else {
        out.note(detail + "; observation recorded, no monotonicity asserted");
    }
    return out;
}

struct Criterion {
    int number;
    const char* title;
    Outcome (*run)();
};

const Criterion kCriteria[] = {
    {1, "rank-one neutral alignment", criterion_1_rank_one_alignment},
    {2, "single-swap spectral norm", criterion_2_single_swap_norm},
    {3, "participation-capped perturbation norm", criterion_3_participation_cap},
    {4, "assortativity moment invariance", criterion_4_assortativity_invariance},
    {5, "eigenvector rotation bound", criterion_5_stewart_sun},
    {6, "cycle count oracle equivalence", criterion_6_cycle_oracles},
    {7, "structure monotonicity per move", criterion_7_structure_monotonicity},
    {8, "sample moment monotonicity", criterion_8_sample_monotone_moments},
    {9, "moment envelope and size sweep", criterion_9_envelope_sweep},
    {10, "worker-count determinism", criterion_10_determinism},
    {11, "wandering angle observation", criterion_11_wandering_angle},
};

}  // namespace

int main(int argc, char** argv) {
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

    int failures = 0;
    for (const auto& criterion : kCriteria) {
        if (!selected.empty() && !selected.count(criterion.number)) continue;
        auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = criterion.run();
        } catch (const std::exception& e) {
            outcome.fail(std::string("exception: ") + e.what());
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("[%s] criterion %2d: %s (%.1fs)%s%s\n", outcome.pass ? "PASS" : "FAIL",
                    criterion.number, criterion.title, secs, outcome.details.empty() ? "" : " - ",
                    outcome.details.c_str());
        std::fflush(stdout);
        if (!outcome.pass) ++failures;
    }
    if (failures == 0) {
        std::printf("acceptance: all criteria passed\n");
    } else {
        std::printf("acceptance: %d criteria FAILED\n", failures);
    }
    return failures == 0 ? 0 : 1;
}
