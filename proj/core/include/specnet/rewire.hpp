#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "specnet/graph.hpp"
#include "specnet/netstats.hpp"
#include "specnet/spectral.hpp"

namespace specnet {

enum class StatKind { assortativity, community, core_periphery, k_cycle, triangle, cycle_grow };

const char* to_string(StatKind s);

enum class AngleFilter { off, pathwise_nondecreasing, mean_admissible };

struct RewiringPolicy {
    StatKind stat = StatKind::assortativity;

    // assortativity
    DegreeMode p = DegreeMode::out;
    DegreeMode q = DegreeMode::in;
    int sign = +1;

    // community / core-periphery
    Partition partition;
    bool cp_allow_peripheral_head = false;

    // k_cycle / triangle / cycle_grow
    int cycle_k = 3;

    int r_budget = 1;
    // Unset: strict for assortativity (avoids zero-delta churn), relaxed for
    // the structural statistics whose proposers already improve strictly.
    std::optional<bool> strict;
    AngleFilter angle_filter = AngleFilter::off;
    int mean_admissible_samples = 4;
    long long max_accepted = 100;
    long long max_proposals = 100000;
    SccGuard scc_guard = SccGuard::every_swap();
    int recorder_stride = 10;
    // Dense eigendecomposition (kappa_t, gamma_t) at record points; the
    // leading pair always comes from warm-started power iteration.
    bool dense_spectral_at_records = true;
    SpectralOptions spectral;
    CycleLimits cycle_limits;

    bool resolved_strict() const;
    void validate(const DirectedGraph& g) const;
};

// Cumulative signed adjacency perturbation plus per-node swap participation.
struct PerturbationLedger {
    SparseSignedMatrix omega;
    std::vector<int> participation;
    long long accepted = 0;

    explicit PerturbationLedger(int n);
    void record(const SwapMove& mv);
    int max_participation() const;
    bool within_budget(const SwapMove& mv, int r_budget) const;
};

struct TrajectoryRecord {
    long long t = 0;
    double phi = 0.0;        // driving statistic at t
    double theta = 0.0;      // angle(d_out_unit, v_right at t)
    double theta_rot = 0.0;  // angle(v_right at 0, v_right at t)
    double omega_norm = 0.0;
    double omega_cap = 0.0;  // 2 * max participation
    double kappa_t = 0.0;
    double gamma_t = 0.0;
    double lambda1_t = 0.0;
    bool ss_condition = true;  // omega_norm < gamma0 / kappa0
    double ss_bound = 0.0;     // kappa0 * omega_norm / gamma0
    long long proposals_tried = 0;
    std::string rng_digest;
    bool power_converged = true;
    bool omega_norm_converged = true;
    bool spectral_failed = false;   // dense decomposition failed at this record
    bool dense_evaluated = false;   // kappa_t/gamma_t carry fresh dense values
    // Cumulative wandering flags for the observational angle record.
    bool theta_increase_seen = false;
    bool theta_decrease_seen = false;
};

struct BaselineInfo {
    int n = 0;
    long long m = 0;
    double lambda1 = 0.0;
    double gamma = 0.0;
    double kappa = 1.0;
    double theta0 = 0.0;
    double phi0 = 0.0;
    double residual_right = 0.0;
    double residual_left = 0.0;
    bool gap_simple = true;
    bool near_defective = false;
    bool power_converged = true;
    Eigen::VectorXd v_right0;
    Eigen::VectorXd d_out_unit, d_in_unit;
};

enum class TerminationReason { reached_max_accepted, proposals_exhausted, no_admissible_move };

const char* to_string(TerminationReason r);

struct TrajectoryResult {
    DirectedGraph graph;
    PerturbationLedger ledger;
    std::vector<TrajectoryRecord> records;
    BaselineInfo baseline;
    TerminationReason reason = TerminationReason::reached_max_accepted;
    long long proposals_tried = 0;
    bool scc_final_ok = true;
};

struct ProposalResult {
    std::optional<SwapMove> move;
    long long attempts_used = 0;
};

// One-shot proposers. Each call draws up to `attempts` candidates and returns
// the first admissible move; absence is a value, not an error.
ProposalResult propose_assortativity_swap(const DirectedGraph& g, DegreeMode p, DegreeMode q,
                                          int sign, bool strict, RngStream& rng,
                                          long long attempts = 1);
ProposalResult propose_community_swap(const DirectedGraph& g, const Partition& partition,
                                      RngStream& rng, long long attempts = 1);
ProposalResult propose_core_periphery_swap(const DirectedGraph& g, const Partition& partition,
                                           bool allow_peripheral_head, RngStream& rng,
                                           long long attempts = 1);
ProposalResult propose_triangle_swap(const DirectedGraph& g, RngStream& rng,
                                     long long attempts = 1);
ProposalResult propose_k_cycle_swap(const DirectedGraph& g, int k, RngStream& rng,
                                    long long attempts = 1);

// Lengthens an existing simple directed cycle by one vertex: the returned pair
// of feasible swaps reroutes one cycle edge (u -> v) through a vertex w that is
// not on the cycle, using one out-edge and one in-edge of w as donors. Returns
// nullopt when no admissible donor configuration is found within `attempts`.
std::optional<std::vector<SwapMove>> grow_cycle(const DirectedGraph& g,
                                                const std::vector<int>& cycle, RngStream& rng,
                                                long long attempts = 256);

// Locates some simple directed k-cycle, or nullopt. Deterministic scan order.
std::optional<std::vector<int>> find_k_cycle(const DirectedGraph& g, int k);

using AcceptObserver = std::function<void(const DirectedGraph&, const PerturbationLedger&)>;

// Statistic-driven upper-contour rewiring loop: propose, enforce the
// participation budget, the statistic acceptance rule, the connectivity guard
// and the optional angle filter, and emit a record every recorder_stride
// accepted swaps (plus the baseline record at t = 0).
TrajectoryResult run_trajectory(const DirectedGraph& g0, const RewiringPolicy& policy,
                                std::uint64_t seed, const AcceptObserver& observer = {});

struct FractalOptions {
    std::vector<int> level_budgets;  // per-level participation budgets r(l)
    double core_fraction = 0.25;
    int sub_blocks_per_level = 2;
    int min_split_size = 4;
    DegreeMode split_mode = DegreeMode::out;
    bool allow_peripheral_head = false;
    long long max_proposals_per_phase = 20000;
    SccGuard scc_guard = SccGuard::every_swap();
};

struct FractalPhase {
    int level = 0;
    int block_index = 0;
    std::vector<int> members;
    Partition local_split;  // over all n vertices; members outside keep block 1
    long long internal_edges = 0;
    long long accepted = 0;
    double phi_before = 0.0;
    double phi_after = 0.0;
    std::vector<double> phi_trace;  // local contrast after each accepted swap
    bool skipped = false;
    std::string notice;
};

struct FractalResult {
    DirectedGraph graph;
    PerturbationLedger ledger;
    std::vector<FractalPhase> phases;
    std::vector<std::string> notices;
    long long total_accepted = 0;
    int levels = 0;
};

// Hierarchical core-periphery strengthening: level 0 rewires the degree-based
// split of the whole vertex set; every later level splits each periphery
// block into sub-blocks, splits those by local degree, and applies the same
// swap restricted to edges internal to the sub-block.
FractalResult run_fractal_core_periphery(const DirectedGraph& g0, const FractalOptions& opt,
                                         std::uint64_t seed);

// Staged long-cycle construction: ensures a triangle exists (closing one if
// needed), then grows it one vertex at a time to length k via grow_cycle
// batches. Records carry phi = current length / k.
TrajectoryResult run_cycle_growth(const DirectedGraph& g0, const RewiringPolicy& policy,
                                  std::uint64_t seed);

}  // namespace specnet
