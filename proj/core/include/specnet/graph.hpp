#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "specnet/rng.hpp"

namespace specnet {

// Degree-preserving two-edge rewiring step: removes (a,b) and (c,d),
// adds (a,d) and (c,b). Feasible when both removed edges are present,
// neither added edge is present, and no added edge is a self-loop.
struct SwapMove {
    int a = 0, b = 0, c = 0, d = 0;

    std::pair<int, int> removed_first() const { return {a, b}; }
    std::pair<int, int> removed_second() const { return {c, d}; }
    std::pair<int, int> added_first() const { return {a, d}; }
    std::pair<int, int> added_second() const { return {c, b}; }

    // Applying the inverse restores the original edge set.
    SwapMove inverse() const { return SwapMove{a, d, c, b}; }

    bool operator==(const SwapMove&) const = default;
};

// Simple directed graph with a fixed vertex count, O(1) edge membership,
// O(1) uniform edge sampling and degree arrays maintained on every mutation.
// Single-writer: one trajectory mutates an instance at a time; concurrent
// read-only access to a non-mutating instance is safe.
class DirectedGraph {
public:
    explicit DirectedGraph(int n);

    // Parses the edge-list format: first line "n <N>", then "<u> <v>" lines,
    // '#' starts a comment, blank lines ignored.
    static DirectedGraph from_edge_list(const std::string& text);

    // Canonical serialization: edges sorted lexicographically by (u, v).
    std::string to_edge_list() const;

    int vertex_count() const { return n_; }
    long long edge_count() const { return static_cast<long long>(edges_.size()); }

    bool has_edge(int u, int v) const;
    void add_edge(int u, int v);
    void remove_edge(int u, int v);

    const std::vector<int>& out_degrees() const { return out_deg_; }
    const std::vector<int>& in_degrees() const { return in_deg_; }
    int out_degree(int u) const { return out_deg_[static_cast<std::size_t>(u)]; }
    int in_degree(int u) const { return in_deg_[static_cast<std::size_t>(u)]; }

    // Edge order reflects mutation history; uniform sampling over this vector
    // is uniform over the current edge set.
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }
    std::pair<int, int> edge_at(std::size_t idx) const { return edges_[idx]; }

    const std::vector<int>& out_neighbors(int u) const {
        return out_adj_[static_cast<std::size_t>(u)];
    }
    const std::vector<int>& in_neighbors(int v) const {
        return in_adj_[static_cast<std::size_t>(v)];
    }

    bool swap_feasible(const SwapMove& mv) const;
    // Explains the first violated feasibility condition, or nullopt if feasible.
    std::optional<std::string> swap_infeasible_reason(const SwapMove& mv) const;
    // Throws InfeasibleError when the move is not feasible.
    void apply_swap(const SwapMove& mv);

    Eigen::MatrixXd to_dense() const;

    bool operator==(const DirectedGraph& other) const {
        return n_ == other.n_ && to_edge_list() == other.to_edge_list();
    }

private:
    void check_vertex(int v, const char* what) const;
    static std::uint64_t key(int u, int v) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(u)) << 32) |
               static_cast<std::uint32_t>(v);
    }

    int n_ = 0;
    std::vector<std::pair<int, int>> edges_;
    std::unordered_map<std::uint64_t, std::size_t> edge_index_;
    std::vector<std::vector<int>> out_adj_, in_adj_;
    std::vector<int> out_deg_, in_deg_;
};

// Raw degree sequences plus their unit-norm real counterparts.
struct DegreeVectors {
    std::vector<int> out_deg, in_deg;
    Eigen::VectorXd d_out_unit, d_in_unit;

    static DegreeVectors of(const DirectedGraph& g);
    static DegreeVectors of(const std::vector<int>& out_deg, const std::vector<int>& in_deg);
};

// True iff the graph is a single strongly connected component spanning all
// vertices (vacuously true for n <= 1).
bool is_strongly_connected(const DirectedGraph& g);

// Degree-only rank-one baseline: entry (i,j) = d_out[i] * d_in[j] / m.
Eigen::MatrixXd rank_one_neutral(const std::vector<int>& d_out, const std::vector<int>& d_in);

struct ConfigModelOptions {
    int max_restarts = 100;
    // Within one restart, colliding stub pairs are re-drawn up to
    // redraw_factor * m times before the restart is abandoned.
    long long redraw_factor = 50;
};

// Realizes an exact 0/1 graph with the given in/out degree sequences by stub
// matching with collision re-draws and full restarts. Throws InfeasibleError
// when the retry budget is exhausted.
DirectedGraph sample_configuration_model(const std::vector<int>& d_out,
                                         const std::vector<int>& d_in,
                                         RngStream& rng,
                                         const ConfigModelOptions& opt = {});

// How often the strong-connectivity guard runs during randomization and
// statistic-driven rewiring.
struct SccGuard {
    enum class Mode { every_swap, every_k, initial_only };
    Mode mode = Mode::every_swap;
    int k = 1;

    static SccGuard every_swap() { return {Mode::every_swap, 1}; }
    static SccGuard every_k(int k) { return {Mode::every_k, k}; }
    static SccGuard initial_only() { return {Mode::initial_only, 1}; }
};

struct RandomizeStats {
    long long proposals = 0;
    long long accepted = 0;
    long long infeasible = 0;
    long long scc_rejected = 0;
};

// Uniform degree-preserving randomization: `steps` uniformly proposed swaps,
// each applied only when feasible and (per guard) when it preserves strong
// connectivity. Infeasible proposals are skipped and counted.
DirectedGraph neutral_randomize(DirectedGraph g, long long steps, RngStream& rng,
                                const SccGuard& guard = SccGuard::every_swap(),
                                RandomizeStats* stats = nullptr);

}  // namespace specnet
