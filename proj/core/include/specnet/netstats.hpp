#pragma once

#include <string>
#include <vector>

#include "specnet/graph.hpp"

namespace specnet {

enum class DegreeMode { out, in };

const char* to_string(DegreeMode m);
DegreeMode degree_mode_from_string(const std::string& s);

// Exact fraction with 128-bit terms; enough headroom for edge-averaged degree
// moments at desk scale. Used so that trajectory invariance checks can compare
// values exactly instead of through a tolerance.
struct Rational {
    __int128 num = 0;
    __int128 den = 1;

    Rational() = default;
    Rational(__int128 n, __int128 d);
    bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
    bool operator!=(const Rational& o) const { return !(*this == o); }
    double to_double() const;
};

// Edge-sample accumulators behind Newman's assortativity coefficient for a
// fixed (tail, head) degree-mode pair. All sums are exact integers; floating
// point enters only when a coefficient value is requested.
struct AssortativityContext {
    DegreeMode p = DegreeMode::out, q = DegreeMode::in;
    long long m = 0;
    long long sum_x = 0, sum_y = 0;      // tail / head degree sums over edges
    long long sum_x2 = 0, sum_y2 = 0;    // squared sums
    long long s = 0;                     // degree-product sum  sum d_i^p d_j^q

    static AssortativityContext build(const DirectedGraph& g, DegreeMode p, DegreeMode q);

    Rational mu_t_exact() const;
    Rational mu_h_exact() const;
    Rational sigma_t2_exact() const;
    Rational sigma_h2_exact() const;

    double mu_t() const;
    double mu_h() const;
    double sigma_t() const;
    double sigma_h() const;
    // Conversion factor 1 / (sigma_T * sigma_H); throws DegenerateError when
    // either dispersion vanishes.
    double nu() const;
    bool degenerate() const;
    // Coefficient value from the current accumulators.
    double phi() const;
};

int degree_of(const DirectedGraph& g, int v, DegreeMode mode);

// Newman's assortativity coefficient phi_{p,q}; throws DegenerateError when a
// dispersion vanishes, ValidationError when m < 2.
double newman_assortativity(const DirectedGraph& g, DegreeMode p, DegreeMode q);

// Exact degree-product sum over edges.
long long degree_product_sum(const DirectedGraph& g, DegreeMode p, DegreeMode q);

// Exact change of the degree-product sum under a feasible swap:
// (d_a^p - d_c^p) * (d_d^q - d_b^q). Throws InfeasibleError otherwise.
long long swap_delta_s(const DirectedGraph& g, const SwapMove& mv, DegreeMode p, DegreeMode q);

// Vertex partition into K blocks. Core-periphery uses K = 2 with block 0 the
// core (H) and block 1 the periphery (L).
struct Partition {
    std::vector<int> block_of;
    int block_count = 0;

    static Partition from_blocks(std::vector<int> block_of);
    // File format: first line "K <k>", then one "<vertex> <block>" line per vertex.
    static Partition from_file_text(const std::string& text, int n);
    std::string to_file_text() const;

    // Splits by degree: the ceil(core_fraction * n) highest-degree vertices
    // form block 0 (core), the rest block 1. Ties broken by vertex index.
    static Partition degree_split(const DirectedGraph& g, double core_fraction, DegreeMode mode);
    // K equal contiguous index ranges (degree-independent community layout).
    static Partition contiguous_blocks(int n, int k);

    int size() const { return static_cast<int>(block_of.size()); }
    std::vector<int> block_sizes() const;
    void validate(int n) const;
};

// sum_k (e_kk - e_{k.} e_{.k}) with block edge fractions from exact counts.
double community_contrast(const DirectedGraph& g, const Partition& partition);

// 1 - 2 e_LL for a two-block core-periphery partition.
double core_periphery_contrast(const DirectedGraph& g, const Partition& partition);
long long periphery_internal_edges(const DirectedGraph& g, const Partition& partition);

struct CycleLimits {
    int k_cap = 6;
    int n_cap = 2000;
};

// Exact count of directed simple k-cycles, one per rotation class (each cycle
// is anchored at its minimum-index vertex).
long long k_cycle_count(const DirectedGraph& g, int k, const CycleLimits& limits = {});

// (n)_k / k: the k-cycle count of the complete digraph, exact.
long long complete_k_cycle_count(int n, int k);

// C_k / ((n)_k / k), in [0, 1].
double k_cycle_density(const DirectedGraph& g, int k, const CycleLimits& limits = {});

// trace(A^3) / 3, exact; independent route to k_cycle_count(g, 3).
long long triangle_count_trace(const DirectedGraph& g);

// Number of directed simple k-cycles using at least one edge of `through`.
// Supports incremental cycle deltas: C(after) - C(before) equals the cycles
// through the added edges in the after-graph minus the cycles through the
// removed edges in the before-graph.
long long k_cycles_through_edges(const DirectedGraph& g, int k,
                                 const std::vector<std::pair<int, int>>& through,
                                 const CycleLimits& limits = {});

}  // namespace specnet
