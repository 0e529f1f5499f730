#include "specnet/rewire.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <unordered_map>

#include "specnet/errors.hpp"

namespace specnet {

const char* to_string(StatKind s) {
    switch (s) {
        case StatKind::assortativity: return "assortativity";
        case StatKind::community: return "community";
        case StatKind::core_periphery: return "core_periphery";
        case StatKind::k_cycle: return "k_cycle";
        case StatKind::triangle: return "triangle";
        case StatKind::cycle_grow: return "cycle_grow";
    }
    return "?";
}

const char* to_string(TerminationReason r) {
    switch (r) {
        case TerminationReason::reached_max_accepted: return "reached_max_accepted";
        case TerminationReason::proposals_exhausted: return "proposals_exhausted";
        case TerminationReason::no_admissible_move: return "no_admissible_move";
    }
    return "?";
}

bool RewiringPolicy::resolved_strict() const {
    if (strict.has_value()) return *strict;
    return stat == StatKind::assortativity;
}

void RewiringPolicy::validate(const DirectedGraph& g) const {
    if (r_budget < 1) throw ValidationError("policy: r_budget must be >= 1");
    if (max_accepted < 0) throw ValidationError("policy: max_accepted must be >= 0");
    if (max_proposals < max_accepted) {
        throw ValidationError("policy: max_proposals must be >= max_accepted");
    }
    if (recorder_stride < 1) throw ValidationError("policy: recorder_stride must be >= 1");
    if (sign != 1 && sign != -1) throw ValidationError("policy: sign must be +1 or -1");
    if (stat == StatKind::community) {
        partition.validate(g.vertex_count());
        if (partition.block_count < 2) {
            throw ValidationError("policy: community rewiring needs at least two blocks");
        }
    }
    if (stat == StatKind::core_periphery) {
        partition.validate(g.vertex_count());
        if (partition.block_count != 2) {
            throw ValidationError("policy: core-periphery rewiring needs exactly two blocks");
        }
    }
    if (stat == StatKind::k_cycle || stat == StatKind::cycle_grow) {
        if (cycle_k < 3 || cycle_k > cycle_limits.k_cap) {
            throw ValidationError("policy: cycle length out of range");
        }
    }
    if (g.vertex_count() > spectral.dense_cap) {
        throw ValidationError("policy: vertex count exceeds the dense spectral cap");
    }
}

PerturbationLedger::PerturbationLedger(int n) : omega(n) {
    participation.assign(static_cast<std::size_t>(n), 0);
}

void PerturbationLedger::record(const SwapMove& mv) {
    omega.add(mv.a, mv.b, -1);
    omega.add(mv.c, mv.d, -1);
    omega.add(mv.a, mv.d, +1);
    omega.add(mv.c, mv.b, +1);
    // Feasibility makes the four endpoints pairwise distinct.
    ++participation[static_cast<std::size_t>(mv.a)];
    ++participation[static_cast<std::size_t>(mv.b)];
    ++participation[static_cast<std::size_t>(mv.c)];
    ++participation[static_cast<std::size_t>(mv.d)];
    ++accepted;
}

int PerturbationLedger::max_participation() const {
    int m = 0;
    for (int s : participation) m = std::max(m, s);
    return m;
}

bool PerturbationLedger::within_budget(const SwapMove& mv, int r_budget) const {
    return participation[static_cast<std::size_t>(mv.a)] < r_budget &&
           participation[static_cast<std::size_t>(mv.b)] < r_budget &&
           participation[static_cast<std::size_t>(mv.c)] < r_budget &&
           participation[static_cast<std::size_t>(mv.d)] < r_budget;
}

namespace {

std::uint64_t edge_key(int u, int v) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(u)) << 32) |
           static_cast<std::uint32_t>(v);
}

// Edge list with O(1) membership, insertion, removal and uniform sampling.
class EdgeListIndex {
public:
    bool empty() const { return list_.empty(); }
    std::size_t size() const { return list_.size(); }
    const std::pair<int, int>& at(std::size_t i) const { return list_[i]; }

    bool contains(int u, int v) const { return pos_.count(edge_key(u, v)) != 0; }

    void insert(int u, int v) {
        if (contains(u, v)) return;
        pos_[edge_key(u, v)] = list_.size();
        list_.emplace_back(u, v);
    }

    void remove(int u, int v) {
        auto it = pos_.find(edge_key(u, v));
        if (it == pos_.end()) return;
        std::size_t idx = it->second;
        pos_.erase(it);
        std::size_t last = list_.size() - 1;
        if (idx != last) {
            list_[idx] = list_[last];
            pos_[edge_key(list_[idx].first, list_[idx].second)] = idx;
        }
        list_.pop_back();
    }

private:
    std::vector<std::pair<int, int>> list_;
    std::unordered_map<std::uint64_t, std::size_t> pos_;
};

// Qualifying-edge sampler for core-periphery swaps, optionally restricted to a
// member subset (used by the fractal refinement). Maintained incrementally so
// emptiness is detectable without scanning.
class CpSampler {
public:
    CpSampler(const DirectedGraph& g, const Partition& part, bool allow_peripheral_head,
              const std::vector<char>* member_mask)
        : part_(&part), allow_head_l_(allow_peripheral_head), members_(member_mask) {
        for (const auto& [u, v] : g.edges()) classify_insert(u, v);
    }

    bool exhausted() const { return ll_.empty() || donor_.empty(); }
    long long periphery_edges() const { return static_cast<long long>(ll_.size()); }

    std::optional<SwapMove> draw(const DirectedGraph& g, RngStream& rng) {
        if (exhausted()) return std::nullopt;
        auto i = static_cast<std::size_t>(rng.next_below(ll_.size()));
        auto j = static_cast<std::size_t>(rng.next_below(donor_.size()));
        auto [a, b] = ll_.at(i);
        auto [c, d] = donor_.at(j);
        SwapMove mv{a, b, c, d};
        if (!g.swap_feasible(mv)) return std::nullopt;
        return mv;
    }

    void on_accept(const SwapMove& mv) {
        classify_remove(mv.a, mv.b);
        classify_remove(mv.c, mv.d);
        classify_insert(mv.a, mv.d);
        classify_insert(mv.c, mv.b);
    }

private:
    bool member(int v) const {
        return members_ == nullptr || (*members_)[static_cast<std::size_t>(v)] != 0;
    }
    int block(int v) const { return part_->block_of[static_cast<std::size_t>(v)]; }

    void classify_insert(int u, int v) {
        if (!member(u) || !member(v)) return;
        if (block(u) == 1 && block(v) == 1) ll_.insert(u, v);
        if (block(u) == 0 && (allow_head_l_ || block(v) == 0)) donor_.insert(u, v);
    }
    void classify_remove(int u, int v) {
        ll_.remove(u, v);
        donor_.remove(u, v);
    }

    const Partition* part_;
    bool allow_head_l_;
    const std::vector<char>* members_;
    EdgeListIndex ll_;     // periphery-internal edges (a, b)
    EdgeListIndex donor_;  // core-tail donor edges (c, d)
};

// Cross-block edge lists per ordered block pair for community swaps.
class CommunitySampler {
public:
    CommunitySampler(const DirectedGraph& g, const Partition& part) : part_(&part) {
        k_ = part.block_count;
        cross_.resize(static_cast<std::size_t>(k_) * static_cast<std::size_t>(k_));
        for (const auto& [u, v] : g.edges()) classify_insert(u, v);
    }

    bool exhausted() const {
        for (int p = 0; p < k_; ++p) {
            for (int q = 0; q < k_; ++q) {
                if (p != q && !list(p, q).empty() && !list(q, p).empty()) return false;
            }
        }
        return true;
    }

    std::optional<SwapMove> draw(const DirectedGraph& g, RngStream& rng) {
        // Draw an ordered block pair first, then one edge in each direction.
        auto pair_count = static_cast<std::uint64_t>(k_) * static_cast<std::uint64_t>(k_ - 1);
        auto r = rng.next_below(pair_count);
        int p = static_cast<int>(r / static_cast<std::uint64_t>(k_ - 1));
        int q = static_cast<int>(r % static_cast<std::uint64_t>(k_ - 1));
        if (q >= p) ++q;
        auto& pq = list(p, q);
        auto& qp = list(q, p);
        if (pq.empty() || qp.empty()) return std::nullopt;
        auto [a, b] = pq.at(static_cast<std::size_t>(rng.next_below(pq.size())));
        auto [c, d] = qp.at(static_cast<std::size_t>(rng.next_below(qp.size())));
        SwapMove mv{a, b, c, d};
        if (!g.swap_feasible(mv)) return std::nullopt;
        return mv;
    }

    void on_accept(const SwapMove& mv) {
        classify_remove(mv.a, mv.b);
        classify_remove(mv.c, mv.d);
        classify_insert(mv.a, mv.d);
        classify_insert(mv.c, mv.b);
    }

private:
    EdgeListIndex& list(int p, int q) {
        return cross_[static_cast<std::size_t>(p) * static_cast<std::size_t>(k_) +
                      static_cast<std::size_t>(q)];
    }
    const EdgeListIndex& list(int p, int q) const {
        return cross_[static_cast<std::size_t>(p) * static_cast<std::size_t>(k_) +
                      static_cast<std::size_t>(q)];
    }
    int block(int v) const { return part_->block_of[static_cast<std::size_t>(v)]; }

    void classify_insert(int u, int v) {
        int bu = block(u), bv = block(v);
        if (bu != bv) list(bu, bv).insert(u, v);
    }
    void classify_remove(int u, int v) {
        int bu = block(u), bv = block(v);
        if (bu != bv) list(bu, bv).remove(u, v);
    }

    const Partition* part_;
    int k_ = 0;
    std::vector<EdgeListIndex> cross_;
};

std::optional<SwapMove> draw_assortativity_candidate(const DirectedGraph& g, DegreeMode p,
                                                     DegreeMode q, int sign, bool strict,
                                                     RngStream& rng) {
    const auto m = static_cast<std::uint64_t>(g.edge_count());
    if (m < 2) return std::nullopt;
    auto i = static_cast<std::size_t>(rng.next_below(m));
    auto j = static_cast<std::size_t>(rng.next_below(m));
    if (i == j) return std::nullopt;
    auto [a, b] = g.edge_at(i);
    auto [c, d] = g.edge_at(j);
    SwapMove mv{a, b, c, d};
    if (!g.swap_feasible(mv)) return std::nullopt;
    long long ds = sign * swap_delta_s(g, mv, p, q);
    if (strict ? ds <= 0 : ds < 0) return std::nullopt;
    return mv;
}

// Random simple path i1 -> ... -> ik with the closing edge (ik -> i1) absent,
// plus donor edges (ik -> d) and (e -> i1) off the path. Encoded as the swap
// removing (ik, d), (e, i1) and adding (ik, i1), (e, d).
std::optional<SwapMove> draw_k_cycle_candidate(const DirectedGraph& g, int k, RngStream& rng) {
    const auto m = static_cast<std::uint64_t>(g.edge_count());
    if (m < 3) return std::nullopt;
    auto [i1, i2] = g.edge_at(static_cast<std::size_t>(rng.next_below(m)));
    std::vector<int> path{i1, i2};
    std::vector<char> on_path(static_cast<std::size_t>(g.vertex_count()), 0);
    on_path[static_cast<std::size_t>(i1)] = 1;
    on_path[static_cast<std::size_t>(i2)] = 1;
    for (int step = 2; step < k; ++step) {
        const auto& outs = g.out_neighbors(path.back());
        if (outs.empty()) return std::nullopt;
        int w = outs[static_cast<std::size_t>(rng.next_below(outs.size()))];
        if (on_path[static_cast<std::size_t>(w)]) return std::nullopt;
        on_path[static_cast<std::size_t>(w)] = 1;
        path.push_back(w);
    }
    int ik = path.back();
    if (g.has_edge(ik, i1)) return std::nullopt;  // already closed

    std::vector<int> out_donors;
    for (int d : g.out_neighbors(ik)) {
        if (!on_path[static_cast<std::size_t>(d)]) out_donors.push_back(d);
    }
    if (out_donors.empty()) return std::nullopt;
    std::vector<int> in_donors;
    for (int e : g.in_neighbors(i1)) {
        if (!on_path[static_cast<std::size_t>(e)]) in_donors.push_back(e);
    }
    if (in_donors.empty()) return std::nullopt;
    int d = out_donors[static_cast<std::size_t>(rng.next_below(out_donors.size()))];
    int e = in_donors[static_cast<std::size_t>(rng.next_below(in_donors.size()))];
    SwapMove mv{ik, d, e, i1};
    if (!g.swap_feasible(mv)) return std::nullopt;
    return mv;
}

}  // namespace

ProposalResult propose_assortativity_swap(const DirectedGraph& g, DegreeMode p, DegreeMode q,
                                          int sign, bool strict, RngStream& rng,
                                          long long attempts) {
    ProposalResult res;
    for (long long i = 0; i < attempts; ++i) {
        ++res.attempts_used;
        if (auto mv = draw_assortativity_candidate(g, p, q, sign, strict, rng)) {
            res.move = mv;
            return res;
        }
    }
    return res;
}

ProposalResult propose_community_swap(const DirectedGraph& g, const Partition& partition,
                                      RngStream& rng, long long attempts) {
    partition.validate(g.vertex_count());
    CommunitySampler sampler(g, partition);
    ProposalResult res;
    if (sampler.exhausted()) return res;
    for (long long i = 0; i < attempts; ++i) {
        ++res.attempts_used;
        if (auto mv = sampler.draw(g, rng)) {
            res.move = mv;
            return res;
        }
    }
    return res;
}

ProposalResult propose_core_periphery_swap(const DirectedGraph& g, const Partition& partition,
                                           bool allow_peripheral_head, RngStream& rng,
                                           long long attempts) {
    partition.validate(g.vertex_count());
    if (partition.block_count != 2) {
        throw ValidationError("core-periphery proposer needs a two-block partition");
    }
    CpSampler sampler(g, partition, allow_peripheral_head, nullptr);
    ProposalResult res;
    if (sampler.exhausted()) return res;
    for (long long i = 0; i < attempts; ++i) {
        ++res.attempts_used;
        if (auto mv = sampler.draw(g, rng)) {
            res.move = mv;
            return res;
        }
    }
    return res;
}

ProposalResult propose_k_cycle_swap(const DirectedGraph& g, int k, RngStream& rng,
                                    long long attempts) {
    if (k < 3) throw ValidationError("cycle length must be at least 3");
    ProposalResult res;
    for (long long i = 0; i < attempts; ++i) {
        ++res.attempts_used;
        if (auto mv = draw_k_cycle_candidate(g, k, rng)) {
            res.move = mv;
            return res;
        }
    }
    return res;
}

ProposalResult propose_triangle_swap(const DirectedGraph& g, RngStream& rng, long long attempts) {
    return propose_k_cycle_swap(g, 3, rng, attempts);
}

std::optional<std::vector<int>> find_k_cycle(const DirectedGraph& g, int k) {
    if (k < 3) throw ValidationError("cycle length must be at least 3");
    const int n = g.vertex_count();
    std::vector<char> on_path(static_cast<std::size_t>(n), 0);
    std::vector<int> path;

    std::function<bool(int, int)> dfs = [&](int anchor, int at) -> bool {
        if (static_cast<int>(path.size()) == k) {
            return g.has_edge(at, anchor);
        }
        for (int w : g.out_neighbors(at)) {
            if (w <= anchor || on_path[static_cast<std::size_t>(w)]) continue;
            on_path[static_cast<std::size_t>(w)] = 1;
            path.push_back(w);
            if (dfs(anchor, w)) return true;
            path.pop_back();
            on_path[static_cast<std::size_t>(w)] = 0;
        }
        return false;
    };

    for (int s = 0; s < n; ++s) {
        path.assign(1, s);
        std::fill(on_path.begin(), on_path.end(), 0);
        on_path[static_cast<std::size_t>(s)] = 1;
        if (dfs(s, s)) return path;
    }
    return std::nullopt;
}

std::optional<std::vector<SwapMove>> grow_cycle(const DirectedGraph& g,
                                                const std::vector<int>& cycle, RngStream& rng,
                                                long long attempts) {
    const int len = static_cast<int>(cycle.size());
    if (len < 3) throw ValidationError("grow_cycle: cycle must have length >= 3");
    std::vector<char> on_cycle(static_cast<std::size_t>(g.vertex_count()), 0);
    for (int v : cycle) {
        if (v < 0 || v >= g.vertex_count() || on_cycle[static_cast<std::size_t>(v)]) {
            throw ValidationError("grow_cycle: not a simple vertex list");
        }
        on_cycle[static_cast<std::size_t>(v)] = 1;
    }
    for (int i = 0; i < len; ++i) {
        if (!g.has_edge(cycle[static_cast<std::size_t>(i)],
                        cycle[static_cast<std::size_t>((i + 1) % len)])) {
            throw ValidationError("grow_cycle: vertex list is not a directed cycle in the graph");
        }
    }

    // Fresh vertices with both an out- and an in-edge can host the new hop.
    std::vector<int> hosts;
    for (int w = 0; w < g.vertex_count(); ++w) {
        if (!on_cycle[static_cast<std::size_t>(w)] && g.out_degree(w) > 0 && g.in_degree(w) > 0) {
            hosts.push_back(w);
        }
    }
    if (hosts.empty()) return std::nullopt;

    DirectedGraph scratch = g;
    for (long long attempt = 0; attempt < attempts; ++attempt) {
        int ei = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(len)));
        int u = cycle[static_cast<std::size_t>(ei)];
        int v = cycle[static_cast<std::size_t>((ei + 1) % len)];
        int w = hosts[static_cast<std::size_t>(rng.next_below(hosts.size()))];
        const auto& wouts = scratch.out_neighbors(w);
        const auto& wins = scratch.in_neighbors(w);
        int x = wouts[static_cast<std::size_t>(rng.next_below(wouts.size()))];
        int y = wins[static_cast<std::size_t>(rng.next_below(wins.size()))];
        // Net effect: (u->v), (w->x), (y->w)  ~>  (u->w), (w->v), (y->x).
        SwapMove first{u, v, w, x};
        SwapMove second{u, x, y, w};
        if (!scratch.swap_feasible(first)) continue;
        scratch.apply_swap(first);
        bool ok = scratch.swap_feasible(second);
        scratch.apply_swap(first.inverse());
        if (ok) return std::vector<SwapMove>{first, second};
    }
    return std::nullopt;
}

namespace {

// Exact-integer statistic drivers behind the trajectory engine. `improvement`
// is evaluated with the candidate swap applied; its sign (scaled so that +1 is
// one unit of exact progress) feeds the upper-contour acceptance rule.
class StatDriver {
public:
    virtual ~StatDriver() = default;
    virtual ProposalResult propose(const DirectedGraph& g, RngStream& rng) = 0;
    virtual bool provably_exhausted(const DirectedGraph&) const { return false; }
    virtual void pre_apply(const DirectedGraph&, const SwapMove&) {}
    virtual long long improvement(const DirectedGraph& g, const SwapMove& mv) = 0;
    virtual bool accepts(long long improvement, bool strict) const {
        return strict ? improvement > 0 : improvement >= 0;
    }
    virtual void on_accept(const SwapMove& mv, long long improvement) = 0;
    virtual double phi() const = 0;
};

class AssortativityDriver final : public StatDriver {
public:
    AssortativityDriver(const DirectedGraph& g, DegreeMode p, DegreeMode q, int sign, bool strict)
        : ctx_(AssortativityContext::build(g, p, q)), sign_(sign), strict_(strict) {
        if (ctx_.m < 2) throw ValidationError("assortativity rewiring needs at least two edges");
        if (ctx_.degenerate()) {
            throw DegenerateError("assortativity rewiring: degenerate degree dispersion");
        }
    }

    ProposalResult propose(const DirectedGraph& g, RngStream& rng) override {
        return propose_assortativity_swap(g, ctx_.p, ctx_.q, sign_, strict_, rng, 1);
    }

    void pre_apply(const DirectedGraph& g, const SwapMove& mv) override {
        cached_ds_ = swap_delta_s(g, mv, ctx_.p, ctx_.q);
    }

    long long improvement(const DirectedGraph&, const SwapMove&) override {
        return sign_ * cached_ds_;
    }

    void on_accept(const SwapMove&, long long improvement) override {
        ctx_.s += sign_ * improvement;
    }

    double phi() const override { return sign_ * ctx_.phi(); }

    const AssortativityContext& context() const { return ctx_; }

private:
    AssortativityContext ctx_;
    int sign_;
    bool strict_;
    long long cached_ds_ = 0;
};

class CommunityDriver final : public StatDriver {
public:
    CommunityDriver(const DirectedGraph& g, const Partition& part)
        : part_(part), sampler_(g, part_), m_(g.edge_count()) {
        if (m_ < 1) throw ValidationError("community rewiring needs at least one edge");
        const int k = part_.block_count;
        diag_.assign(static_cast<std::size_t>(k), 0);
        row_.assign(static_cast<std::size_t>(k), 0);
        col_.assign(static_cast<std::size_t>(k), 0);
        for (const auto& [u, v] : g.edges()) tally(u, v, +1);
        numer_ = full_numer();
    }

    ProposalResult propose(const DirectedGraph& g, RngStream& rng) override {
        ProposalResult res;
        res.attempts_used = 1;
        res.move = sampler_.draw(g, rng);
        return res;
    }

    bool provably_exhausted(const DirectedGraph&) const override { return sampler_.exhausted(); }

    void pre_apply(const DirectedGraph&, const SwapMove& mv) override {
        // Simulate the four block-tally changes and diff the exact numerator.
        tally_move(mv, +1);
        cached_delta_ = full_numer() - numer_;
        tally_move(mv, -1);
    }

    long long improvement(const DirectedGraph&, const SwapMove&) override {
        return static_cast<long long>(cached_delta_);
    }

    void on_accept(const SwapMove& mv, long long improvement) override {
        tally_move(mv, +1);
        numer_ += improvement;
        sampler_.on_accept(mv);
    }

    double phi() const override {
        return static_cast<double>(numer_) / (static_cast<double>(m_) * static_cast<double>(m_));
    }

private:
    int block(int v) const { return part_.block_of[static_cast<std::size_t>(v)]; }

    void tally(int u, int v, int sgn) {
        int bu = block(u), bv = block(v);
        row_[static_cast<std::size_t>(bu)] += sgn;
        col_[static_cast<std::size_t>(bv)] += sgn;
        if (bu == bv) diag_[static_cast<std::size_t>(bu)] += sgn;
    }

    void tally_move(const SwapMove& mv, int sgn) {
        tally(mv.a, mv.b, -sgn);
        tally(mv.c, mv.d, -sgn);
        tally(mv.a, mv.d, +sgn);
        tally(mv.c, mv.b, +sgn);
    }

    __int128 full_numer() const {
        __int128 numer = 0;
        for (std::size_t b = 0; b < diag_.size(); ++b) {
            numer += static_cast<__int128>(m_) * diag_[b] -
                     static_cast<__int128>(row_[b]) * col_[b];
        }
        return numer;
    }

    Partition part_;
    CommunitySampler sampler_;
    long long m_;
    std::vector<long long> diag_, row_, col_;
    __int128 numer_ = 0;
    __int128 cached_delta_ = 0;
};

class CorePeripheryDriver final : public StatDriver {
public:
    CorePeripheryDriver(const DirectedGraph& g, const Partition& part, bool allow_peripheral_head)
        : part_(part), sampler_(g, part_, allow_peripheral_head, nullptr), m_(g.edge_count()) {
        if (m_ < 1) throw ValidationError("core-periphery rewiring needs at least one edge");
        c_ll_ = periphery_internal_edges(g, part_);
    }

    ProposalResult propose(const DirectedGraph& g, RngStream& rng) override {
        ProposalResult res;
        res.attempts_used = 1;
        res.move = sampler_.draw(g, rng);
        return res;
    }

    bool provably_exhausted(const DirectedGraph&) const override { return sampler_.exhausted(); }

    void pre_apply(const DirectedGraph&, const SwapMove& mv) override {
        cached_delta_ = -delta_ll(mv);
    }

    long long improvement(const DirectedGraph&, const SwapMove&) override { return cached_delta_; }

    void on_accept(const SwapMove& mv, long long improvement) override {
        c_ll_ -= improvement;
        sampler_.on_accept(mv);
    }

    double phi() const override {
        return static_cast<double>(m_ - 2 * c_ll_) / static_cast<double>(m_);
    }

    long long periphery_edges() const { return c_ll_; }

private:
    bool in_l(int v) const { return part_.block_of[static_cast<std::size_t>(v)] == 1; }

    long long delta_ll(const SwapMove& mv) const {
        long long d = 0;
        if (in_l(mv.a) && in_l(mv.b)) --d;
        if (in_l(mv.c) && in_l(mv.d)) --d;
        if (in_l(mv.a) && in_l(mv.d)) ++d;
        if (in_l(mv.c) && in_l(mv.b)) ++d;
        return d;
    }

    Partition part_;
    CpSampler sampler_;
    long long m_;
    long long c_ll_ = 0;
    long long cached_delta_ = 0;
};

class CycleDriver final : public StatDriver {
public:
    CycleDriver(const DirectedGraph& g, int k, const CycleLimits& limits)
        : k_(k), limits_(limits), denom_(complete_k_cycle_count(g.vertex_count(), k)) {
        if (g.vertex_count() < k) throw ValidationError("k-cycle rewiring needs n >= k");
        count_ = k_cycle_count(g, k_, limits_);
    }

    ProposalResult propose(const DirectedGraph& g, RngStream& rng) override {
        return propose_k_cycle_swap(g, k_, rng, 1);
    }

    void pre_apply(const DirectedGraph& g, const SwapMove& mv) override {
        removed_ = k_cycles_through_edges(g, k_, {mv.removed_first(), mv.removed_second()}, limits_);
    }

    long long improvement(const DirectedGraph& g, const SwapMove& mv) override {
        long long added =
            k_cycles_through_edges(g, k_, {mv.added_first(), mv.added_second()}, limits_);
        return added - removed_;
    }

    // The cycle proposers promise a strict count increase; the engine enforces
    // it here independent of the policy's strict flag.
    bool accepts(long long improvement, bool) const override { return improvement >= 1; }

    void on_accept(const SwapMove&, long long improvement) override { count_ += improvement; }

    double phi() const override {
        return static_cast<double>(count_) / static_cast<double>(denom_);
    }

    long long count() const { return count_; }

private:
    int k_;
    CycleLimits limits_;
    long long denom_;
    long long count_ = 0;
    long long removed_ = 0;
};

std::unique_ptr<StatDriver> make_driver(const DirectedGraph& g, const RewiringPolicy& policy) {
    switch (policy.stat) {
        case StatKind::assortativity:
            return std::make_unique<AssortativityDriver>(g, policy.p, policy.q, policy.sign,
                                                         policy.resolved_strict());
        case StatKind::community:
            return std::make_unique<CommunityDriver>(g, policy.partition);
        case StatKind::core_periphery:
            return std::make_unique<CorePeripheryDriver>(g, policy.partition,
                                                         policy.cp_allow_peripheral_head);
        case StatKind::triangle:
            return std::make_unique<CycleDriver>(g, 3, policy.cycle_limits);
        case StatKind::k_cycle:
            return std::make_unique<CycleDriver>(g, policy.cycle_k, policy.cycle_limits);
        case StatKind::cycle_grow:
            throw ValidationError("cycle_grow runs through run_cycle_growth");
    }
    throw ValidationError("unknown statistic kind");
}

bool scc_check_due(const SccGuard& guard, long long accepted_so_far) {
    switch (guard.mode) {
        case SccGuard::Mode::every_swap: return true;
        case SccGuard::Mode::every_k: return guard.k > 0 && (accepted_so_far + 1) % guard.k == 0;
        case SccGuard::Mode::initial_only: return false;
    }
    return true;
}

struct RecorderState {
    double theta_prev = 0.0;
    bool first = true;
    bool inc_seen = false;
    bool dec_seen = false;
};

TrajectoryRecord make_record(const DirectedGraph& g, const RewiringPolicy& policy,
                             const BaselineInfo& baseline, const PerturbationLedger& ledger,
                             double phi, long long proposals, const RngStream& rng,
                             Eigen::VectorXd& v_warm, RecorderState& state) {
    TrajectoryRecord rec;
    rec.t = ledger.accepted;
    rec.phi = phi;
    PowerResult pr = leading_right_eigenvector(g, baseline.d_out_unit, policy.spectral, &v_warm);
    v_warm = pr.v;
    rec.power_converged = pr.converged;
    rec.theta = angle_between(baseline.d_out_unit, pr.v);
    rec.theta_rot = angle_between(baseline.v_right0, pr.v);
    rec.lambda1_t = pr.lambda1;

    NormResult norm = spectral_norm(ledger.omega, policy.spectral.tol);
    rec.omega_norm = norm.value;
    rec.omega_norm_converged = norm.converged;
    rec.omega_cap = 2.0 * ledger.max_participation();

    const double nan = std::numeric_limits<double>::quiet_NaN();
    rec.kappa_t = nan;
    rec.gamma_t = nan;
    if (policy.dense_spectral_at_records) {
        try {
            Spectrum spec = full_spectrum(g.to_dense(), policy.spectral.dense_cap);
            GapResult gap = spectral_gap(spec.eigenvalues);
            rec.kappa_t = distortion_factor(spec.eigenvectors);
            rec.gamma_t = gap.gap;
            rec.dense_evaluated = true;
            if (!pr.converged) rec.lambda1_t = std::abs(spec.eigenvalues[0]);
        } catch (const Error&) {
            rec.spectral_failed = true;
        }
    }

    if (baseline.gamma > 0.0) {
        rec.ss_condition = rec.omega_norm < baseline.gamma / baseline.kappa;
        rec.ss_bound = baseline.kappa * rec.omega_norm / baseline.gamma;
    } else {
        rec.ss_condition = false;
        rec.ss_bound = std::numeric_limits<double>::infinity();
    }
    rec.proposals_tried = proposals;
    rec.rng_digest = rng.digest();

    if (!state.first) {
        if (rec.theta > state.theta_prev) state.inc_seen = true;
        if (rec.theta < state.theta_prev) state.dec_seen = true;
    }
    state.first = false;
    state.theta_prev = rec.theta;
    rec.theta_increase_seen = state.inc_seen;
    rec.theta_decrease_seen = state.dec_seen;
    return rec;
}

BaselineInfo make_baseline(const DirectedGraph& g, const RewiringPolicy& policy) {
    BaselineInfo base;
    base.n = g.vertex_count();
    base.m = g.edge_count();
    DegreeVectors dv = DegreeVectors::of(g);
    base.d_out_unit = dv.d_out_unit;
    base.d_in_unit = dv.d_in_unit;
    SpectralSummary s = compute_spectral_summary(g, policy.spectral);
    base.lambda1 = s.lambda1;
    base.gamma = s.gap;
    base.kappa = s.kappa;
    base.residual_right = s.residual_right;
    base.residual_left = s.residual_left;
    base.gap_simple = s.gap_simple;
    base.near_defective = s.near_defective;
    base.power_converged = s.converged;
    base.v_right0 = s.v_right;
    base.theta0 = angle_between(dv.d_out_unit, s.v_right);
    return base;
}

}  // namespace

TrajectoryResult run_trajectory(const DirectedGraph& g0, const RewiringPolicy& policy,
                                std::uint64_t seed, const AcceptObserver& observer) {
    policy.validate(g0);
    if (policy.stat == StatKind::cycle_grow) return run_cycle_growth(g0, policy, seed);
    if (!is_strongly_connected(g0)) {
        throw ValidationError("baseline graph is not strongly connected");
    }

    TrajectoryResult res{g0, PerturbationLedger(g0.vertex_count()), {}, {}, {}, 0, true};
    DirectedGraph& g = res.graph;
    PerturbationLedger& ledger = res.ledger;
    res.baseline = make_baseline(g, policy);

    auto driver = make_driver(g, policy);
    res.baseline.phi0 = driver->phi();

    RngStream rng(seed);
    const bool strict = policy.resolved_strict();

    Eigen::VectorXd v_warm = res.baseline.v_right0;
    RecorderState rec_state;
    res.records.push_back(make_record(g, policy, res.baseline, ledger, res.baseline.phi0, 0, rng,
                                      v_warm, rec_state));

    // Angle-filter state tracks the accepted-path eigenvector and angle.
    Eigen::VectorXd v_cur = res.baseline.v_right0;
    double theta_cur = res.baseline.theta0;

    long long proposals = 0;
    res.reason = TerminationReason::proposals_exhausted;
    while (true) {
        if (ledger.accepted >= policy.max_accepted) {
            res.reason = TerminationReason::reached_max_accepted;
            break;
        }
        if (proposals >= policy.max_proposals) {
            res.reason = TerminationReason::proposals_exhausted;
            break;
        }
        if (driver->provably_exhausted(g)) {
            res.reason = TerminationReason::no_admissible_move;
            break;
        }

        ProposalResult prop = driver->propose(g, rng);
        proposals += std::max<long long>(1, prop.attempts_used);
        if (!prop.move) continue;
        const SwapMove mv = *prop.move;
        if (!ledger.within_budget(mv, policy.r_budget)) continue;

        driver->pre_apply(g, mv);
        g.apply_swap(mv);
        long long impr = driver->improvement(g, mv);
        bool ok = driver->accepts(impr, strict);
        if (ok && scc_check_due(policy.scc_guard, ledger.accepted)) {
            ok = is_strongly_connected(g);
        }

        Eigen::VectorXd v_candidate;
        double theta_candidate = theta_cur;
        if (ok && policy.angle_filter != AngleFilter::off) {
            PowerResult cand = leading_right_eigenvector(g, res.baseline.d_out_unit,
                                                         policy.spectral, &v_cur);
            v_candidate = cand.v;
            theta_candidate = angle_between(res.baseline.d_out_unit, cand.v);
            if (policy.angle_filter == AngleFilter::pathwise_nondecreasing) {
                ok = theta_candidate >= theta_cur;
            } else {
                // Probe further upper-contour candidates and test the sample
                // mean angle. Probe draws advance the RNG but do not count
                // toward max_proposals.
                std::vector<double> thetas{theta_candidate};
                g.apply_swap(mv.inverse());
                const int want = std::max(1, policy.mean_admissible_samples);
                for (long long tries = 0;
                     tries < 8ll * want && static_cast<int>(thetas.size()) < want; ++tries) {
                    ProposalResult probe = driver->propose(g, rng);
                    if (!probe.move) continue;
                    const SwapMove pmv = *probe.move;
                    if (!ledger.within_budget(pmv, policy.r_budget)) continue;
                    driver->pre_apply(g, pmv);
                    g.apply_swap(pmv);
                    long long pimpr = driver->improvement(g, pmv);
                    if (driver->accepts(pimpr, strict)) {
                        PowerResult pp = leading_right_eigenvector(g, res.baseline.d_out_unit,
                                                                   policy.spectral, &v_cur);
                        thetas.push_back(angle_between(res.baseline.d_out_unit, pp.v));
                    }
                    g.apply_swap(pmv.inverse());
                }
                double mean = 0.0;
                for (double th : thetas) mean += th;
                mean /= static_cast<double>(thetas.size());
                ok = mean >= theta_cur;
                g.apply_swap(mv);
            }
        }

        if (!ok) {
            g.apply_swap(mv.inverse());
            continue;
        }

        driver->on_accept(mv, impr);
        ledger.record(mv);
        if (policy.angle_filter != AngleFilter::off) {
            v_cur = v_candidate;
            theta_cur = theta_candidate;
        }
        if (observer) observer(g, ledger);
        if (ledger.accepted % policy.recorder_stride == 0) {
            res.records.push_back(make_record(g, policy, res.baseline, ledger, driver->phi(),
                                              proposals, rng, v_warm, rec_state));
        }
    }
    // Terminal state record when the run ended off the stride grid; ensemble
    // aggregation intersects grids, so ragged tails stay out of the moments.
    if (res.records.back().t != ledger.accepted) {
        res.records.push_back(make_record(g, policy, res.baseline, ledger, driver->phi(),
                                          proposals, rng, v_warm, rec_state));
    }
    res.proposals_tried = proposals;
    res.scc_final_ok = is_strongly_connected(g);
    return res;
}

namespace {

struct PhaseOutcome {
    FractalPhase phase;
    std::vector<int> local_periphery;
};

PhaseOutcome run_cp_phase(DirectedGraph& g, PerturbationLedger& ledger,
                          std::vector<int> members, int level, int block_index, int r_level,
                          std::vector<int>& level_participation, RngStream& rng,
                          const FractalOptions& opt) {
    PhaseOutcome out;
    FractalPhase& phase = out.phase;
    phase.level = level;
    phase.block_index = block_index;
    phase.members = members;

    const int n = g.vertex_count();
    if (static_cast<int>(members.size()) < std::max(2, opt.min_split_size)) {
        phase.skipped = true;
        phase.notice = "sub-block too small to split";
        out.local_periphery = std::move(members);
        return out;
    }

    // Local degree split: rank members by degree, ties by index.
    std::vector<int> order = members;
    std::stable_sort(order.begin(), order.end(), [&](int u, int v) {
        return degree_of(g, u, opt.split_mode) > degree_of(g, v, opt.split_mode);
    });
    int core = static_cast<int>(std::ceil(opt.core_fraction * static_cast<double>(order.size())));
    core = std::clamp(core, 1, static_cast<int>(order.size()) - 1);

    std::vector<int> block(static_cast<std::size_t>(n), 1);
    for (int i = 0; i < core; ++i) block[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = 0;
    phase.local_split = Partition::from_blocks(block);

    std::vector<char> member_mask(static_cast<std::size_t>(n), 0);
    for (int v : members) member_mask[static_cast<std::size_t>(v)] = 1;
    for (std::size_t i = static_cast<std::size_t>(core); i < order.size(); ++i) {
        out.local_periphery.push_back(order[i]);
    }
    std::sort(out.local_periphery.begin(), out.local_periphery.end());

    long long m_local = 0, c_ll = 0;
    for (const auto& [u, v] : g.edges()) {
        if (member_mask[static_cast<std::size_t>(u)] && member_mask[static_cast<std::size_t>(v)]) {
            ++m_local;
            if (block[static_cast<std::size_t>(u)] == 1 && block[static_cast<std::size_t>(v)] == 1) {
                ++c_ll;
            }
        }
    }
    phase.internal_edges = m_local;
    if (m_local == 0) {
        phase.skipped = true;
        phase.notice = "sub-block has no internal edges";
        return out;
    }
    auto local_phi = [&]() {
        return static_cast<double>(m_local - 2 * c_ll) / static_cast<double>(m_local);
    };
    phase.phi_before = local_phi();

    CpSampler sampler(g, phase.local_split, opt.allow_peripheral_head, &member_mask);
    const long long min_improve = opt.allow_peripheral_head ? 0 : 1;
    long long proposals = 0;
    while (proposals < opt.max_proposals_per_phase && !sampler.exhausted()) {
        ++proposals;
        auto cand = sampler.draw(g, rng);
        if (!cand) continue;
        const SwapMove mv = *cand;
        if (level_participation[static_cast<std::size_t>(mv.a)] >= r_level ||
            level_participation[static_cast<std::size_t>(mv.b)] >= r_level ||
            level_participation[static_cast<std::size_t>(mv.c)] >= r_level ||
            level_participation[static_cast<std::size_t>(mv.d)] >= r_level) {
            continue;
        }
        long long delta_ll = 0;
        auto in_l = [&](int v) { return block[static_cast<std::size_t>(v)] == 1; };
        if (in_l(mv.a) && in_l(mv.b)) --delta_ll;
        if (in_l(mv.c) && in_l(mv.d)) --delta_ll;
        if (in_l(mv.a) && in_l(mv.d)) ++delta_ll;
        if (in_l(mv.c) && in_l(mv.b)) ++delta_ll;
        if (-delta_ll < min_improve) continue;

        g.apply_swap(mv);
        if (scc_check_due(opt.scc_guard, phase.accepted) && !is_strongly_connected(g)) {
            g.apply_swap(mv.inverse());
            continue;
        }
        ledger.record(mv);
        ++level_participation[static_cast<std::size_t>(mv.a)];
        ++level_participation[static_cast<std::size_t>(mv.b)];
        ++level_participation[static_cast<std::size_t>(mv.c)];
        ++level_participation[static_cast<std::size_t>(mv.d)];
        c_ll += delta_ll;
        sampler.on_accept(mv);
        ++phase.accepted;
        phase.phi_trace.push_back(local_phi());
    }
    phase.phi_after = local_phi();
    return out;
}

}  // namespace

FractalResult run_fractal_core_periphery(const DirectedGraph& g0, const FractalOptions& opt,
                                         std::uint64_t seed) {
    if (opt.level_budgets.empty()) throw ValidationError("fractal: need at least one level budget");
    for (int r : opt.level_budgets) {
        if (r < 1) throw ValidationError("fractal: level budgets must be positive");
    }
    if (opt.sub_blocks_per_level < 1) throw ValidationError("fractal: sub-block factor must be >= 1");
    if (!is_strongly_connected(g0)) {
        throw ValidationError("baseline graph is not strongly connected");
    }

    FractalResult res{g0, PerturbationLedger(g0.vertex_count()), {}, {}, 0,
                      static_cast<int>(opt.level_budgets.size())};
    DirectedGraph& g = res.graph;
    RngStream rng(seed);
    const int n = g.vertex_count();

    std::vector<int> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), 0);

    std::vector<std::vector<int>> peripheries;
    for (int level = 0; level < res.levels; ++level) {
        std::vector<int> level_participation(static_cast<std::size_t>(n), 0);
        std::vector<std::vector<int>> next_peripheries;
        std::vector<std::vector<int>> blocks;
        if (level == 0) {
            blocks.push_back(all);
        } else {
            // Refine every periphery block from the previous level into
            // contiguous (index-sorted) sub-blocks.
            for (const auto& per : peripheries) {
                const int nb = opt.sub_blocks_per_level;
                const auto sz = static_cast<long long>(per.size());
                for (int b = 0; b < nb; ++b) {
                    auto lo = static_cast<std::size_t>(sz * b / nb);
                    auto hi = static_cast<std::size_t>(sz * (b + 1) / nb);
                    if (hi > lo) blocks.emplace_back(per.begin() + static_cast<long>(lo),
                                                     per.begin() + static_cast<long>(hi));
                }
            }
        }
        int idx = 0;
        for (auto& blk : blocks) {
            PhaseOutcome out = run_cp_phase(g, res.ledger, std::move(blk), level, idx++,
                                            opt.level_budgets[static_cast<std::size_t>(level)],
                                            level_participation, rng, opt);
            if (out.phase.skipped) {
                res.notices.push_back("level " + std::to_string(level) + " block " +
                                      std::to_string(out.phase.block_index) + ": " +
                                      out.phase.notice);
            } else if (!out.local_periphery.empty()) {
                next_peripheries.push_back(out.local_periphery);
            }
            res.total_accepted += out.phase.accepted;
            res.phases.push_back(std::move(out.phase));
        }
        peripheries = std::move(next_peripheries);
        if (peripheries.empty() && level + 1 < res.levels) {
            res.notices.push_back("no refinable periphery blocks after level " +
                                  std::to_string(level));
            break;
        }
    }
    return res;
}

TrajectoryResult run_cycle_growth(const DirectedGraph& g0, const RewiringPolicy& policy,
                                  std::uint64_t seed) {
    policy.validate(g0);
    if (!is_strongly_connected(g0)) {
        throw ValidationError("baseline graph is not strongly connected");
    }
    const int target = policy.cycle_k;

    TrajectoryResult res{g0, PerturbationLedger(g0.vertex_count()), {}, {}, {}, 0, true};
    DirectedGraph& g = res.graph;
    PerturbationLedger& ledger = res.ledger;
    res.baseline = make_baseline(g, policy);

    RngStream rng(seed);
    auto tracked = find_k_cycle(g, 3);
    auto progress = [&]() {
        return tracked ? static_cast<double>(tracked->size()) / static_cast<double>(target) : 0.0;
    };
    res.baseline.phi0 = progress();

    Eigen::VectorXd v_warm = res.baseline.v_right0;
    RecorderState rec_state;
    long long proposals = 0;
    res.records.push_back(
        make_record(g, policy, res.baseline, ledger, progress(), 0, rng, v_warm, rec_state));

    CycleLimits limits = policy.cycle_limits;
    res.reason = TerminationReason::proposals_exhausted;

    // Stage 1: close a triangle when none exists.
    while (!tracked && proposals < policy.max_proposals) {
        ++proposals;
        auto cand = draw_k_cycle_candidate(g, 3, rng);
        if (!cand) continue;
        const SwapMove mv = *cand;
        if (!ledger.within_budget(mv, policy.r_budget)) continue;
        long long removed = k_cycles_through_edges(g, 3, {mv.removed_first(), mv.removed_second()},
                                                   limits);
        g.apply_swap(mv);
        long long added =
            k_cycles_through_edges(g, 3, {mv.added_first(), mv.added_second()}, limits);
        bool ok = added - removed >= 1;
        if (ok && scc_check_due(policy.scc_guard, ledger.accepted)) ok = is_strongly_connected(g);
        if (!ok) {
            g.apply_swap(mv.inverse());
            continue;
        }
        ledger.record(mv);
        // The accepted move closed (mv.a -> mv.d); recover one fresh triangle
        // through that edge deterministically.
        int ik = mv.a, i1 = mv.d;
        for (int b : g.out_neighbors(i1)) {
            if (b != ik && g.has_edge(b, ik)) {
                tracked = std::vector<int>{i1, b, ik};
                break;
            }
        }
        if (!tracked) tracked = find_k_cycle(g, 3);
        res.records.push_back(make_record(g, policy, res.baseline, ledger, progress(), proposals,
                                          rng, v_warm, rec_state));
    }
    if (!tracked) {
        res.proposals_tried = proposals;
        res.scc_final_ok = is_strongly_connected(g);
        return res;
    }

    // Stage 2: grow the tracked cycle one vertex per two-swap batch.
    while (static_cast<int>(tracked->size()) < target && proposals < policy.max_proposals) {
        ++proposals;
        auto batch = grow_cycle(g, *tracked, rng, 1);
        if (!batch) continue;
        const SwapMove& first = (*batch)[0];
        const SwapMove& second = (*batch)[1];

        // Per-vertex budget across the whole batch.
        std::unordered_map<int, int> uses;
        for (int v : {first.a, first.b, first.c, first.d}) ++uses[v];
        for (int v : {second.a, second.b, second.c, second.d}) ++uses[v];
        bool ok = true;
        for (const auto& [v, cnt] : uses) {
            if (ledger.participation[static_cast<std::size_t>(v)] + cnt > policy.r_budget) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;

        g.apply_swap(first);
        if (scc_check_due(policy.scc_guard, ledger.accepted) && !is_strongly_connected(g)) {
            g.apply_swap(first.inverse());
            continue;
        }
        g.apply_swap(second);
        if (scc_check_due(policy.scc_guard, ledger.accepted + 1) && !is_strongly_connected(g)) {
            g.apply_swap(second.inverse());
            g.apply_swap(first.inverse());
            continue;
        }
        ledger.record(first);
        ledger.record(second);

        // first = {u, v, w, x}: the new hop is u -> w -> v.
        std::vector<int> grown;
        grown.reserve(tracked->size() + 1);
        for (std::size_t i = 0; i < tracked->size(); ++i) {
            grown.push_back((*tracked)[i]);
            if ((*tracked)[i] == first.a &&
                (*tracked)[(i + 1) % tracked->size()] == first.b) {
                grown.push_back(first.c);
            }
        }
        *tracked = std::move(grown);
        res.records.push_back(make_record(g, policy, res.baseline, ledger, progress(), proposals,
                                          rng, v_warm, rec_state));
    }
    if (static_cast<int>(tracked->size()) >= target) {
        res.reason = TerminationReason::reached_max_accepted;
    }
    res.proposals_tried = proposals;
    res.scc_final_ok = is_strongly_connected(g);
    return res;
}

}  // namespace specnet
