#include "specnet/netstats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "specnet/errors.hpp"

namespace specnet {

const char* to_string(DegreeMode m) { return m == DegreeMode::out ? "out" : "in"; }

DegreeMode degree_mode_from_string(const std::string& s) {
    if (s == "out") return DegreeMode::out;
    if (s == "in") return DegreeMode::in;
    throw ValidationError("unknown degree mode '" + s + "' (expected 'out' or 'in')");
}

namespace {

__int128 gcd128(__int128 a, __int128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
        __int128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

}  // namespace

Rational::Rational(__int128 n, __int128 d) : num(n), den(d) {
    if (den == 0) throw ValidationError("rational with zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    __int128 g = gcd128(num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
}

double Rational::to_double() const {
    return static_cast<double>(num) / static_cast<double>(den);
}

int degree_of(const DirectedGraph& g, int v, DegreeMode mode) {
    return mode == DegreeMode::out ? g.out_degree(v) : g.in_degree(v);
}

AssortativityContext AssortativityContext::build(const DirectedGraph& g, DegreeMode p,
                                                 DegreeMode q) {
    AssortativityContext ctx;
    ctx.p = p;
    ctx.q = q;
    ctx.m = g.edge_count();
    for (const auto& [i, j] : g.edges()) {
        long long x = degree_of(g, i, p);
        long long y = degree_of(g, j, q);
        ctx.sum_x += x;
        ctx.sum_y += y;
        ctx.sum_x2 += x * x;
        ctx.sum_y2 += y * y;
        ctx.s += x * y;
    }
    return ctx;
}

Rational AssortativityContext::mu_t_exact() const { return Rational(sum_x, m); }
Rational AssortativityContext::mu_h_exact() const { return Rational(sum_y, m); }

Rational AssortativityContext::sigma_t2_exact() const {
    __int128 mm = m;
    return Rational(mm * sum_x2 - static_cast<__int128>(sum_x) * sum_x, mm * mm);
}

Rational AssortativityContext::sigma_h2_exact() const {
    __int128 mm = m;
    return Rational(mm * sum_y2 - static_cast<__int128>(sum_y) * sum_y, mm * mm);
}

double AssortativityContext::mu_t() const { return mu_t_exact().to_double(); }
double AssortativityContext::mu_h() const { return mu_h_exact().to_double(); }
double AssortativityContext::sigma_t() const { return std::sqrt(sigma_t2_exact().to_double()); }
double AssortativityContext::sigma_h() const { return std::sqrt(sigma_h2_exact().to_double()); }

bool AssortativityContext::degenerate() const {
    __int128 mm = m;
    return mm * sum_x2 - static_cast<__int128>(sum_x) * sum_x == 0 ||
           mm * sum_y2 - static_cast<__int128>(sum_y) * sum_y == 0;
}

double AssortativityContext::nu() const {
    if (m <= 0) throw ValidationError("assortativity: empty edge set");
    if (degenerate()) {
        throw DegenerateError("assortativity: degenerate degree dispersion (sigma = 0)");
    }
    return 1.0 / (sigma_t() * sigma_h());
}

double AssortativityContext::phi() const {
    if (m < 2) throw ValidationError("assortativity requires at least two edges");
    if (degenerate()) {
        throw DegenerateError("assortativity: degenerate degree dispersion (sigma = 0)");
    }
    __int128 mm = m;
    __int128 cov_num = mm * s - static_cast<__int128>(sum_x) * sum_y;
    __int128 var_x = mm * sum_x2 - static_cast<__int128>(sum_x) * sum_x;
    __int128 var_y = mm * sum_y2 - static_cast<__int128>(sum_y) * sum_y;
    return static_cast<double>(cov_num) /
           std::sqrt(static_cast<double>(var_x) * static_cast<double>(var_y));
}

double newman_assortativity(const DirectedGraph& g, DegreeMode p, DegreeMode q) {
    return AssortativityContext::build(g, p, q).phi();
}

long long degree_product_sum(const DirectedGraph& g, DegreeMode p, DegreeMode q) {
    long long s = 0;
    for (const auto& [i, j] : g.edges()) {
        s += static_cast<long long>(degree_of(g, i, p)) * degree_of(g, j, q);
    }
    return s;
}

long long swap_delta_s(const DirectedGraph& g, const SwapMove& mv, DegreeMode p, DegreeMode q) {
    if (auto reason = g.swap_infeasible_reason(mv)) {
        throw InfeasibleError("swap_delta_s: " + *reason);
    }
    long long dp = static_cast<long long>(degree_of(g, mv.a, p)) - degree_of(g, mv.c, p);
    long long dq = static_cast<long long>(degree_of(g, mv.d, q)) - degree_of(g, mv.b, q);
    return dp * dq;
}

Partition Partition::from_blocks(std::vector<int> block_of) {
    Partition part;
    part.block_of = std::move(block_of);
    int k = 0;
    for (int b : part.block_of) {
        if (b < 0) throw ValidationError("negative block id");
        k = std::max(k, b + 1);
    }
    part.block_count = k;
    part.validate(part.size());
    return part;
}

Partition Partition::from_file_text(const std::string& text, int n) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    int k = -1;
    std::vector<int> block(static_cast<std::size_t>(n), -1);
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) {
            line.pop_back();
        }
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::istringstream ls(line);
        if (k < 0) {
            std::string tag;
            if (!(ls >> tag >> k) || tag != "K" || k < 1) {
                throw ValidationError("partition line " + std::to_string(lineno) +
                                      ": expected header 'K <k>'");
            }
            continue;
        }
        long long v, b;
        if (!(ls >> v >> b)) {
            throw ValidationError("partition line " + std::to_string(lineno) +
                                  ": expected '<vertex> <block>'");
        }
        if (v < 0 || v >= n) {
            throw ValidationError("partition line " + std::to_string(lineno) +
                                  ": vertex out of range");
        }
        if (b < 0 || b >= k) {
            throw ValidationError("partition line " + std::to_string(lineno) +
                                  ": block out of range");
        }
        if (block[static_cast<std::size_t>(v)] != -1) {
            throw ValidationError("partition line " + std::to_string(lineno) +
                                  ": vertex assigned twice");
        }
        block[static_cast<std::size_t>(v)] = static_cast<int>(b);
    }
    if (k < 0) throw ValidationError("partition: missing 'K <k>' header");
    Partition part;
    part.block_of = std::move(block);
    part.block_count = k;
    part.validate(n);
    return part;
}

std::string Partition::to_file_text() const {
    std::string out = "K " + std::to_string(block_count) + "\n";
    for (std::size_t v = 0; v < block_of.size(); ++v) {
        out += std::to_string(v);
        out += ' ';
        out += std::to_string(block_of[v]);
        out += '\n';
    }
    return out;
}

Partition Partition::degree_split(const DirectedGraph& g, double core_fraction, DegreeMode mode) {
    const int n = g.vertex_count();
    if (n < 2) throw ValidationError("degree split needs at least two vertices");
    if (!(core_fraction > 0.0 && core_fraction < 1.0)) {
        throw ValidationError("core fraction must lie in (0, 1)");
    }
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int u, int v) {
        return degree_of(g, u, mode) > degree_of(g, v, mode);
    });
    int core = static_cast<int>(std::ceil(core_fraction * n));
    core = std::clamp(core, 1, n - 1);
    Partition part;
    part.block_of.assign(static_cast<std::size_t>(n), 1);
    for (int i = 0; i < core; ++i) part.block_of[static_cast<std::size_t>(order[i])] = 0;
    part.block_count = 2;
    return part;
}

Partition Partition::contiguous_blocks(int n, int k) {
    if (k < 1 || k > n) throw ValidationError("block count out of range");
    Partition part;
    part.block_of.resize(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) {
        part.block_of[static_cast<std::size_t>(v)] =
            std::min(k - 1, static_cast<int>((static_cast<long long>(v) * k) / n));
    }
    part.block_count = k;
    part.validate(n);
    return part;
}

std::vector<int> Partition::block_sizes() const {
    std::vector<int> sizes(static_cast<std::size_t>(block_count), 0);
    for (int b : block_of) ++sizes[static_cast<std::size_t>(b)];
    return sizes;
}

void Partition::validate(int n) const {
    if (static_cast<int>(block_of.size()) != n) {
        throw ValidationError("partition covers " + std::to_string(block_of.size()) +
                              " vertices, expected " + std::to_string(n));
    }
    if (block_count < 1) throw ValidationError("partition needs at least one block");
    std::vector<int> sizes(static_cast<std::size_t>(block_count), 0);
    for (int b : block_of) {
        if (b < 0 || b >= block_count) throw ValidationError("partition: unassigned or bad block");
        ++sizes[static_cast<std::size_t>(b)];
    }
    for (int k = 0; k < block_count; ++k) {
        if (sizes[static_cast<std::size_t>(k)] == 0) {
            throw ValidationError("partition block " + std::to_string(k) + " is empty");
        }
    }
}

double community_contrast(const DirectedGraph& g, const Partition& partition) {
    partition.validate(g.vertex_count());
    const long long m = g.edge_count();
    if (m < 1) throw ValidationError("community contrast requires at least one edge");
    const int k = partition.block_count;
    std::vector<long long> diag(static_cast<std::size_t>(k), 0);
    std::vector<long long> row(static_cast<std::size_t>(k), 0), col(static_cast<std::size_t>(k), 0);
    for (const auto& [i, j] : g.edges()) {
        int bi = partition.block_of[static_cast<std::size_t>(i)];
        int bj = partition.block_of[static_cast<std::size_t>(j)];
        ++row[static_cast<std::size_t>(bi)];
        ++col[static_cast<std::size_t>(bj)];
        if (bi == bj) ++diag[static_cast<std::size_t>(bi)];
    }
    // sum_k (m * c_kk - r_k * c_k) / m^2, assembled exactly before dividing.
    __int128 numer = 0;
    for (int b = 0; b < k; ++b) {
        numer += static_cast<__int128>(m) * diag[static_cast<std::size_t>(b)] -
                 static_cast<__int128>(row[static_cast<std::size_t>(b)]) *
                     col[static_cast<std::size_t>(b)];
    }
    return static_cast<double>(numer) / (static_cast<double>(m) * static_cast<double>(m));
}

long long periphery_internal_edges(const DirectedGraph& g, const Partition& partition) {
    partition.validate(g.vertex_count());
    if (partition.block_count != 2) {
        throw ValidationError("core-periphery partition must have exactly two blocks");
    }
    long long c = 0;
    for (const auto& [i, j] : g.edges()) {
        if (partition.block_of[static_cast<std::size_t>(i)] == 1 &&
            partition.block_of[static_cast<std::size_t>(j)] == 1) {
            ++c;
        }
    }
    return c;
}

double core_periphery_contrast(const DirectedGraph& g, const Partition& partition) {
    const long long m = g.edge_count();
    if (m < 1) throw ValidationError("core-periphery contrast requires at least one edge");
    long long ll = periphery_internal_edges(g, partition);
    return static_cast<double>(m - 2 * ll) / static_cast<double>(m);
}

namespace {

void check_cycle_limits(const DirectedGraph& g, int k, const CycleLimits& limits) {
    if (k < 3) throw ValidationError("cycle length must be at least 3");
    if (k > limits.k_cap) {
        throw ValidationError("cycle length " + std::to_string(k) + " above cap " +
                              std::to_string(limits.k_cap));
    }
    if (g.vertex_count() > limits.n_cap) {
        throw ValidationError("cycle counting rejected above " + std::to_string(limits.n_cap) +
                              " vertices");
    }
}

// Depth-first count of simple k-cycles anchored at their minimum vertex.
long long count_cycles_anchored(const DirectedGraph& g, int k, int anchor,
                                std::vector<char>& on_path, int at, int edges_used) {
    if (edges_used == k - 1) {
        return g.has_edge(at, anchor) ? 1 : 0;
    }
    long long total = 0;
    for (int w : g.out_neighbors(at)) {
        if (w <= anchor || on_path[static_cast<std::size_t>(w)]) continue;
        on_path[static_cast<std::size_t>(w)] = 1;
        total += count_cycles_anchored(g, k, anchor, on_path, w, edges_used + 1);
        on_path[static_cast<std::size_t>(w)] = 0;
    }
    return total;
}

}  // namespace

long long k_cycle_count(const DirectedGraph& g, int k, const CycleLimits& limits) {
    check_cycle_limits(g, k, limits);
    const int n = g.vertex_count();
    long long total = 0;
    std::vector<char> on_path(static_cast<std::size_t>(n), 0);
    for (int s = 0; s < n; ++s) {
        on_path[static_cast<std::size_t>(s)] = 1;
        total += count_cycles_anchored(g, k, s, on_path, s, 0);
        on_path[static_cast<std::size_t>(s)] = 0;
    }
    return total;
}

long long complete_k_cycle_count(int n, int k) {
    if (k < 3 || n < k) return 0;
    __int128 falling = 1;
    for (int i = 0; i < k; ++i) falling *= (n - i);
    __int128 cycles = falling / k;
    if (cycles > static_cast<__int128>(0x7FFFFFFFFFFFFFFFll)) {
        throw ValidationError("complete k-cycle count overflows 64 bits");
    }
    return static_cast<long long>(cycles);
}

double k_cycle_density(const DirectedGraph& g, int k, const CycleLimits& limits) {
    check_cycle_limits(g, k, limits);
    if (g.vertex_count() < k) {
        throw ValidationError("k-cycle density undefined for n < k");
    }
    long long denom = complete_k_cycle_count(g.vertex_count(), k);
    return static_cast<double>(k_cycle_count(g, k, limits)) / static_cast<double>(denom);
}

long long triangle_count_trace(const DirectedGraph& g) {
    long long walks = 0;
    for (const auto& [i, j] : g.edges()) {
        for (int kk : g.out_neighbors(j)) {
            if (g.has_edge(kk, i)) ++walks;
        }
    }
    // With no self-loops every closed 3-walk is a directed triangle, visited
    // once from each of its three vertices.
    if (walks % 3 != 0) throw NumericalError("trace(A^3) not divisible by 3");
    return walks / 3;
}

namespace {

struct ThroughCounter {
    const DirectedGraph& g;
    int k;
    const std::vector<std::pair<int, int>>& banned;
    std::vector<char> on_path;

    bool is_banned(int u, int v) const {
        for (const auto& [a, b] : banned) {
            if (a == u && b == v) return true;
        }
        return false;
    }

    // Counts the simple cycles that extend the seed edge: `edges_used` edges
    // are already on the walk (seed included) and the walk stands at `at`;
    // every arrival at `target` with exactly k edges closes one cycle.
    long long dfs(int at, int target, int edges_used) {
        long long total = 0;
        for (int w : g.out_neighbors(at)) {
            if (is_banned(at, w)) continue;
            if (w == target) {
                if (edges_used + 1 == k) ++total;
                continue;
            }
            if (on_path[static_cast<std::size_t>(w)]) continue;
            if (edges_used + 1 >= k) continue;  // no room left for the closing edge
            on_path[static_cast<std::size_t>(w)] = 1;
            total += dfs(w, target, edges_used + 1);
            on_path[static_cast<std::size_t>(w)] = 0;
        }
        return total;
    }
};

}  // namespace

long long k_cycles_through_edges(const DirectedGraph& g, int k,
                                 const std::vector<std::pair<int, int>>& through,
                                 const CycleLimits& limits) {
    check_cycle_limits(g, k, limits);
    long long total = 0;
    std::vector<std::pair<int, int>> banned;
    for (const auto& [u, v] : through) {
        if (!g.has_edge(u, v)) continue;
        bool dup = false;
        for (const auto& b : banned) dup = dup || b == std::make_pair(u, v);
        if (dup) continue;
        // Cycles through (u,v) that avoid previously counted seed edges; the
        // staggered bans make the union count exact.
        ThroughCounter counter{g, k, banned, std::vector<char>(
                                                  static_cast<std::size_t>(g.vertex_count()), 0)};
        counter.on_path[static_cast<std::size_t>(v)] = 1;
        counter.on_path[static_cast<std::size_t>(u)] = 1;
        total += counter.dfs(v, u, 1);
        banned.emplace_back(u, v);
    }
    return total;
}

}  // namespace specnet
