#include "specnet/graph.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "specnet/errors.hpp"

namespace specnet {

DirectedGraph::DirectedGraph(int n) : n_(n) {
    if (n < 0) throw ValidationError("vertex count must be nonnegative");
    out_adj_.resize(static_cast<std::size_t>(n));
    in_adj_.resize(static_cast<std::size_t>(n));
    out_deg_.assign(static_cast<std::size_t>(n), 0);
    in_deg_.assign(static_cast<std::size_t>(n), 0);
}

void DirectedGraph::check_vertex(int v, const char* what) const {
    if (v < 0 || v >= n_) {
        throw ValidationError(std::string(what) + " vertex index " + std::to_string(v) +
                              " out of range [0, " + std::to_string(n_) + ")");
    }
}

bool DirectedGraph::has_edge(int u, int v) const {
    if (u < 0 || u >= n_ || v < 0 || v >= n_) return false;
    return edge_index_.count(key(u, v)) != 0;
}

void DirectedGraph::add_edge(int u, int v) {
    check_vertex(u, "tail");
    check_vertex(v, "head");
    if (u == v) throw ValidationError("self-loop (" + std::to_string(u) + "," + std::to_string(v) + ")");
    auto [it, inserted] = edge_index_.emplace(key(u, v), edges_.size());
    if (!inserted) {
        throw ValidationError("duplicate edge (" + std::to_string(u) + "," + std::to_string(v) + ")");
    }
    edges_.emplace_back(u, v);
    out_adj_[static_cast<std::size_t>(u)].push_back(v);
    in_adj_[static_cast<std::size_t>(v)].push_back(u);
    ++out_deg_[static_cast<std::size_t>(u)];
    ++in_deg_[static_cast<std::size_t>(v)];
}

void DirectedGraph::remove_edge(int u, int v) {
    auto it = edge_index_.find(key(u, v));
    if (it == edge_index_.end()) {
        throw ValidationError("missing edge (" + std::to_string(u) + "," + std::to_string(v) + ")");
    }
    std::size_t idx = it->second;
    edge_index_.erase(it);
    std::size_t last = edges_.size() - 1;
    if (idx != last) {
        edges_[idx] = edges_[last];
        edge_index_[key(edges_[idx].first, edges_[idx].second)] = idx;
    }
    edges_.pop_back();

    auto& outs = out_adj_[static_cast<std::size_t>(u)];
    outs.erase(std::find(outs.begin(), outs.end(), v));
    auto& ins = in_adj_[static_cast<std::size_t>(v)];
    ins.erase(std::find(ins.begin(), ins.end(), u));
    --out_deg_[static_cast<std::size_t>(u)];
    --in_deg_[static_cast<std::size_t>(v)];
}

std::optional<std::string> DirectedGraph::swap_infeasible_reason(const SwapMove& mv) const {
    auto fmt = [](int u, int v) {
        return "(" + std::to_string(u) + "," + std::to_string(v) + ")";
    };
    if (mv.a == mv.d) return "added edge " + fmt(mv.a, mv.d) + " is a self-loop";
    if (mv.c == mv.b) return "added edge " + fmt(mv.c, mv.b) + " is a self-loop";
    if (mv.a == mv.c && mv.b == mv.d) return "removed edges coincide";
    if (!has_edge(mv.a, mv.b)) return "removed edge " + fmt(mv.a, mv.b) + " not present";
    if (!has_edge(mv.c, mv.d)) return "removed edge " + fmt(mv.c, mv.d) + " not present";
    if (has_edge(mv.a, mv.d)) return "added edge " + fmt(mv.a, mv.d) + " already present";
    if (has_edge(mv.c, mv.b)) return "added edge " + fmt(mv.c, mv.b) + " already present";
    return std::nullopt;
}

bool DirectedGraph::swap_feasible(const SwapMove& mv) const {
    return !swap_infeasible_reason(mv).has_value();
}

void DirectedGraph::apply_swap(const SwapMove& mv) {
    if (auto reason = swap_infeasible_reason(mv)) {
        throw InfeasibleError("infeasible swap: " + *reason);
    }
    remove_edge(mv.a, mv.b);
    remove_edge(mv.c, mv.d);
    add_edge(mv.a, mv.d);
    add_edge(mv.c, mv.b);
}

DirectedGraph DirectedGraph::from_edge_list(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    std::optional<DirectedGraph> g;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        // tolerate trailing CR from foreign editors
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) {
            line.pop_back();
        }
        std::size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos) continue;
        std::istringstream ls(line);
        if (!g) {
            std::string tag;
            long long n = -1;
            if (!(ls >> tag >> n) || tag != "n" || n < 0 || n > (1ll << 30)) {
                throw ValidationError("edge list line " + std::to_string(lineno) +
                                      ": expected header 'n <N>'");
            }
            std::string rest;
            if (ls >> rest) {
                throw ValidationError("edge list line " + std::to_string(lineno) +
                                      ": trailing tokens after header");
            }
            g.emplace(static_cast<int>(n));
            continue;
        }
        long long u, v;
        if (!(ls >> u >> v)) {
            throw ValidationError("edge list line " + std::to_string(lineno) + ": expected '<u> <v>'");
        }
        std::string rest;
        if (ls >> rest) {
            throw ValidationError("edge list line " + std::to_string(lineno) + ": trailing tokens");
        }
        if (u < 0 || u >= g->vertex_count() || v < 0 || v >= g->vertex_count()) {
            throw ValidationError("edge list line " + std::to_string(lineno) + ": vertex out of range");
        }
        try {
            g->add_edge(static_cast<int>(u), static_cast<int>(v));
        } catch (const ValidationError& e) {
            throw ValidationError("edge list line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (!g) throw ValidationError("empty edge list: missing 'n <N>' header");
    return std::move(*g);
}

std::string DirectedGraph::to_edge_list() const {
    std::vector<std::pair<int, int>> sorted = edges_;
    std::sort(sorted.begin(), sorted.end());
    std::string out = "n " + std::to_string(n_) + "\n";
    for (const auto& [u, v] : sorted) {
        out += std::to_string(u);
        out += ' ';
        out += std::to_string(v);
        out += '\n';
    }
    return out;
}

Eigen::MatrixXd DirectedGraph::to_dense() const {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_, n_);
    for (const auto& [u, v] : edges_) a(u, v) = 1.0;
    return a;
}

DegreeVectors DegreeVectors::of(const std::vector<int>& out_deg, const std::vector<int>& in_deg) {
    if (out_deg.size() != in_deg.size()) {
        throw ValidationError("degree sequences must have equal length");
    }
    DegreeVectors dv;
    dv.out_deg = out_deg;
    dv.in_deg = in_deg;
    auto unit = [](const std::vector<int>& d) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(d.size()));
        for (std::size_t i = 0; i < d.size(); ++i) {
            if (d[i] < 0) throw ValidationError("negative degree");
            v[static_cast<Eigen::Index>(i)] = static_cast<double>(d[i]);
        }
        double norm = v.norm();
        if (norm == 0.0) throw ValidationError("degree vector has zero norm");
        return Eigen::VectorXd(v / norm);
    };
    dv.d_out_unit = unit(out_deg);
    dv.d_in_unit = unit(in_deg);
    return dv;
}

DegreeVectors DegreeVectors::of(const DirectedGraph& g) {
    return of(g.out_degrees(), g.in_degrees());
}

bool is_strongly_connected(const DirectedGraph& g) {
    int n = g.vertex_count();
    if (n <= 1) return true;
    if (g.edge_count() < n) return false;

    // Forward and reverse reachability from vertex 0 (Kosaraju-style check).
    auto reaches_all = [n, &g](bool forward) {
        std::vector<char> seen(static_cast<std::size_t>(n), 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        int count = 1;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            const auto& nbrs = forward ? g.out_neighbors(u) : g.in_neighbors(u);
            for (int w : nbrs) {
                if (!seen[static_cast<std::size_t>(w)]) {
                    seen[static_cast<std::size_t>(w)] = 1;
                    ++count;
                    stack.push_back(w);
                }
            }
        }
        return count == n;
    };
    return reaches_all(true) && reaches_all(false);
}

Eigen::MatrixXd rank_one_neutral(const std::vector<int>& d_out, const std::vector<int>& d_in) {
    if (d_out.size() != d_in.size()) {
        throw ValidationError("degree sequences must have equal length");
    }
    long long m = 0;
    for (int d : d_out) {
        if (d < 0) throw ValidationError("negative out-degree");
        m += d;
    }
    if (m == 0) throw ValidationError("zero total degree");
    const auto n = static_cast<Eigen::Index>(d_out.size());
    Eigen::VectorXd dout(n), din(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        dout[i] = static_cast<double>(d_out[static_cast<std::size_t>(i)]);
        din[i] = static_cast<double>(d_in[static_cast<std::size_t>(i)]);
    }
    return dout * din.transpose() / static_cast<double>(m);
}

DirectedGraph sample_configuration_model(const std::vector<int>& d_out,
                                         const std::vector<int>& d_in,
                                         RngStream& rng,
                                         const ConfigModelOptions& opt) {
    if (d_out.size() != d_in.size()) {
        throw ValidationError("degree sequences must have equal length");
    }
    const int n = static_cast<int>(d_out.size());
    long long m_out = 0, m_in = 0;
    for (int d : d_out) m_out += d;
    for (int d : d_in) m_in += d;
    if (m_out != m_in) throw ValidationError("degree sums differ");
    const long long m = m_out;
    if (m == 0) return DirectedGraph(n);

    std::vector<int> tails, heads;
    tails.reserve(static_cast<std::size_t>(m));
    heads.reserve(static_cast<std::size_t>(m));
    for (int u = 0; u < n; ++u) {
        for (int i = 0; i < d_out[static_cast<std::size_t>(u)]; ++i) tails.push_back(u);
        for (int i = 0; i < d_in[static_cast<std::size_t>(u)]; ++i) heads.push_back(u);
    }

    const long long redraw_budget = opt.redraw_factor * m;
    for (int restart = 0; restart < opt.max_restarts; ++restart) {
        // Fisher-Yates over the head stubs.
        std::vector<int> h = heads;
        for (std::size_t i = h.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(rng.next_below(i));
            std::swap(h[i - 1], h[j]);
        }

        DirectedGraph g(n);
        std::vector<std::size_t> pending;  // positions whose pair currently collides
        auto ok = [&](std::size_t i) { return tails[i] != h[i] && !g.has_edge(tails[i], h[i]); };
        for (std::size_t i = 0; i < h.size(); ++i) {
            if (ok(i)) {
                g.add_edge(tails[i], h[i]);
            } else {
                pending.push_back(i);
            }
        }

        long long redraws = 0;
        bool failed = false;
        while (!pending.empty()) {
            if (++redraws > redraw_budget) {
                failed = true;
                break;
            }
            std::size_t i = pending.back();
            // Swap head stubs with a uniformly chosen position; accept when both
            // resulting pairs are admissible.
            std::size_t j = static_cast<std::size_t>(rng.next_below(h.size()));
            if (i == j) continue;
            bool j_placed = true;
            for (std::size_t p : pending) {
                if (p == j) {
                    j_placed = false;
                    break;
                }
            }
            if (j_placed) g.remove_edge(tails[j], h[j]);
            std::swap(h[i], h[j]);
            bool accepted = false;
            if (ok(i)) {
                g.add_edge(tails[i], h[i]);
                if (ok(j)) {
                    g.add_edge(tails[j], h[j]);
                    accepted = true;
                } else {
                    g.remove_edge(tails[i], h[i]);
                }
            }
            if (accepted) {
                pending.pop_back();
                if (!j_placed) {
                    for (auto& p : pending) {
                        if (p == j) {
                            p = pending.back();
                            pending.pop_back();
                            break;
                        }
                    }
                }
            } else {
                std::swap(h[i], h[j]);
                if (j_placed) g.add_edge(tails[j], h[j]);
            }
        }
        if (!failed) return g;
    }
    throw InfeasibleError("configuration model: retry budget exhausted (sequence near-infeasible)");
}

DirectedGraph neutral_randomize(DirectedGraph g, long long steps, RngStream& rng,
                                const SccGuard& guard, RandomizeStats* stats) {
    RandomizeStats local;
    const long long m = g.edge_count();
    if (m >= 2) {
        for (long long step = 0; step < steps; ++step) {
            ++local.proposals;
            auto i = static_cast<std::size_t>(rng.next_below(static_cast<std::uint64_t>(m)));
            auto j = static_cast<std::size_t>(rng.next_below(static_cast<std::uint64_t>(m)));
            if (i == j) {
                ++local.infeasible;
                continue;
            }
            auto [a, b] = g.edge_at(i);
            auto [c, d] = g.edge_at(j);
            SwapMove mv{a, b, c, d};
            if (!g.swap_feasible(mv)) {
                ++local.infeasible;
                continue;
            }
            g.apply_swap(mv);
            bool check = guard.mode == SccGuard::Mode::every_swap ||
                         (guard.mode == SccGuard::Mode::every_k && guard.k > 0 &&
                          (local.accepted + 1) % guard.k == 0);
            if (check && !is_strongly_connected(g)) {
                g.apply_swap(mv.inverse());
                ++local.scc_rejected;
                continue;
            }
            ++local.accepted;
        }
    }
    if (stats) *stats = local;
    return g;
}

}  // namespace specnet
