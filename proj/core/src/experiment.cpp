#include "specnet/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "specnet/errors.hpp"
#include "specnet/version.hpp"

namespace specnet {

using nlohmann::json;

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    static const char* hex = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = hex[h & 0xF];
        h >>= 4;
    }
    return out;
}

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write file: " + path.string());
    out << content;
    if (!out) throw ValidationError("write failure: " + path.string());
}

namespace {

json jnum(double x) {
    if (std::isfinite(x)) return x;
    return nullptr;  // NaN / inf have no JSON form; null round-trips as NaN
}

double dnum(const json& j) {
    if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
    return j.get<double>();
}

}  // namespace

DegreeModelSpec DegreeModelSpec::parse(const std::string& text) {
    DegreeModelSpec spec;
    if (text.rfind("regular:", 0) == 0) {
        spec.kind = Kind::regular;
        spec.regular_k = std::stoi(text.substr(8));
        if (spec.regular_k < 1) throw ValidationError("regular degree must be >= 1");
        return spec;
    }
    if (text.rfind("reciprocal:", 0) == 0) {
        spec.kind = Kind::reciprocal;
        spec.regular_k = std::stoi(text.substr(11));
        if (spec.regular_k < 1) throw ValidationError("reciprocal degree must be >= 1");
        return spec;
    }
    if (text == "powerlaw") {
        spec.kind = Kind::powerlaw;
        return spec;
    }
    if (text.rfind("file:", 0) == 0) {
        spec.kind = Kind::file;
        spec.path = text.substr(5);
        if (spec.path.empty()) throw ValidationError("degree file path is empty");
        return spec;
    }
    throw ValidationError("unknown degree model '" + text +
                          "' (expected regular:<k>, reciprocal:<k>, powerlaw, or file:<path>)");
}

std::string DegreeModelSpec::describe() const {
    switch (kind) {
        case Kind::regular: return "regular:" + std::to_string(regular_k);
        case Kind::reciprocal: return "reciprocal:" + std::to_string(regular_k);
        case Kind::powerlaw: return "powerlaw";
        case Kind::file: return "file:" + path;
    }
    return "?";
}

DirectedGraph sample_reciprocal_graph(const std::vector<int>& degrees, RngStream& rng,
                                      const ConfigModelOptions& opt) {
    const int n = static_cast<int>(degrees.size());
    long long total = 0;
    for (int d : degrees) {
        if (d < 0 || d > n - 1) throw ValidationError("reciprocal degree out of range");
        total += d;
    }
    if (total % 2 != 0) throw ValidationError("reciprocal degrees need an even sum");
    std::vector<int> stubs;
    stubs.reserve(static_cast<std::size_t>(total));
    for (int v = 0; v < n; ++v) {
        for (int i = 0; i < degrees[static_cast<std::size_t>(v)]; ++i) stubs.push_back(v);
    }
    const long long pairs = static_cast<long long>(stubs.size()) / 2;
    const long long redraw_budget = opt.redraw_factor * pairs;

    for (int restart = 0; restart < opt.max_restarts; ++restart) {
        std::vector<int> s = stubs;
        for (std::size_t i = s.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(rng.next_below(i));
            std::swap(s[i - 1], s[j]);
        }
        DirectedGraph g(n);
        auto ok = [&](long long p) {
            int u = s[static_cast<std::size_t>(2 * p)];
            int v = s[static_cast<std::size_t>(2 * p + 1)];
            return u != v && !g.has_edge(u, v);
        };
        auto place = [&](long long p) {
            int u = s[static_cast<std::size_t>(2 * p)];
            int v = s[static_cast<std::size_t>(2 * p + 1)];
            g.add_edge(u, v);
            g.add_edge(v, u);
        };
        auto unplace = [&](long long p) {
            int u = s[static_cast<std::size_t>(2 * p)];
            int v = s[static_cast<std::size_t>(2 * p + 1)];
            g.remove_edge(u, v);
            g.remove_edge(v, u);
        };

        std::vector<long long> pending;
        for (long long p = 0; p < pairs; ++p) {
            if (ok(p)) {
                place(p);
            } else {
                pending.push_back(p);
            }
        }
        long long redraws = 0;
        bool failed = false;
        while (!pending.empty()) {
            if (++redraws > redraw_budget) {
                failed = true;
                break;
            }
            long long p = pending.back();
            long long qp = static_cast<long long>(rng.next_below(static_cast<std::uint64_t>(pairs)));
            if (qp == p) continue;
            bool q_placed = true;
            for (long long pe : pending) {
                if (pe == qp) {
                    q_placed = false;
                    break;
                }
            }
            if (q_placed) unplace(qp);
            std::swap(s[static_cast<std::size_t>(2 * p + 1)],
                      s[static_cast<std::size_t>(2 * qp + 1)]);
            bool accepted = false;
            if (ok(p)) {
                place(p);
                if (ok(qp)) {
                    place(qp);
                    accepted = true;
                } else {
                    unplace(p);
                }
            }
            if (accepted) {
                pending.pop_back();
                if (!q_placed) {
                    for (auto& pe : pending) {
                        if (pe == qp) {
                            pe = pending.back();
                            pending.pop_back();
                            break;
                        }
                    }
                }
            } else {
                std::swap(s[static_cast<std::size_t>(2 * p + 1)],
                          s[static_cast<std::size_t>(2 * qp + 1)]);
                if (q_placed) place(qp);
            }
        }
        if (!failed) return g;
    }
    throw InfeasibleError("reciprocal graph: retry budget exhausted");
}

DirectedGraph sample_reciprocal_regular(int n, int k, RngStream& rng,
                                        const ConfigModelOptions& opt) {
    if (n < 2) throw ValidationError("reciprocal graph needs at least two vertices");
    return sample_reciprocal_graph(std::vector<int>(static_cast<std::size_t>(n), k), rng, opt);
}

std::vector<int> sample_powerlaw_degrees(int n, double alpha, int d_min, int d_max_cap,
                                         RngStream& rng) {
    if (!(alpha > 1.0)) throw ValidationError("power-law exponent must exceed 1");
    if (d_min < 1) throw ValidationError("minimum degree must be >= 1");
    if (d_max_cap < d_min) throw ValidationError("degree cap below minimum degree");
    std::vector<double> cdf;
    cdf.reserve(static_cast<std::size_t>(d_max_cap - d_min + 1));
    double total = 0.0;
    for (int x = d_min; x <= d_max_cap; ++x) {
        total += std::pow(static_cast<double>(x), -alpha);
        cdf.push_back(total);
    }
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double u = rng.next_double() * total;
        auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        auto idx = static_cast<int>(it - cdf.begin());
        if (idx > d_max_cap - d_min) idx = d_max_cap - d_min;
        out.push_back(d_min + idx);
    }
    return out;
}

namespace {

// Raises entries from the tail of the shorter-sum side until the degree sums
// match; returns the number of unit adjustments.
long long balance_degree_sums(std::vector<int>& d_out, std::vector<int>& d_in, int cap) {
    long long sum_out = 0, sum_in = 0;
    for (int d : d_out) sum_out += d;
    for (int d : d_in) sum_in += d;
    long long adjustments = 0;
    auto bump = [&](std::vector<int>& v, long long deficit) {
        std::size_t i = v.size();
        while (deficit > 0) {
            if (i == 0) i = v.size();
            --i;
            if (v[i] < cap) {
                ++v[i];
                --deficit;
                ++adjustments;
            } else if (adjustments > 4ll * static_cast<long long>(v.size()) * cap) {
                throw InfeasibleError("cannot balance degree sums under the cap");
            }
        }
    };
    if (sum_out > sum_in) bump(d_in, sum_out - sum_in);
    if (sum_in > sum_out) bump(d_out, sum_in - sum_out);
    return adjustments;
}

void load_degree_file(const std::string& path, int n, std::vector<int>& d_out,
                      std::vector<int>& d_in) {
    std::istringstream in(read_text_file(path));
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        int o, i;
        if (!(ls >> o >> i)) {
            throw ValidationError("degree file line " + std::to_string(lineno) +
                                  ": expected '<out> <in>'");
        }
        d_out.push_back(o);
        d_in.push_back(i);
    }
    if (static_cast<int>(d_out.size()) != n) {
        throw ValidationError("degree file holds " + std::to_string(d_out.size()) +
                              " rows, expected " + std::to_string(n));
    }
}

}  // namespace

GenerateOutcome generate_baseline(const GenerateSpec& spec, std::uint64_t seed) {
    if (spec.n < 2) throw ValidationError("generation needs at least two vertices");
    const int cap = spec.degrees.d_max_cap > 0 ? std::min(spec.degrees.d_max_cap, spec.n - 1)
                                               : spec.n - 1;

    for (int attempt = 0; attempt < std::max(1, spec.scc_attempts); ++attempt) {
        RngStream rng(RngStream::derive(seed, static_cast<std::uint64_t>(attempt)));
        std::vector<int> d_out, d_in;
        long long adjustments = 0;
        bool reciprocal = spec.degrees.kind == DegreeModelSpec::Kind::reciprocal;
        switch (spec.degrees.kind) {
            case DegreeModelSpec::Kind::regular:
            case DegreeModelSpec::Kind::reciprocal: {
                if (spec.degrees.regular_k > spec.n - 1) {
                    throw ValidationError("regular degree exceeds n - 1");
                }
                d_out.assign(static_cast<std::size_t>(spec.n), spec.degrees.regular_k);
                d_in = d_out;
                break;
            }
            case DegreeModelSpec::Kind::powerlaw: {
                d_out = sample_powerlaw_degrees(spec.n, spec.degrees.alpha, spec.degrees.d_min,
                                                cap, rng);
                d_in = sample_powerlaw_degrees(spec.n, spec.degrees.alpha, spec.degrees.d_min,
                                               cap, rng);
                adjustments = balance_degree_sums(d_out, d_in, cap);
                break;
            }
            case DegreeModelSpec::Kind::file: {
                load_degree_file(spec.degrees.path, spec.n, d_out, d_in);
                long long so = 0, si = 0;
                for (int d : d_out) so += d;
                for (int d : d_in) si += d;
                if (so != si) throw ValidationError("degree file sums differ");
                break;
            }
        }

        DirectedGraph g(0);
        try {
            g = reciprocal ? sample_reciprocal_regular(spec.n, spec.degrees.regular_k, rng)
                           : sample_configuration_model(d_out, d_in, rng);
        } catch (const InfeasibleError&) {
            if (attempt + 1 >= std::max(1, spec.scc_attempts)) throw;
            continue;
        }
        long long m = g.edge_count();
        // Reciprocal baselines keep their symmetric layout unless the caller
        // explicitly asks for randomization.
        long long steps = spec.randomize_steps >= 0 ? spec.randomize_steps
                                                    : (reciprocal ? 0 : 10 * m);
        RandomizeStats stats;
        g = neutral_randomize(std::move(g), steps, rng, SccGuard::every_swap(), &stats);

        if (spec.require_scc && !is_strongly_connected(g)) continue;

        GenerateOutcome out{std::move(g), seed, steps, stats, attempt + 1, adjustments, {}, 0.0};
        if (spec.compute_spectral && out.graph.vertex_count() <= spec.spectral.dense_cap) {
            SpectralSummary s = compute_spectral_summary(out.graph, spec.spectral);
            DegreeVectors dv = DegreeVectors::of(out.graph);
            out.theta0 = angle_between(dv.d_out_unit, s.v_right);
            out.baseline = std::move(s);
        }
        return out;
    }
    throw InfeasibleError("generation: no strongly connected realization within the attempt budget");
}

std::string GenerateOutcome::metadata_json() const {
    json j;
    j["tool_version"] = kToolVersion;
    j["n"] = graph.vertex_count();
    j["m"] = graph.edge_count();
    j["seed"] = seed;
    j["attempts_used"] = attempts_used;
    j["degree_adjustments"] = degree_adjustments;
    j["randomize"] = {{"steps", randomize_steps_used},
                      {"accepted", randomize_stats.accepted},
                      {"infeasible", randomize_stats.infeasible},
                      {"scc_rejected", randomize_stats.scc_rejected}};
    auto minmax = [](const std::vector<int>& d) {
        auto [lo, hi] = std::minmax_element(d.begin(), d.end());
        return json{{"min", *lo}, {"max", *hi}};
    };
    j["out_degrees"] = minmax(graph.out_degrees());
    j["in_degrees"] = minmax(graph.in_degrees());
    j["graph_digest"] = fnv1a_hex(graph.to_edge_list());
    if (baseline) {
        j["lambda1"] = jnum(baseline->lambda1);
        j["gamma"] = jnum(baseline->gap);
        j["kappa"] = jnum(baseline->kappa);
        j["theta0"] = jnum(theta0);
        j["residual_right"] = jnum(baseline->residual_right);
        j["residual_left"] = jnum(baseline->residual_left);
        j["power_converged"] = baseline->converged;
    }
    return j.dump(2) + "\n";
}

void PolicySpec::set_stat_from_cli(const std::string& text) {
    if (text.rfind("assort:", 0) == 0) {
        stat = "assortativity";
        std::string modes = text.substr(7);
        auto dash = modes.find('-');
        if (dash == std::string::npos) {
            throw ValidationError("assortativity stat needs the form assort:<p>-<q>");
        }
        p = modes.substr(0, dash);
        q = modes.substr(dash + 1);
        degree_mode_from_string(p);
        degree_mode_from_string(q);
        return;
    }
    if (text == "community") {
        stat = "community";
        return;
    }
    if (text == "cp") {
        stat = "core_periphery";
        return;
    }
    if (text == "triangle") {
        stat = "triangle";
        cycle_k = 3;
        return;
    }
    if (text.rfind("cycle:", 0) == 0) {
        stat = "k_cycle";
        cycle_k = std::stoi(text.substr(6));
        return;
    }
    if (text.rfind("cp-fractal:", 0) == 0) {
        stat = "cp_fractal";
        int levels = std::stoi(text.substr(11));
        if (levels < 1) throw ValidationError("cp-fractal needs at least one level");
        if (static_cast<int>(level_budgets.size()) != levels) {
            level_budgets.assign(static_cast<std::size_t>(levels), r);
        }
        return;
    }
    if (text.rfind("cycle-grow:", 0) == 0) {
        stat = "cycle_grow";
        cycle_k = std::stoi(text.substr(11));
        return;
    }
    throw ValidationError("unknown statistic '" + text + "'");
}

std::string PolicySpec::to_json_text() const {
    json j;
    j["stat"] = stat;
    j["p"] = p;
    j["q"] = q;
    j["sign"] = sign;
    j["partition_file"] = partition_file;
    j["blocks"] = blocks;
    j["core_fraction"] = core_fraction;
    j["cp_allow_peripheral_head"] = cp_allow_peripheral_head;
    j["cycle_k"] = cycle_k;
    j["r"] = r;
    if (strict.has_value()) {
        j["strict"] = *strict;
    } else {
        j["strict"] = nullptr;
    }
    j["angle_filter"] = angle_filter;
    j["mean_admissible_samples"] = mean_admissible_samples;
    j["max_accepted"] = max_accepted;
    j["max_proposals"] = max_proposals;
    j["scc_guard"] = scc_guard;
    j["stride"] = stride;
    j["dense_spectral_at_records"] = dense_spectral_at_records;
    j["level_budgets"] = level_budgets;
    j["sub_blocks_per_level"] = sub_blocks_per_level;
    return j.dump();
}

PolicySpec PolicySpec::from_json_text(const std::string& text) {
    json j = json::parse(text);
    PolicySpec s;
    s.stat = j.value("stat", s.stat);
    s.p = j.value("p", s.p);
    s.q = j.value("q", s.q);
    s.sign = j.value("sign", s.sign);
    s.partition_file = j.value("partition_file", s.partition_file);
    s.blocks = j.value("blocks", s.blocks);
    s.core_fraction = j.value("core_fraction", s.core_fraction);
    s.cp_allow_peripheral_head = j.value("cp_allow_peripheral_head", s.cp_allow_peripheral_head);
    s.cycle_k = j.value("cycle_k", s.cycle_k);
    s.r = j.value("r", s.r);
    if (j.contains("strict") && !j["strict"].is_null()) s.strict = j["strict"].get<bool>();
    s.angle_filter = j.value("angle_filter", s.angle_filter);
    s.mean_admissible_samples = j.value("mean_admissible_samples", s.mean_admissible_samples);
    s.max_accepted = j.value("max_accepted", s.max_accepted);
    s.max_proposals = j.value("max_proposals", s.max_proposals);
    s.scc_guard = j.value("scc_guard", s.scc_guard);
    s.stride = j.value("stride", s.stride);
    s.dense_spectral_at_records = j.value("dense_spectral_at_records", s.dense_spectral_at_records);
    if (j.contains("level_budgets")) {
        s.level_budgets = j["level_budgets"].get<std::vector<int>>();
    }
    s.sub_blocks_per_level = j.value("sub_blocks_per_level", s.sub_blocks_per_level);
    return s;
}

SccGuard parse_scc_guard(const std::string& text) {
    if (text == "every_swap") return SccGuard::every_swap();
    if (text == "initial_only") return SccGuard::initial_only();
    if (text.rfind("every_k:", 0) == 0) {
        int k = std::stoi(text.substr(8));
        if (k < 1) throw ValidationError("scc guard period must be >= 1");
        return SccGuard::every_k(k);
    }
    throw ValidationError("unknown scc guard '" + text +
                          "' (expected every_swap, every_k:<k>, initial_only)");
}

RewiringPolicy resolve_policy(const PolicySpec& spec, const DirectedGraph& g) {
    RewiringPolicy pol;
    if (spec.stat == "assortativity") {
        pol.stat = StatKind::assortativity;
    } else if (spec.stat == "community") {
        pol.stat = StatKind::community;
    } else if (spec.stat == "core_periphery") {
        pol.stat = StatKind::core_periphery;
    } else if (spec.stat == "k_cycle") {
        pol.stat = StatKind::k_cycle;
    } else if (spec.stat == "triangle") {
        pol.stat = StatKind::triangle;
    } else if (spec.stat == "cycle_grow") {
        pol.stat = StatKind::cycle_grow;
    } else if (spec.stat == "cp_fractal") {
        throw ValidationError("cp_fractal resolves through run_fractal_core_periphery");
    } else {
        throw ValidationError("unknown statistic '" + spec.stat + "'");
    }
    pol.p = degree_mode_from_string(spec.p);
    pol.q = degree_mode_from_string(spec.q);
    pol.sign = spec.sign;
    pol.cp_allow_peripheral_head = spec.cp_allow_peripheral_head;
    pol.cycle_k = spec.cycle_k;
    pol.r_budget = spec.r;
    pol.strict = spec.strict;
    if (spec.angle_filter == "off") {
        pol.angle_filter = AngleFilter::off;
    } else if (spec.angle_filter == "pathwise") {
        pol.angle_filter = AngleFilter::pathwise_nondecreasing;
    } else if (spec.angle_filter == "mean") {
        pol.angle_filter = AngleFilter::mean_admissible;
    } else {
        throw ValidationError("unknown angle filter '" + spec.angle_filter +
                              "' (expected off, pathwise, mean)");
    }
    pol.mean_admissible_samples = spec.mean_admissible_samples;
    pol.max_accepted = spec.max_accepted;
    pol.max_proposals = spec.max_proposals;
    pol.scc_guard = parse_scc_guard(spec.scc_guard);
    pol.recorder_stride = spec.stride;
    pol.dense_spectral_at_records = spec.dense_spectral_at_records;

    if (pol.stat == StatKind::community) {
        pol.partition = spec.partition_file.empty()
                            ? Partition::contiguous_blocks(g.vertex_count(), spec.blocks)
                            : Partition::from_file_text(read_text_file(spec.partition_file),
                                                        g.vertex_count());
    } else if (pol.stat == StatKind::core_periphery) {
        pol.partition = spec.partition_file.empty()
                            ? Partition::degree_split(g, spec.core_fraction, DegreeMode::out)
                            : Partition::from_file_text(read_text_file(spec.partition_file),
                                                        g.vertex_count());
    }
    return pol;
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config parse error: ") + e.what());
    }
    ExperimentConfig cfg;
    if (!j.contains("n")) throw ValidationError("config: missing 'n'");
    cfg.n = j["n"].get<int>();
    if (j.contains("degrees")) {
        const auto& d = j["degrees"];
        std::string model = d.value("model", "regular");
        if (model == "regular") {
            cfg.degrees.kind = DegreeModelSpec::Kind::regular;
            cfg.degrees.regular_k = d.value("k", 2);
        } else if (model == "reciprocal") {
            cfg.degrees.kind = DegreeModelSpec::Kind::reciprocal;
            cfg.degrees.regular_k = d.value("k", 2);
        } else if (model == "powerlaw") {
            cfg.degrees.kind = DegreeModelSpec::Kind::powerlaw;
            cfg.degrees.alpha = d.value("alpha", 2.5);
            cfg.degrees.d_min = d.value("d_min", 1);
            cfg.degrees.d_max_cap = d.value("d_max_cap", 0);
        } else if (model == "file") {
            cfg.degrees.kind = DegreeModelSpec::Kind::file;
            cfg.degrees.path = d.value("path", "");
        } else {
            throw ValidationError("config: unknown degree model '" + model + "'");
        }
    }
    cfg.graph_file = j.value("graph_file", cfg.graph_file);
    cfg.randomize_steps = j.value("randomize_steps", cfg.randomize_steps);
    if (j.contains("policy")) cfg.policy = PolicySpec::from_json_text(j["policy"].dump());
    cfg.ensemble_size = j.value("ensemble_size", cfg.ensemble_size);
    cfg.master_seed = j.value("master_seed", cfg.master_seed);
    if (cfg.ensemble_size < 1) throw ValidationError("config: ensemble_size must be >= 1");
    return cfg;
}

std::string ExperimentConfig::to_json_text() const {
    json j;
    j["n"] = n;
    switch (degrees.kind) {
        case DegreeModelSpec::Kind::regular:
            j["degrees"] = {{"model", "regular"}, {"k", degrees.regular_k}};
            break;
        case DegreeModelSpec::Kind::reciprocal:
            j["degrees"] = {{"model", "reciprocal"}, {"k", degrees.regular_k}};
            break;
        case DegreeModelSpec::Kind::powerlaw:
            j["degrees"] = {{"model", "powerlaw"},
                            {"alpha", degrees.alpha},
                            {"d_min", degrees.d_min},
                            {"d_max_cap", degrees.d_max_cap}};
            break;
        case DegreeModelSpec::Kind::file:
            j["degrees"] = {{"model", "file"}, {"path", degrees.path}};
            break;
    }
    j["graph_file"] = graph_file;
    j["randomize_steps"] = randomize_steps;
    j["policy"] = json::parse(policy.to_json_text());
    j["ensemble_size"] = ensemble_size;
    j["master_seed"] = master_seed;
    return j.dump();
}

std::string ExperimentConfig::digest() const { return fnv1a_hex(to_json_text()); }

BaselineInfo TrajectoryFileHeader::to_baseline_info() const {
    BaselineInfo b;
    b.n = n;
    b.m = m;
    b.lambda1 = lambda1;
    b.gamma = gamma;
    b.kappa = kappa;
    b.theta0 = theta0;
    b.phi0 = phi0;
    b.residual_right = residual_right;
    b.residual_left = residual_left;
    b.gap_simple = gap_simple;
    b.near_defective = near_defective;
    b.power_converged = power_converged;
    return b;
}

namespace {

json record_to_json(const TrajectoryRecord& rec) {
    json j;
    j["t"] = rec.t;
    j["phi"] = jnum(rec.phi);
    j["theta"] = jnum(rec.theta);
    j["theta_rot"] = jnum(rec.theta_rot);
    j["omega_norm"] = jnum(rec.omega_norm);
    j["omega_cap"] = jnum(rec.omega_cap);
    j["kappa_t"] = jnum(rec.kappa_t);
    j["gamma_t"] = jnum(rec.gamma_t);
    j["lambda1_t"] = jnum(rec.lambda1_t);
    j["ss_condition"] = rec.ss_condition;
    j["ss_bound"] = jnum(rec.ss_bound);
    j["proposals"] = rec.proposals_tried;
    j["rng_digest"] = rec.rng_digest;
    j["power_converged"] = rec.power_converged;
    j["omega_norm_converged"] = rec.omega_norm_converged;
    j["spectral_failed"] = rec.spectral_failed;
    j["dense_evaluated"] = rec.dense_evaluated;
    j["theta_increase_seen"] = rec.theta_increase_seen;
    j["theta_decrease_seen"] = rec.theta_decrease_seen;
    return j;
}

TrajectoryRecord record_from_json(const json& j) {
    TrajectoryRecord rec;
    rec.t = j.at("t").get<long long>();
    rec.phi = dnum(j.at("phi"));
    rec.theta = dnum(j.at("theta"));
    rec.theta_rot = dnum(j.at("theta_rot"));
    rec.omega_norm = dnum(j.at("omega_norm"));
    rec.omega_cap = dnum(j.at("omega_cap"));
    rec.kappa_t = dnum(j.at("kappa_t"));
    rec.gamma_t = dnum(j.at("gamma_t"));
    rec.lambda1_t = dnum(j.at("lambda1_t"));
    rec.ss_condition = j.at("ss_condition").get<bool>();
    rec.ss_bound = dnum(j.at("ss_bound"));
    rec.proposals_tried = j.at("proposals").get<long long>();
    rec.rng_digest = j.at("rng_digest").get<std::string>();
    rec.power_converged = j.at("power_converged").get<bool>();
    rec.omega_norm_converged = j.at("omega_norm_converged").get<bool>();
    rec.spectral_failed = j.at("spectral_failed").get<bool>();
    rec.dense_evaluated = j.at("dense_evaluated").get<bool>();
    rec.theta_increase_seen = j.at("theta_increase_seen").get<bool>();
    rec.theta_decrease_seen = j.at("theta_decrease_seen").get<bool>();
    return rec;
}

}  // namespace

std::string trajectory_to_jsonl(const TrajectoryFileData& data) {
    const TrajectoryFileHeader& h = data.header;
    json j;
    j["format"] = h.format;
    j["version"] = h.version;
    j["tool_version"] = h.tool_version;
    j["config_digest"] = h.config_digest;
    j["graph_digest"] = h.graph_digest;
    j["seed"] = h.seed;
    j["policy"] = json::parse(h.policy.to_json_text());
    j["alpha_configured"] = h.alpha_configured;
    j["baseline"] = {{"n", h.n},
                     {"m", h.m},
                     {"lambda1", jnum(h.lambda1)},
                     {"gamma", jnum(h.gamma)},
                     {"kappa", jnum(h.kappa)},
                     {"theta0", jnum(h.theta0)},
                     {"phi0", jnum(h.phi0)},
                     {"residual_right", jnum(h.residual_right)},
                     {"residual_left", jnum(h.residual_left)},
                     {"gap_simple", h.gap_simple},
                     {"near_defective", h.near_defective},
                     {"power_converged", h.power_converged}};
    j["termination"] = h.termination;
    j["proposals_tried"] = h.proposals_tried;
    j["accepted"] = h.accepted;
    j["scc_final_ok"] = h.scc_final_ok;

    std::string out = j.dump();
    out += '\n';
    for (const auto& rec : data.records) {
        out += record_to_json(rec).dump();
        out += '\n';
    }
    return out;
}

TrajectoryFileData trajectory_from_jsonl(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    TrajectoryFileData data;
    bool have_header = false;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ValidationError("trajectory line " + std::to_string(lineno) + ": " + e.what());
        }
        if (!have_header) {
            TrajectoryFileHeader& h = data.header;
            h.format = j.value("format", "");
            if (h.format != "specnet-trajectory") {
                throw ValidationError("not a trajectory file (format '" + h.format + "')");
            }
            h.version = j.value("version", 1);
            h.tool_version = j.value("tool_version", "");
            h.config_digest = j.value("config_digest", "");
            h.graph_digest = j.value("graph_digest", "");
            h.seed = j.value("seed", 0ull);
            h.policy = PolicySpec::from_json_text(j.at("policy").dump());
            h.alpha_configured = j.value("alpha_configured", 0.0);
            const auto& b = j.at("baseline");
            h.n = b.at("n").get<int>();
            h.m = b.at("m").get<long long>();
            h.lambda1 = dnum(b.at("lambda1"));
            h.gamma = dnum(b.at("gamma"));
            h.kappa = dnum(b.at("kappa"));
            h.theta0 = dnum(b.at("theta0"));
            h.phi0 = dnum(b.at("phi0"));
            h.residual_right = dnum(b.at("residual_right"));
            h.residual_left = dnum(b.at("residual_left"));
            h.gap_simple = b.at("gap_simple").get<bool>();
            h.near_defective = b.at("near_defective").get<bool>();
            h.power_converged = b.at("power_converged").get<bool>();
            h.termination = j.value("termination", "");
            h.proposals_tried = j.value("proposals_tried", 0ll);
            h.accepted = j.value("accepted", 0ll);
            h.scc_final_ok = j.value("scc_final_ok", true);
            have_header = true;
        } else {
            data.records.push_back(record_from_json(j));
        }
    }
    if (!have_header) throw ValidationError("trajectory file has no header line");
    return data;
}

std::string single_run_config_digest(const PolicySpec& policy, const std::string& graph_digest,
                                     std::uint64_t /*seed*/) {
    // The seed identifies the run, not the configuration; leaving it out lets
    // same-policy runs with different seeds be analyzed together.
    json j;
    j["graph_digest"] = graph_digest;
    j["policy"] = json::parse(policy.to_json_text());
    return fnv1a_hex(j.dump());
}

TrajectoryFileHeader make_trajectory_header(const PolicySpec& policy,
                                            const std::string& config_digest,
                                            const std::string& graph_digest, std::uint64_t seed,
                                            const TrajectoryResult& result,
                                            double alpha_configured) {
    TrajectoryFileHeader h;
    h.tool_version = kToolVersion;
    h.config_digest = config_digest;
    h.graph_digest = graph_digest;
    h.seed = seed;
    h.policy = policy;
    h.alpha_configured = alpha_configured;
    h.n = result.baseline.n;
    h.m = result.baseline.m;
    h.lambda1 = result.baseline.lambda1;
    h.gamma = result.baseline.gamma;
    h.kappa = result.baseline.kappa;
    h.theta0 = result.baseline.theta0;
    h.phi0 = result.baseline.phi0;
    h.residual_right = result.baseline.residual_right;
    h.residual_left = result.baseline.residual_left;
    h.gap_simple = result.baseline.gap_simple;
    h.near_defective = result.baseline.near_defective;
    h.power_converged = result.baseline.power_converged;
    h.termination = to_string(result.reason);
    h.proposals_tried = result.proposals_tried;
    h.accepted = result.ledger.accepted;
    h.scc_final_ok = result.scc_final_ok;
    return h;
}

std::string moments_to_csv(const MomentSummary& moments, const std::string& config_digest) {
    std::string out = "# specnet-moments v1 tool_version=" + std::string(kToolVersion) +
                      " config_digest=" + config_digest +
                      " ensemble_size=" + std::to_string(moments.ensemble_size) +
                      " var_first_decrease=" + std::to_string(moments.var_first_decrease) +
                      (moments.truncated ? " truncated=1" : " truncated=0") + "\n";
    out += "t,e_phi,e_phi2,var_phi,e_theta,e_theta2,hw_phi,hw_theta\n";
    for (std::size_t k = 0; k < moments.grid.size(); ++k) {
        out += std::to_string(moments.grid[k]);
        out += ',' + format_double(moments.e_phi[k]);
        out += ',' + format_double(moments.e_phi2[k]);
        out += ',' + format_double(moments.var_phi[k]);
        out += ',' + format_double(moments.e_theta[k]);
        out += ',' + format_double(moments.e_theta2[k]);
        out += ',' + format_double(moments.hw_phi[k]);
        out += ',' + format_double(moments.hw_theta[k]);
        out += '\n';
    }
    return out;
}

namespace {

std::string traj_file_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "traj_%03d.jsonl", index);
    return buf;
}

EnvelopeInputs envelope_inputs_from(const PolicySpec& policy, double alpha_configured,
                                    const DirectedGraph& g, const BoundReport& report) {
    EnvelopeInputs in;
    if (policy.stat == "assortativity") {
        in.stat = StatKind::assortativity;
    } else if (policy.stat == "community") {
        in.stat = StatKind::community;
    } else if (policy.stat == "core_periphery" || policy.stat == "cp_fractal") {
        in.stat = StatKind::core_periphery;
    } else if (policy.stat == "k_cycle") {
        in.stat = StatKind::k_cycle;
    } else if (policy.stat == "triangle") {
        in.stat = StatKind::triangle;
    } else {
        in.stat = StatKind::cycle_grow;
    }
    in.r_budget = policy.r;
    in.kappa_star = report.kappa_star;
    in.gamma_star = report.gamma_star;
    in.alpha_configured = alpha_configured;

    auto max_deg = [](const std::vector<int>& d) {
        return *std::max_element(d.begin(), d.end());
    };
    if (in.stat == StatKind::assortativity) {
        DegreeMode p = degree_mode_from_string(policy.p);
        DegreeMode q = degree_mode_from_string(policy.q);
        in.d_max_p = max_deg(p == DegreeMode::out ? g.out_degrees() : g.in_degrees());
        in.d_max_q = max_deg(q == DegreeMode::out ? g.out_degrees() : g.in_degrees());
        AssortativityContext ctx = AssortativityContext::build(g, p, q);
        in.nu = ctx.degenerate() ? 0.0 : ctx.nu();
        in.degrees = p == DegreeMode::out ? g.out_degrees() : g.in_degrees();
    } else {
        in.d_max_p = max_deg(g.out_degrees());
        in.d_max_q = max_deg(g.in_degrees());
        in.degrees = g.out_degrees();
    }
    return in;
}

}  // namespace

EnsembleOutcome run_ensemble(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                             int workers) {
    if (workers < 1) throw ValidationError("worker count must be >= 1");
    std::filesystem::create_directories(out_dir);

    // Baseline graph: explicit file or seeded generation (index 0 of the seed
    // derivation; trajectories use indices 1..R).
    DirectedGraph g(0);
    double alpha_configured = 0.0;
    if (!cfg.graph_file.empty()) {
        g = DirectedGraph::from_edge_list(read_text_file(cfg.graph_file));
    } else {
        GenerateSpec gen;
        gen.n = cfg.n;
        gen.degrees = cfg.degrees;
        gen.randomize_steps = cfg.randomize_steps;
        GenerateOutcome out = generate_baseline(gen, RngStream::derive(cfg.master_seed, 0));
        write_text_file(out_dir / "baseline.meta.json", out.metadata_json());
        g = std::move(out.graph);
    }
    if (cfg.degrees.kind == DegreeModelSpec::Kind::powerlaw) alpha_configured = cfg.degrees.alpha;
    const std::string edge_text = g.to_edge_list();
    write_text_file(out_dir / "baseline.edges", edge_text);
    const std::string graph_digest = fnv1a_hex(edge_text);
    const std::string config_digest = cfg.digest();

    RewiringPolicy policy = resolve_policy(cfg.policy, g);

    const int r_count = cfg.ensemble_size;
    std::vector<std::vector<TrajectoryRecord>> per_traj(static_cast<std::size_t>(r_count));
    std::vector<std::string> terminations(static_cast<std::size_t>(r_count));
    std::vector<std::string> errors(static_cast<std::size_t>(r_count));
    std::vector<long long> accepted(static_cast<std::size_t>(r_count), 0);

    auto run_one = [&](int i) {
        std::uint64_t seed = RngStream::derive(cfg.master_seed, static_cast<std::uint64_t>(i + 1));
        try {
            TrajectoryResult res = run_trajectory(g, policy, seed);
            TrajectoryFileData data{make_trajectory_header(cfg.policy, config_digest, graph_digest,
                                                           seed, res, alpha_configured),
                                    res.records};
            write_text_file(out_dir / traj_file_name(i), trajectory_to_jsonl(data));
            per_traj[static_cast<std::size_t>(i)] = std::move(data.records);
            terminations[static_cast<std::size_t>(i)] = to_string(res.reason);
            accepted[static_cast<std::size_t>(i)] = res.ledger.accepted;
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(i)] = e.what();
        }
    };

    if (workers == 1) {
        for (int i = 0; i < r_count; ++i) run_one(i);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&, w]() {
                for (int i = w; i < r_count; i += workers) run_one(i);
            });
        }
        for (auto& th : pool) th.join();
    }

    EnsembleOutcome outcome;
    outcome.directory = out_dir;
    outcome.config_digest = config_digest;
    for (int i = 0; i < r_count; ++i) {
        outcome.trajectory_files.push_back(traj_file_name(i));
    }

    json manifest;
    manifest["tool_version"] = kToolVersion;
    manifest["config"] = json::parse(cfg.to_json_text());
    manifest["config_digest"] = config_digest;
    manifest["graph_digest"] = graph_digest;
    json trajs = json::array();
    bool any_error = false;
    for (int i = 0; i < r_count; ++i) {
        json tj;
        tj["file"] = traj_file_name(i);
        tj["seed"] = RngStream::derive(cfg.master_seed, static_cast<std::uint64_t>(i + 1));
        if (!errors[static_cast<std::size_t>(i)].empty()) {
            tj["error"] = errors[static_cast<std::size_t>(i)];
            any_error = true;
        } else {
            tj["termination"] = terminations[static_cast<std::size_t>(i)];
            tj["accepted"] = accepted[static_cast<std::size_t>(i)];
            tj["records"] = per_traj[static_cast<std::size_t>(i)].size();
            if (terminations[static_cast<std::size_t>(i)] != "reached_max_accepted") {
                outcome.all_reached_target = false;
            }
        }
        trajs.push_back(tj);
    }
    manifest["trajectories"] = trajs;

    if (any_error) {
        manifest["status"] = "failed";
        write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
        std::string combined = "ensemble: trajectory failures:";
        for (int i = 0; i < r_count; ++i) {
            if (!errors[static_cast<std::size_t>(i)].empty()) {
                combined += "\n  [" + std::to_string(i) + "] " + errors[static_cast<std::size_t>(i)];
                outcome.errors.push_back(errors[static_cast<std::size_t>(i)]);
            }
        }
        throw NumericalError(combined);
    }

    outcome.moments = ensemble_moments(per_traj);
    manifest["status"] = "ok";
    manifest["truncated_grid"] = outcome.moments.truncated;
    write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
    write_text_file(out_dir / "moments.csv", moments_to_csv(outcome.moments, config_digest));
    return outcome;
}

AnalyzeOutcome analyze_trajectories(const std::vector<std::filesystem::path>& trajectory_files,
                                    const std::filesystem::path& graph_file) {
    if (trajectory_files.empty()) throw ValidationError("analyze: no trajectory files");
    const std::string edge_text = read_text_file(graph_file);
    DirectedGraph g = DirectedGraph::from_edge_list(edge_text);
    const std::string graph_digest = fnv1a_hex(edge_text);

    std::vector<TrajectoryFileData> files;
    for (const auto& path : trajectory_files) {
        files.push_back(trajectory_from_jsonl(read_text_file(path)));
        const auto& h = files.back().header;
        if (h.graph_digest != graph_digest) {
            throw ValidationError("analyze: trajectory " + path.string() +
                                  " was produced from a different baseline graph (digest " +
                                  h.graph_digest + " vs " + graph_digest + ")");
        }
        if (h.config_digest != files.front().header.config_digest) {
            throw ValidationError("analyze: mixed config digests across trajectory files");
        }
    }

    AnalyzeOutcome out;
    BaselineInfo baseline = files.front().header.to_baseline_info();
    std::vector<std::vector<TrajectoryRecord>> per_traj;
    per_traj.reserve(files.size());
    for (auto& f : files) per_traj.push_back(f.records);

    out.report = evaluate_bounds(baseline, per_traj);
    out.moments = ensemble_moments(per_traj);
    EnvelopeInputs inputs = envelope_inputs_from(files.front().header.policy,
                                                 files.front().header.alpha_configured, g,
                                                 out.report);
    out.envelope = fit_envelope(out.moments, inputs);

    const std::string digest = files.front().header.config_digest;
    std::string csv = "# specnet-bounds v1 tool_version=" + std::string(kToolVersion) +
                      " config_digest=" + digest + "\n";
    csv += "t,phi,theta,omega_norm,omega_cap,ss_bound,condition,slack\n";
    for (const auto& row : out.report.rows) {
        csv += std::to_string(row.t);
        csv += ',' + format_double(row.phi);
        csv += ',' + format_double(row.theta);
        csv += ',' + format_double(row.omega_norm);
        csv += ',' + format_double(row.omega_cap);
        csv += ',' + format_double(row.ss_bound);
        csv += row.condition ? ",1" : ",0";
        csv += ',' + format_double(row.slack);
        csv += '\n';
    }
    out.bounds_csv = csv;

    json summary;
    summary["tool_version"] = kToolVersion;
    summary["config_digest"] = digest;
    summary["trajectories"] = files.size();
    summary["records"] = out.report.rows.size();
    summary["conforming_rows"] = out.report.conforming_rows;
    summary["violation_count"] = out.report.violation_count;
    summary["min_slack"] = jnum(out.report.min_slack);
    summary["min_theta_slack"] = jnum(out.report.min_theta_slack);
    summary["kappa0"] = jnum(out.report.kappa0);
    summary["gamma0"] = jnum(out.report.gamma0);
    summary["theta0"] = jnum(out.report.theta0);
    summary["kappa_star"] = jnum(out.report.kappa_star);
    summary["gamma_star"] = jnum(out.report.gamma_star);
    summary["m_hat"] = jnum(out.envelope.m_hat);
    summary["lambda_phi"] = jnum(out.envelope.lambda_phi);
    summary["composite"] = jnum(out.envelope.composite);
    summary["ratio"] = jnum(out.envelope.ratio);
    summary["alpha_configured"] = jnum(out.envelope.alpha_configured);
    summary["alpha_hill"] = jnum(out.envelope.alpha_hill);
    out.summary_json = summary.dump(2) + "\n";
    return out;
}

ReportOutcome report_ensemble(const std::filesystem::path& ensemble_dir) {
    const auto manifest_path = ensemble_dir / "manifest.json";
    json manifest;
    try {
        manifest = json::parse(read_text_file(manifest_path));
    } catch (const json::exception& e) {
        throw ValidationError(std::string("report: bad manifest: ") + e.what());
    }
    if (manifest.value("status", "") != "ok") {
        throw ValidationError("report: ensemble did not complete cleanly");
    }
    ExperimentConfig cfg = ExperimentConfig::from_json_text(manifest.at("config").dump());
    const std::string config_digest = manifest.at("config_digest").get<std::string>();

    std::vector<std::filesystem::path> traj_paths;
    for (const auto& tj : manifest.at("trajectories")) {
        traj_paths.push_back(ensemble_dir / tj.at("file").get<std::string>());
    }
    if (traj_paths.empty()) throw ValidationError("report: empty ensemble directory");

    AnalyzeOutcome analyzed = analyze_trajectories(traj_paths, ensemble_dir / "baseline.edges");

    ReportOutcome out;
    out.moments = analyzed.moments;
    out.envelope = analyzed.envelope;
    out.var_first_decrease = analyzed.moments.var_first_decrease;
    out.moments_csv = moments_to_csv(analyzed.moments, config_digest);

    std::string env = "# specnet-envelope v1 tool_version=" + std::string(kToolVersion) +
                      " config_digest=" + config_digest + "\n";
    env += "key,value\n";
    auto kv = [&env](const std::string& key, const std::string& value) {
        env += key + ',' + value + '\n';
    };
    kv("m_hat", format_double(out.envelope.m_hat));
    kv("m_hat_argmax_t", std::to_string(out.envelope.argmax_t));
    kv("kappa_star", format_double(out.envelope.kappa_star));
    kv("gamma_star", format_double(out.envelope.gamma_star));
    kv("r_budget", std::to_string(out.envelope.r_budget));
    kv("lambda_phi", format_double(out.envelope.lambda_phi));
    kv("composite", format_double(out.envelope.composite));
    kv("ratio", format_double(out.envelope.ratio));
    kv("alpha_configured", format_double(out.envelope.alpha_configured));
    kv("alpha_hill", format_double(out.envelope.alpha_hill));
    kv("d_max_p", std::to_string(out.envelope.d_max_p));
    kv("d_max_q", std::to_string(out.envelope.d_max_q));
    kv("nu", format_double(out.envelope.nu));
    kv("m_hat_first_half", format_double(out.envelope.m_hat_first_half));
    kv("second_half_excess", format_double(out.envelope.second_half_excess));
    kv("var_first_decrease", std::to_string(out.var_first_decrease));
    out.envelope_csv = env;
    return out;
}

}  // namespace specnet
