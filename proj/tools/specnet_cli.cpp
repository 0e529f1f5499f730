// Command-line front end: generate | rewire | ensemble | analyze | report.
//
// Exit codes: 0 success, 2 validation error, 3 infeasible or budget exhausted
// early, 4 numerical failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "specnet/errors.hpp"
#include "specnet/experiment.hpp"
#include "specnet/version.hpp"

namespace fs = std::filesystem;
using namespace specnet;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitNumerical = 4;

struct GenerateArgs {
    int n = 0;
    std::string degrees = "regular:2";
    double alpha = 2.5;
    int d_min = 1;
    int d_max_cap = 0;
    std::uint64_t seed = 1;
    long long randomize_steps = -1;
    bool no_scc = false;
    bool no_spectral = false;
    std::string out;
};

int cmd_generate(const GenerateArgs& args) {
    GenerateSpec spec;
    spec.n = args.n;
    spec.degrees = DegreeModelSpec::parse(args.degrees);
    if (spec.degrees.kind == DegreeModelSpec::Kind::powerlaw) {
        spec.degrees.alpha = args.alpha;
        spec.degrees.d_min = args.d_min;
        spec.degrees.d_max_cap = args.d_max_cap;
    }
    spec.randomize_steps = args.randomize_steps;
    spec.require_scc = !args.no_scc;
    spec.compute_spectral = !args.no_spectral;

    GenerateOutcome out = generate_baseline(spec, args.seed);
    write_text_file(args.out, out.graph.to_edge_list());
    write_text_file(args.out + ".meta.json", out.metadata_json());
    std::cout << "generated n=" << out.graph.vertex_count() << " m=" << out.graph.edge_count()
              << " attempts=" << out.attempts_used
              << " adjustments=" << out.degree_adjustments;
    if (out.baseline) {
        std::cout << " lambda1=" << format_double(out.baseline->lambda1)
                  << " gamma=" << format_double(out.baseline->gap)
                  << " kappa=" << format_double(out.baseline->kappa)
                  << " theta0=" << format_double(out.theta0);
    }
    std::cout << "\n";
    return 0;
}

struct RewireArgs {
    std::string graph;
    std::string stat = "assort:out-in";
    int sign = 1;
    std::string partition;
    int blocks = 2;
    double core_fraction = 0.25;
    bool cp_allow_peripheral_head = false;
    int r = 1;
    int strict = -1;  // -1 default, 0 off, 1 on
    std::string angle_filter = "off";
    int mean_samples = 4;
    long long max_accepted = 100;
    long long max_proposals = 100000;
    std::string scc_guard = "every_swap";
    int stride = 10;
    bool no_dense = false;
    std::vector<int> level_budgets;
    int sub_blocks = 2;
    std::uint64_t seed = 1;
    std::string out;
};

PolicySpec policy_from_args(const RewireArgs& args) {
    PolicySpec spec;
    spec.r = args.r;
    spec.set_stat_from_cli(args.stat);
    spec.sign = args.sign;
    spec.partition_file = args.partition;
    spec.blocks = args.blocks;
    spec.core_fraction = args.core_fraction;
    spec.cp_allow_peripheral_head = args.cp_allow_peripheral_head;
    if (args.strict >= 0) spec.strict = args.strict != 0;
    spec.angle_filter = args.angle_filter;
    spec.mean_admissible_samples = args.mean_samples;
    spec.max_accepted = args.max_accepted;
    spec.max_proposals = args.max_proposals;
    spec.scc_guard = args.scc_guard;
    spec.stride = args.stride;
    spec.dense_spectral_at_records = !args.no_dense;
    if (!args.level_budgets.empty()) spec.level_budgets = args.level_budgets;
    spec.sub_blocks_per_level = args.sub_blocks;
    return spec;
}

int cmd_rewire(const RewireArgs& args) {
    const std::string edge_text = read_text_file(args.graph);
    DirectedGraph g = DirectedGraph::from_edge_list(edge_text);
    const std::string graph_digest = fnv1a_hex(edge_text);
    PolicySpec spec = policy_from_args(args);

    if (spec.stat == "cp_fractal") {
        FractalOptions opt;
        opt.level_budgets = spec.level_budgets;
        opt.core_fraction = spec.core_fraction;
        opt.sub_blocks_per_level = spec.sub_blocks_per_level;
        opt.allow_peripheral_head = spec.cp_allow_peripheral_head;
        opt.max_proposals_per_phase = spec.max_proposals;
        opt.scc_guard = parse_scc_guard(spec.scc_guard);
        FractalResult res = run_fractal_core_periphery(g, opt, args.seed);

        nlohmann::json j;
        j["format"] = "specnet-fractal";
        j["version"] = 1;
        j["tool_version"] = kToolVersion;
        j["config_digest"] = single_run_config_digest(spec, graph_digest, args.seed);
        j["graph_digest"] = graph_digest;
        j["seed"] = args.seed;
        j["levels"] = res.levels;
        j["total_accepted"] = res.total_accepted;
        j["max_participation"] = res.ledger.max_participation();
        j["notices"] = res.notices;
        std::string out = j.dump() + "\n";
        for (const auto& phase : res.phases) {
            nlohmann::json p;
            p["level"] = phase.level;
            p["block"] = phase.block_index;
            p["members"] = phase.members.size();
            p["internal_edges"] = phase.internal_edges;
            p["accepted"] = phase.accepted;
            p["phi_before"] = phase.phi_before;
            p["phi_after"] = phase.phi_after;
            p["phi_trace"] = phase.phi_trace;
            p["skipped"] = phase.skipped;
            if (!phase.notice.empty()) p["notice"] = phase.notice;
            out += p.dump() + "\n";
        }
        write_text_file(args.out, out);
        std::cout << "fractal levels=" << res.levels << " accepted=" << res.total_accepted
                  << " max_participation=" << res.ledger.max_participation() << "\n";
        return 0;
    }

    RewiringPolicy policy = resolve_policy(spec, g);
    TrajectoryResult res = policy.stat == StatKind::cycle_grow
                               ? run_cycle_growth(g, policy, args.seed)
                               : run_trajectory(g, policy, args.seed);
    TrajectoryFileData data{
        make_trajectory_header(spec, single_run_config_digest(spec, graph_digest, args.seed),
                               graph_digest, args.seed, res, 0.0),
        res.records};
    write_text_file(args.out, trajectory_to_jsonl(data));
    std::cout << "rewired stat=" << spec.stat << " accepted=" << res.ledger.accepted
              << " proposals=" << res.proposals_tried << " termination=" << to_string(res.reason)
              << " records=" << res.records.size() << "\n";
    return res.reason == TerminationReason::reached_max_accepted ? 0 : kExitInfeasible;
}

int cmd_ensemble(const std::string& config_path, const std::string& out_dir, int workers) {
    ExperimentConfig cfg = ExperimentConfig::from_json_text(read_text_file(config_path));
    if (workers <= 0) {
        if (const char* env = std::getenv("SPECNET_WORKERS")) {
            workers = std::atoi(env);
        }
        if (workers <= 0) workers = 1;
    }
    EnsembleOutcome out = run_ensemble(cfg, out_dir, workers);
    std::cout << "ensemble size=" << out.trajectory_files.size() << " digest=" << out.config_digest
              << " grid_points=" << out.moments.grid.size()
              << (out.moments.truncated ? " (grid truncated)" : "") << "\n";
    return out.all_reached_target ? 0 : kExitInfeasible;
}

int cmd_analyze(const std::vector<std::string>& traj_files, const std::string& graph,
                const std::string& out_prefix) {
    std::vector<fs::path> paths(traj_files.begin(), traj_files.end());
    AnalyzeOutcome out = analyze_trajectories(paths, graph);
    write_text_file(out_prefix + ".bounds.csv", out.bounds_csv);
    write_text_file(out_prefix + ".summary.json", out.summary_json);
    std::cout << "analyzed records=" << out.report.rows.size()
              << " conforming=" << out.report.conforming_rows
              << " violations=" << out.report.violation_count
              << " min_slack=" << format_double(out.report.min_slack)
              << " m_hat=" << format_double(out.envelope.m_hat) << "\n";
    return out.report.violation_count == 0 ? 0 : kExitNumerical;
}

int cmd_report(const std::string& ensemble_dir, const std::string& out_prefix) {
    ReportOutcome out = report_ensemble(ensemble_dir);
    write_text_file(out_prefix + ".moments.csv", out.moments_csv);
    write_text_file(out_prefix + ".envelope.csv", out.envelope_csv);
    std::cout << "report grid_points=" << out.moments.grid.size()
              << " m_hat=" << format_double(out.envelope.m_hat)
              << " composite=" << format_double(out.envelope.composite)
              << " ratio=" << format_double(out.envelope.ratio);
    if (out.var_first_decrease >= 0) {
        std::cout << " var_first_decrease=" << out.var_first_decrease;
    }
    std::cout << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Degree-preserving rewiring and spectral perturbation toolkit"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "Generate a near-neutral baseline graph");
    generate->add_option("--n", gen.n, "Vertex count")->required();
    generate->add_option("--degrees", gen.degrees, "regular:<k> | powerlaw | file:<path>");
    generate->add_option("--alpha", gen.alpha, "Power-law exponent (> 1)");
    generate->add_option("--dmin", gen.d_min, "Power-law minimum degree");
    generate->add_option("--dmax-cap", gen.d_max_cap, "Power-law degree cap (0 = n-1)");
    generate->add_option("--seed", gen.seed, "Generation seed");
    generate->add_option("--randomize-steps", gen.randomize_steps,
                         "Neutral randomization proposals (-1 = 10*m)");
    generate->add_flag("--no-scc", gen.no_scc, "Do not require strong connectivity");
    generate->add_flag("--no-spectral", gen.no_spectral, "Skip baseline spectral metadata");
    generate->add_option("--out", gen.out, "Output edge-list file")->required();

    RewireArgs rew;
    auto* rewire = app.add_subcommand("rewire", "Run one statistic-driven rewiring trajectory");
    rewire->add_option("--graph", rew.graph, "Baseline edge-list file")->required();
    rewire->add_option("--stat", rew.stat,
                       "assort:<p>-<q> | community | cp | cycle:<k> | triangle | "
                       "cp-fractal:<L> | cycle-grow:<k>");
    rewire->add_option("--sign", rew.sign, "Assortativity direction (+1 or -1)");
    rewire->add_option("--partition", rew.partition, "Partition file (community / cp)");
    rewire->add_option("--blocks", rew.blocks, "Contiguous community blocks when no file given");
    rewire->add_option("--core-fraction", rew.core_fraction, "Degree-split core fraction");
    rewire->add_flag("--cp-allow-peripheral-head", rew.cp_allow_peripheral_head,
                     "Allow the donor head in the periphery (with nondecrease check)");
    rewire->add_option("--r", rew.r, "Per-node participation budget");
    rewire->add_option("--strict", rew.strict, "Require strict statistic increase (0/1)");
    rewire->add_option("--angle-filter", rew.angle_filter, "off | pathwise | mean");
    rewire->add_option("--mean-samples", rew.mean_samples, "Candidates for the mean filter");
    rewire->add_option("--max-accepted", rew.max_accepted, "Accepted-swap target");
    rewire->add_option("--max-proposals", rew.max_proposals, "Proposal budget");
    rewire->add_option("--scc-guard", rew.scc_guard, "every_swap | every_k:<k> | initial_only");
    rewire->add_option("--stride", rew.stride, "Record every this many accepted swaps");
    rewire->add_flag("--no-dense-spectral", rew.no_dense,
                     "Skip dense kappa_t/gamma_t at record points");
    rewire->add_option("--level-budgets", rew.level_budgets, "cp-fractal per-level budgets");
    rewire->add_option("--sub-blocks", rew.sub_blocks, "cp-fractal sub-blocks per level");
    rewire->add_option("--seed", rew.seed, "Trajectory seed");
    rewire->add_option("--out", rew.out, "Output trajectory file")->required();

    std::string ens_config, ens_out;
    int ens_workers = 0;
    auto* ensemble = app.add_subcommand("ensemble", "Run a seeded trajectory ensemble");
    ensemble->add_option("--config", ens_config, "Experiment config JSON")->required();
    ensemble->add_option("--out", ens_out, "Output directory")->required();
    ensemble->add_option("--workers", ens_workers,
                         "Worker threads (default: SPECNET_WORKERS or 1)");

    std::vector<std::string> ana_trajs;
    std::string ana_graph, ana_out;
    auto* analyze = app.add_subcommand("analyze", "Evaluate perturbation bounds on trajectories");
    analyze->add_option("--graph", ana_graph, "Baseline edge-list file")->required();
    analyze->add_option("--out", ana_out, "Output prefix")->required();
    analyze->add_option("trajectories", ana_trajs, "Trajectory files")->required();

    std::string rep_dir, rep_out;
    auto* report = app.add_subcommand("report", "Summarize an ensemble directory");
    report->add_option("--ensemble", rep_dir, "Ensemble directory")->required();
    report->add_option("--out", rep_out, "Output prefix")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed()) return cmd_generate(gen);
        if (rewire->parsed()) return cmd_rewire(rew);
        if (ensemble->parsed()) return cmd_ensemble(ens_config, ens_out, ens_workers);
        if (analyze->parsed()) return cmd_analyze(ana_trajs, ana_graph, ana_out);
        if (report->parsed()) return cmd_report(rep_dir, rep_out);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const DegenerateError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const InfeasibleError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return 0;
}
