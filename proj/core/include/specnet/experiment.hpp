#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "specnet/analysis.hpp"
#include "specnet/rewire.hpp"

namespace specnet {

// FNV-1a 64-bit digest, 16 hex chars; used for graph and config fingerprints.
std::string fnv1a_hex(const std::string& bytes);

// Shortest-round-trip decimal for doubles ("%.17g" family); CSV cells and
// metadata values go through this so output is byte-stable.
std::string format_double(double x);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

struct DegreeModelSpec {
    // reciprocal: undirected k-regular graph with both orientations of every
    // edge; the adjacency matrix is symmetric, so the eigenbasis is orthogonal
    // (kappa = 1) and the Stewart-Sun condition is attainable at depth.
    enum class Kind { regular, powerlaw, file, reciprocal };
    Kind kind = Kind::regular;
    int regular_k = 2;
    double alpha = 2.5;
    int d_min = 1;
    int d_max_cap = 0;  // 0 = auto (n - 1)
    std::string path;

    // "regular:<k>" | "powerlaw" | "file:<path>" | "reciprocal:<k>"
    static DegreeModelSpec parse(const std::string& text);
    std::string describe() const;
};

// Random undirected graph with the given degree sequence (even sum), realized
// as a symmetric digraph (both orientations of every undirected edge).
DirectedGraph sample_reciprocal_graph(const std::vector<int>& degrees, RngStream& rng,
                                      const ConfigModelOptions& opt = {});

// Random undirected k-regular graph realized as a symmetric digraph.
DirectedGraph sample_reciprocal_regular(int n, int k, RngStream& rng,
                                        const ConfigModelOptions& opt = {});

// Power-law degrees by inverse-transform sampling of P(d = x) ~ x^{-alpha} on
// [d_min, d_max_cap]. Requires alpha > 1.
std::vector<int> sample_powerlaw_degrees(int n, double alpha, int d_min, int d_max_cap,
                                         RngStream& rng);

struct GenerateSpec {
    int n = 0;
    DegreeModelSpec degrees;
    long long randomize_steps = -1;  // -1: auto (10 * m)
    bool require_scc = true;
    int scc_attempts = 50;
    bool compute_spectral = true;
    SpectralOptions spectral;
};

struct GenerateOutcome {
    DirectedGraph graph;
    std::uint64_t seed = 0;
    long long randomize_steps_used = 0;
    RandomizeStats randomize_stats;
    int attempts_used = 1;             // graph realizations until the SCC check passed
    long long degree_adjustments = 0;  // entries bumped to balance the degree sums
    std::optional<SpectralSummary> baseline;
    double theta0 = 0.0;

    std::string metadata_json() const;
};

// Degree model -> configuration model -> neutral randomization, retried until
// strongly connected (when required).
GenerateOutcome generate_baseline(const GenerateSpec& spec, std::uint64_t seed);

// Flag-level policy description; resolved against a concrete graph (loading
// partition files, building degree splits) into a RewiringPolicy.
struct PolicySpec {
    std::string stat = "assortativity";
    std::string p = "out", q = "in";
    int sign = +1;
    std::string partition_file;
    int blocks = 2;              // community: contiguous blocks when no file given
    double core_fraction = 0.25; // degree split for cp / cp-fractal
    bool cp_allow_peripheral_head = false;
    int cycle_k = 3;
    int r = 1;
    std::optional<bool> strict;
    std::string angle_filter = "off";
    int mean_admissible_samples = 4;
    long long max_accepted = 100;
    long long max_proposals = 100000;
    std::string scc_guard = "every_swap";  // every_swap | every_k:<k> | initial_only
    int stride = 10;
    bool dense_spectral_at_records = true;
    std::vector<int> level_budgets;  // cp-fractal
    int sub_blocks_per_level = 2;

    // Accepts the CLI forms: assort:<p>-<q>, community, cp, cycle:<k>,
    // triangle, cp-fractal:<L>, cycle-grow:<k>.
    void set_stat_from_cli(const std::string& text);
    std::string to_json_text() const;
    static PolicySpec from_json_text(const std::string& text);
};

RewiringPolicy resolve_policy(const PolicySpec& spec, const DirectedGraph& g);
SccGuard parse_scc_guard(const std::string& text);

struct ExperimentConfig {
    int n = 0;
    DegreeModelSpec degrees;
    std::string graph_file;  // when set, overrides generation
    long long randomize_steps = -1;
    PolicySpec policy;
    int ensemble_size = 8;
    std::uint64_t master_seed = 1;

    static ExperimentConfig from_json_text(const std::string& text);
    std::string to_json_text() const;  // canonical: sorted keys, no padding
    std::string digest() const;
};

struct TrajectoryFileHeader {
    std::string format = "specnet-trajectory";
    int version = 1;
    std::string tool_version;
    std::string config_digest;
    std::string graph_digest;
    std::uint64_t seed = 0;
    PolicySpec policy;
    double alpha_configured = 0.0;  // degree-model tail exponent, 0 when n/a
    // Baseline block.
    int n = 0;
    long long m = 0;
    double lambda1 = 0, gamma = 0, kappa = 1, theta0 = 0, phi0 = 0;
    double residual_right = 0, residual_left = 0;
    bool gap_simple = true, near_defective = false, power_converged = true;
    // Termination block.
    std::string termination;
    long long proposals_tried = 0;
    long long accepted = 0;
    bool scc_final_ok = true;

    BaselineInfo to_baseline_info() const;
};

struct TrajectoryFileData {
    TrajectoryFileHeader header;
    std::vector<TrajectoryRecord> records;
};

std::string trajectory_to_jsonl(const TrajectoryFileData& data);
TrajectoryFileData trajectory_from_jsonl(const std::string& text);

// Digest used for standalone rewire runs (no ensemble config around them).
std::string single_run_config_digest(const PolicySpec& policy, const std::string& graph_digest,
                                     std::uint64_t seed);

TrajectoryFileHeader make_trajectory_header(const PolicySpec& policy,
                                            const std::string& config_digest,
                                            const std::string& graph_digest, std::uint64_t seed,
                                            const TrajectoryResult& result,
                                            double alpha_configured);

struct EnsembleOutcome {
    std::filesystem::path directory;
    std::vector<std::string> trajectory_files;
    MomentSummary moments;
    std::string config_digest;
    bool all_reached_target = true;
    std::vector<std::string> errors;
};

// Runs the configured ensemble on `workers` threads. Every byte written is a
// pure function of (config, master seed); worker count only changes timing.
EnsembleOutcome run_ensemble(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                             int workers);

std::string moments_to_csv(const MomentSummary& moments, const std::string& config_digest);

struct AnalyzeOutcome {
    BoundReport report;
    EnvelopeEstimate envelope;
    MomentSummary moments;
    std::string bounds_csv;
    std::string summary_json;
};

// Verifies digests, evaluates the perturbation bounds on every record, and
// fits the moment envelope over the supplied trajectories (which must share a
// config digest and baseline graph).
AnalyzeOutcome analyze_trajectories(const std::vector<std::filesystem::path>& trajectory_files,
                                    const std::filesystem::path& graph_file);

struct ReportOutcome {
    MomentSummary moments;
    EnvelopeEstimate envelope;
    std::string moments_csv;
    std::string envelope_csv;
    int var_first_decrease = -1;
};

// Aggregates a completed ensemble directory into gnuplot-ready CSVs.
ReportOutcome report_ensemble(const std::filesystem::path& ensemble_dir);

}  // namespace specnet
