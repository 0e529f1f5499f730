#pragma once

#include <optional>
#include <string>
#include <vector>

#include "specnet/rewire.hpp"

namespace specnet {

struct SsBound {
    double bound = 0.0;
    bool condition = false;  // omega_norm < gamma / kappa
};

// kappa * omega_norm / gamma plus the applicability condition. Throws
// ValidationError when gamma <= 0 or kappa < 1.
SsBound stewart_sun_bound(double kappa, double gamma, double omega_norm);

// 2 * max_u s(u): the participation-based cap on ||Omega||_2.
double participation_bound(const PerturbationLedger& ledger);

// theta0 + arcsin(min(1, kappa * omega_norm / gamma)), clamped to [0, pi/2].
// Returns nullopt when the applicability condition fails.
std::optional<double> degree_angle_bound(double theta0, double kappa, double gamma,
                                         double omega_norm);

struct MomentSummary {
    std::vector<long long> grid;
    std::vector<double> e_phi, e_phi2, var_phi;
    std::vector<double> e_theta, e_theta2;
    std::vector<double> hw_phi, hw_theta;  // normal-approximation half-widths
    int ensemble_size = 0;
    // Index of the first grid point where the variance decreases, or -1.
    int var_first_decrease = -1;
    // True when some trajectory carried records outside the common grid
    // (stopped early, or ended on an off-stride terminal record).
    bool truncated = false;
};

// Sample moments over an ensemble of record sequences, aggregated on the
// intersection of their grids. Trajectories are accumulated in index order so
// the result is byte-stable under any scheduling of the underlying runs.
// Throws when the trajectories share no grid point at all.
MomentSummary ensemble_moments(const std::vector<std::vector<TrajectoryRecord>>& per_trajectory);

struct BoundRow {
    long long t = 0;
    double phi = 0.0;
    double theta = 0.0;
    double omega_norm = 0.0;
    double omega_cap = 0.0;
    double ss_bound = 0.0;
    bool condition = false;
    double sin_rotation = 0.0;
    double slack = 0.0;        // ss_bound - sin_rotation
    double theta_bound = 0.0;  // theta0 + arcsin(clamped bound)
    double theta_slack = 0.0;  // theta_bound - theta
    bool clamped = false;      // arcsin argument hit 1
};

struct BoundReport {
    double kappa0 = 1.0, gamma0 = 0.0, lambda1_0 = 0.0, theta0 = 0.0;
    std::vector<BoundRow> rows;
    double kappa_star = 1.0;  // max kappa_t over dense-evaluated records
    double gamma_star = 0.0;  // min gamma_t over dense-evaluated records
    double min_slack = 0.0;
    double min_theta_slack = 0.0;
    // Rows with condition true violating either inequality beyond 1e-6.
    int violation_count = 0;
    int conforming_rows = 0;
};

// Evaluates the rotation and degree-angle bounds on each record of a
// trajectory using its baseline spectral constants.
BoundReport evaluate_bounds(const BaselineInfo& baseline,
                            const std::vector<TrajectoryRecord>& records);

// Same, aggregating several trajectories that share a baseline.
BoundReport evaluate_bounds(const BaselineInfo& baseline,
                            const std::vector<std::vector<TrajectoryRecord>>& per_trajectory);

struct EnvelopeInputs {
    StatKind stat = StatKind::assortativity;
    int r_budget = 1;
    double kappa_star = 1.0;
    double gamma_star = 0.0;
    int d_max_p = 0;  // max tail degree (statistic's p flavor; out for structures)
    int d_max_q = 0;  // max head degree
    double nu = 1.0;              // assortativity conversion factor
    double block_constant = 1.0;  // partition/motif constant, default 1
    double alpha_configured = 0.0;
    std::vector<int> degrees;  // for the Hill tail estimate
};

struct EnvelopeEstimate {
    double m_hat = 0.0;
    int argmax_t = -1;
    double lambda_phi = 0.0;
    double composite = 0.0;  // (kappa*/gamma*) * r * Lambda_phi
    double ratio = 0.0;      // m_hat / composite
    double kappa_star = 1.0;
    double gamma_star = 0.0;
    int r_budget = 1;
    double alpha_configured = 0.0;
    double alpha_hill = 0.0;
    int d_max_p = 0, d_max_q = 0;
    double nu = 1.0;
    // Stability probe: envelope fitted on the first half of the grid, and the
    // largest factor by which the second half exceeds it (reported only).
    double m_hat_first_half = 0.0;
    double second_half_excess = 0.0;
};

// Minimal M with E[theta_t] <= M * (1 + E|phi_t|) across the grid, plus the
// statistic-specific composite scale it is compared against.
EnvelopeEstimate fit_envelope(const MomentSummary& summary, const EnvelopeInputs& inputs);

// Hill tail-index estimate from the top fraction of the degree order
// statistics. Returns +inf for degenerate (constant-tail) inputs.
double hill_alpha(const std::vector<int>& degrees, double top_fraction = 0.1);

// Least-squares slope of log(y) against log(x); reporting aid for size sweeps.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace specnet
