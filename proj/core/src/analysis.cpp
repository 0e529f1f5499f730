#include "specnet/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "specnet/errors.hpp"

namespace specnet {

SsBound stewart_sun_bound(double kappa, double gamma, double omega_norm) {
    if (!(gamma > 0.0)) {
        throw ValidationError("stewart_sun_bound: spectral gap must be positive");
    }
    if (!(kappa >= 1.0 - 1e-9)) {
        throw ValidationError("stewart_sun_bound: distortion factor must be >= 1");
    }
    if (omega_norm < 0.0) {
        throw ValidationError("stewart_sun_bound: negative perturbation norm");
    }
    SsBound res;
    res.bound = kappa * omega_norm / gamma;
    res.condition = omega_norm < gamma / kappa;
    return res;
}

double participation_bound(const PerturbationLedger& ledger) {
    return 2.0 * static_cast<double>(ledger.max_participation());
}

std::optional<double> degree_angle_bound(double theta0, double kappa, double gamma,
                                         double omega_norm) {
    SsBound ss = stewart_sun_bound(kappa, gamma, omega_norm);
    if (!ss.condition) return std::nullopt;
    double arg = std::min(1.0, ss.bound);
    double bound = theta0 + std::asin(arg);
    return std::clamp(bound, 0.0, std::acos(-1.0) / 2.0);
}

MomentSummary ensemble_moments(const std::vector<std::vector<TrajectoryRecord>>& per_trajectory) {
    if (per_trajectory.empty()) throw ValidationError("ensemble_moments: empty ensemble");
    for (const auto& records : per_trajectory) {
        if (records.empty()) throw ValidationError("ensemble_moments: a trajectory has no records");
    }

    MomentSummary s;
    s.ensemble_size = static_cast<int>(per_trajectory.size());

    // Aggregate over the intersection of the recorded grids: trajectories that
    // stopped early (or carry an off-stride terminal record) contribute only
    // where every trajectory has a record.
    std::vector<std::size_t> cursor(per_trajectory.size(), 0);
    std::vector<std::size_t> picks(per_trajectory.size(), 0);
    while (true) {
        bool done = false;
        long long t = std::numeric_limits<long long>::min();
        for (std::size_t i = 0; i < per_trajectory.size(); ++i) {
            if (cursor[i] >= per_trajectory[i].size()) {
                done = true;
                break;
            }
            t = std::max(t, per_trajectory[i][cursor[i]].t);
        }
        if (done) break;
        bool aligned = true;
        for (std::size_t i = 0; i < per_trajectory.size(); ++i) {
            while (cursor[i] < per_trajectory[i].size() && per_trajectory[i][cursor[i]].t < t) {
                ++cursor[i];
                s.truncated = true;
            }
            if (cursor[i] >= per_trajectory[i].size() ||
                per_trajectory[i][cursor[i]].t != t) {
                aligned = false;
            }
        }
        if (!aligned) continue;
        s.grid.push_back(t);
        for (std::size_t i = 0; i < per_trajectory.size(); ++i) picks[i] = cursor[i]++;

        const double r = static_cast<double>(per_trajectory.size());
        double sp = 0.0, sp2 = 0.0, st = 0.0, st2 = 0.0;
        // Fixed accumulation order (trajectory index) for bit-reproducibility.
        for (std::size_t i = 0; i < per_trajectory.size(); ++i) {
            double phi = per_trajectory[i][picks[i]].phi;
            double theta = per_trajectory[i][picks[i]].theta;
            sp += phi;
            sp2 += phi * phi;
            st += theta;
            st2 += theta * theta;
        }
        double e_phi = sp / r, e_phi2 = sp2 / r;
        double e_theta = st / r, e_theta2 = st2 / r;
        double var_phi = e_phi2 - e_phi * e_phi;
        double var_theta = e_theta2 - e_theta * e_theta;
        s.e_phi.push_back(e_phi);
        s.e_phi2.push_back(e_phi2);
        s.var_phi.push_back(var_phi);
        s.e_theta.push_back(e_theta);
        s.e_theta2.push_back(e_theta2);
        s.hw_phi.push_back(1.96 * std::sqrt(std::max(0.0, var_phi) / r));
        s.hw_theta.push_back(1.96 * std::sqrt(std::max(0.0, var_theta) / r));
    }
    for (std::size_t i = 0; i < per_trajectory.size(); ++i) {
        if (cursor[i] < per_trajectory[i].size()) s.truncated = true;
    }
    if (s.grid.empty()) {
        throw ValidationError("ensemble_moments: trajectories share no grid points");
    }
    for (std::size_t k = 1; k < s.var_phi.size(); ++k) {
        if (s.var_phi[k] < s.var_phi[k - 1]) {
            s.var_first_decrease = static_cast<int>(k);
            break;
        }
    }
    return s;
}

namespace {

BoundRow make_row(const BaselineInfo& baseline, const TrajectoryRecord& rec) {
    BoundRow row;
    row.t = rec.t;
    row.phi = rec.phi;
    row.theta = rec.theta;
    row.omega_norm = rec.omega_norm;
    row.omega_cap = rec.omega_cap;
    row.ss_bound = rec.ss_bound;
    row.condition = rec.ss_condition;
    row.sin_rotation = std::sin(rec.theta_rot);
    row.slack = rec.ss_bound - row.sin_rotation;
    double arg = std::min(1.0, rec.ss_bound);
    row.clamped = rec.ss_bound > 1.0;
    row.theta_bound = std::clamp(baseline.theta0 + std::asin(arg), 0.0, std::acos(-1.0) / 2.0);
    row.theta_slack = row.theta_bound - rec.theta;
    return row;
}

}  // namespace

BoundReport evaluate_bounds(const BaselineInfo& baseline,
                            const std::vector<std::vector<TrajectoryRecord>>& per_trajectory) {
    BoundReport rep;
    rep.kappa0 = baseline.kappa;
    rep.gamma0 = baseline.gamma;
    rep.lambda1_0 = baseline.lambda1;
    rep.theta0 = baseline.theta0;
    rep.kappa_star = baseline.kappa;
    rep.gamma_star = baseline.gamma;
    rep.min_slack = std::numeric_limits<double>::infinity();
    rep.min_theta_slack = std::numeric_limits<double>::infinity();

    for (const auto& records : per_trajectory) {
        for (const auto& rec : records) {
            BoundRow row = make_row(baseline, rec);
            if (rec.dense_evaluated && !rec.spectral_failed) {
                if (std::isfinite(rec.kappa_t)) rep.kappa_star = std::max(rep.kappa_star, rec.kappa_t);
                if (std::isfinite(rec.gamma_t) && rec.gamma_t > 0.0) {
                    rep.gamma_star = std::min(rep.gamma_star, rec.gamma_t);
                }
            }
            if (row.condition) {
                ++rep.conforming_rows;
                rep.min_slack = std::min(rep.min_slack, row.slack);
                rep.min_theta_slack = std::min(rep.min_theta_slack, row.theta_slack);
                if (row.slack < -1e-6 || row.theta_slack < -1e-6) ++rep.violation_count;
            }
            rep.rows.push_back(row);
        }
    }
    if (rep.conforming_rows == 0) {
        rep.min_slack = 0.0;
        rep.min_theta_slack = 0.0;
    }
    return rep;
}

BoundReport evaluate_bounds(const BaselineInfo& baseline,
                            const std::vector<TrajectoryRecord>& records) {
    return evaluate_bounds(baseline, std::vector<std::vector<TrajectoryRecord>>{records});
}

EnvelopeEstimate fit_envelope(const MomentSummary& summary, const EnvelopeInputs& inputs) {
    if (summary.grid.empty()) throw ValidationError("fit_envelope: empty moment summary");

    EnvelopeEstimate est;
    est.kappa_star = inputs.kappa_star;
    est.gamma_star = inputs.gamma_star;
    est.r_budget = inputs.r_budget;
    est.alpha_configured = inputs.alpha_configured;
    est.d_max_p = inputs.d_max_p;
    est.d_max_q = inputs.d_max_q;
    est.nu = inputs.nu;

    for (std::size_t k = 0; k < summary.grid.size(); ++k) {
        double ratio = summary.e_theta[k] / (1.0 + std::abs(summary.e_phi[k]));
        if (ratio > est.m_hat) {
            est.m_hat = ratio;
            est.argmax_t = static_cast<int>(k);
        }
    }

    // First-half fit and second-half excess (reported, never asserted).
    std::size_t half = summary.grid.size() / 2;
    for (std::size_t k = 0; k < half; ++k) {
        est.m_hat_first_half = std::max(
            est.m_hat_first_half, summary.e_theta[k] / (1.0 + std::abs(summary.e_phi[k])));
    }
    if (est.m_hat_first_half > 0.0) {
        for (std::size_t k = half; k < summary.grid.size(); ++k) {
            double ratio = summary.e_theta[k] / (1.0 + std::abs(summary.e_phi[k]));
            est.second_half_excess = std::max(est.second_half_excess, ratio / est.m_hat_first_half);
        }
    }

    double dmax_product = static_cast<double>(inputs.d_max_p) * static_cast<double>(inputs.d_max_q);
    switch (inputs.stat) {
        case StatKind::assortativity:
            est.lambda_phi = inputs.nu * dmax_product;
            break;
        case StatKind::community:
        case StatKind::core_periphery:
        case StatKind::k_cycle:
        case StatKind::triangle:
        case StatKind::cycle_grow:
            est.lambda_phi = inputs.block_constant * dmax_product;
            break;
    }
    if (inputs.gamma_star > 0.0) {
        est.composite =
            (inputs.kappa_star / inputs.gamma_star) * inputs.r_budget * est.lambda_phi;
    } else {
        est.composite = std::numeric_limits<double>::infinity();
    }
    est.ratio = est.composite > 0.0 && std::isfinite(est.composite)
                    ? est.m_hat / est.composite
                    : 0.0;
    est.alpha_hill = inputs.degrees.empty() ? 0.0 : hill_alpha(inputs.degrees);
    return est;
}

double hill_alpha(const std::vector<int>& degrees, double top_fraction) {
    if (degrees.size() < 3) throw ValidationError("hill_alpha: need at least three degrees");
    if (!(top_fraction > 0.0 && top_fraction <= 0.5)) {
        throw ValidationError("hill_alpha: top fraction out of range");
    }
    std::vector<int> sorted = degrees;
    std::sort(sorted.begin(), sorted.end(), std::greater<int>());
    auto k = static_cast<std::size_t>(std::ceil(top_fraction * static_cast<double>(sorted.size())));
    k = std::min(k, sorted.size() - 1);
    if (k == 0 || sorted[k] <= 0) return std::numeric_limits<double>::infinity();
    double acc = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        acc += std::log(static_cast<double>(sorted[i]) / static_cast<double>(sorted[k]));
    }
    if (acc <= 0.0) return std::numeric_limits<double>::infinity();
    return static_cast<double>(k) / acc;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw ValidationError("loglog_slope: need two matched samples");
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
            throw ValidationError("loglog_slope: samples must be positive");
        }
        double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw ValidationError("loglog_slope: degenerate abscissae");
    return (n * sxy - sx * sy) / denom;
}

}  // namespace specnet
