#pragma once

#include <Eigen/Core>
#include <map>
#include <utility>
#include <vector>

#include "specnet/graph.hpp"

namespace specnet {

struct SpectralOptions {
    double tol = 1e-10;
    // 0 means "auto": 50*n + 1000.
    int max_iter = 0;
    int dense_cap = 2000;
    // Spectral shift applied inside the power iteration; keeps the iteration
    // convergent on periodic strongly connected patterns.
    double shift = 1.0;

    int resolved_max_iter(int n) const { return max_iter > 0 ? max_iter : 50 * n + 1000; }
};

struct PowerResult {
    double lambda1 = 0.0;
    Eigen::VectorXd v;
    double residual = 0.0;
    bool converged = false;
    int iterations = 0;
};

// Leading right eigenpair of the adjacency operator by shifted power
// iteration started from the unit out-degree vector (or `warm` when given).
// The returned vector is unit norm and sign-fixed toward `sign_ref`.
PowerResult leading_right_eigenvector(const DirectedGraph& g, const Eigen::VectorXd& sign_ref,
                                      const SpectralOptions& opt = {},
                                      const Eigen::VectorXd* warm = nullptr);
PowerResult leading_left_eigenvector(const DirectedGraph& g, const Eigen::VectorXd& sign_ref,
                                     const SpectralOptions& opt = {},
                                     const Eigen::VectorXd* warm = nullptr);
// Same iteration over an explicit dense matrix (used for rank-one baselines).
PowerResult leading_right_eigenvector(const Eigen::MatrixXd& a, const Eigen::VectorXd& sign_ref,
                                      const SpectralOptions& opt = {},
                                      const Eigen::VectorXd* warm = nullptr);
PowerResult leading_left_eigenvector(const Eigen::MatrixXd& a, const Eigen::VectorXd& sign_ref,
                                     const SpectralOptions& opt = {},
                                     const Eigen::VectorXd* warm = nullptr);

struct Spectrum {
    // Ordered by nonincreasing modulus; ties broken by descending real part,
    // then descending imaginary part.
    Eigen::VectorXcd eigenvalues;
    // Unit-norm eigenvector columns, permuted consistently with eigenvalues.
    Eigen::MatrixXcd eigenvectors;
    double min_column_separation = 0.0;  // min over pairs of sin(principal angle)
    bool near_defective = false;         // separation below 1e-8
};

// Full dense eigendecomposition; throws ValidationError above the dense cap
// and NumericalError on solver failure.
Spectrum full_spectrum(const Eigen::MatrixXd& a, int dense_cap = 2000);

struct GapResult {
    double gap = 0.0;
    // False when the leading eigenvalue is not simple within 1e-9; the gap is
    // then flagged as zero rather than reported.
    bool simple = true;
};

GapResult spectral_gap(const Eigen::VectorXcd& ordered_eigenvalues);

// kappa = ||V||_2 * ||V^{-1}||_2 = sigma_max / sigma_min. The complex overload
// works on the realification [[Re, -Im], [Im, Re]]. Throws NumericalError when
// V is singular to working precision.
double distortion_factor(const Eigen::MatrixXd& v);
double distortion_factor(const Eigen::MatrixXcd& v);

// Acute angle between two nonzero vectors, in [0, pi/2].
double angle_between(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

// Integer-valued sparse matrix with signed entries; zero entries are never
// stored, and row/column absolute-sum caches are maintained incrementally.
class SparseSignedMatrix {
public:
    explicit SparseSignedMatrix(int n);

    int size() const { return n_; }
    std::size_t nonzero_count() const { return entries_.size(); }
    void add(int i, int j, int delta);
    int value(int i, int j) const;

    const std::map<std::pair<int, int>, int>& entries() const { return entries_; }
    const std::vector<long long>& row_abs_sums() const { return row_abs_; }
    const std::vector<long long>& col_abs_sums() const { return col_abs_; }
    long long max_row_abs_sum() const;
    long long max_col_abs_sum() const;
    // sqrt(||M||_1 * ||M||_inf), an upper bound on the spectral norm.
    double norm_cap() const;

    Eigen::MatrixXd to_dense() const;

private:
    int n_ = 0;
    std::map<std::pair<int, int>, int> entries_;
    std::vector<long long> row_abs_, col_abs_;
};

struct NormResult {
    double value = 0.0;
    double cap = 0.0;
    bool converged = true;
    int iterations = 0;
};

// Largest singular value via power iteration on M^T M, with the analytic cap
// sqrt(||M||_1 ||M||_inf) reported alongside.
NormResult spectral_norm(const SparseSignedMatrix& m, double tol = 1e-10, int max_iter = 10000);

enum class SpectralMethod { power_iteration, dense_full };

struct SpectralSummary {
    double lambda1 = 0.0;
    double gap = 0.0;
    double kappa = 1.0;
    Eigen::VectorXd v_right, v_left;
    double residual_right = 0.0, residual_left = 0.0;
    SpectralMethod method = SpectralMethod::power_iteration;
    bool gap_simple = true;
    bool near_defective = false;
    bool converged = true;
};

// Leading pair by power iteration; gap and distortion from the dense
// decomposition. Sign convention: v_right toward d_out_unit, v_left toward
// d_in_unit.
SpectralSummary compute_spectral_summary(const DirectedGraph& g, const SpectralOptions& opt = {});

}  // namespace specnet
