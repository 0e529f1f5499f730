#include "specnet/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "specnet/errors.hpp"
#include "specnet/rng.hpp"

namespace specnet {

namespace {

// Shifted power iteration on a generic apply callback. The shift keeps the
// iteration convergent when eigenvalues tie in modulus (periodic patterns);
// the residual is always measured against the unshifted operator.
template <typename Apply>
PowerResult power_iterate(int n, Apply&& apply, const Eigen::VectorXd& start,
                          const Eigen::VectorXd& sign_ref, const SpectralOptions& opt) {
    PowerResult res;
    if (n == 0) throw ValidationError("power iteration on empty operator");
    Eigen::VectorXd v = start;
    double norm = v.norm();
    if (norm == 0.0) throw ValidationError("power iteration start vector is zero");
    v /= norm;

    const int max_iter = opt.resolved_max_iter(n);
    Eigen::VectorXd y(n);
    double lambda = 0.0;
    for (int it = 1; it <= max_iter; ++it) {
        apply(v, y);
        lambda = v.dot(y);
        double residual = (y - lambda * v).norm();
        res.iterations = it;
        if (residual <= opt.tol) {
            res.converged = true;
            res.residual = residual;
            break;
        }
        Eigen::VectorXd w = y + opt.shift * v;
        double wn = w.norm();
        if (wn == 0.0) {
            // Iterate annihilated; nothing further to extract.
            res.converged = false;
            res.residual = residual;
            break;
        }
        v = w / wn;
        res.residual = residual;
    }
    if (sign_ref.size() == v.size() && v.dot(sign_ref) < 0.0) v = -v;
    res.v = v;
    res.lambda1 = lambda;
    return res;
}

Eigen::VectorXd unit_degree_start(const std::vector<int>& deg) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(deg.size()));
    for (std::size_t i = 0; i < deg.size(); ++i) {
        v[static_cast<Eigen::Index>(i)] = static_cast<double>(deg[i]);
    }
    double n = v.norm();
    if (n == 0.0) {
        // Degenerate all-zero degrees: fall back to the uniform vector.
        v.setOnes();
        n = v.norm();
    }
    return v / n;
}

}  // namespace

PowerResult leading_right_eigenvector(const DirectedGraph& g, const Eigen::VectorXd& sign_ref,
                                      const SpectralOptions& opt, const Eigen::VectorXd* warm) {
    const int n = g.vertex_count();
    Eigen::VectorXd start = warm ? *warm : unit_degree_start(g.out_degrees());
    auto apply = [&g, n](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int j : g.out_neighbors(i)) acc += x[j];
            y[i] = acc;
        }
    };
    return power_iterate(n, apply, start, sign_ref, opt);
}

PowerResult leading_left_eigenvector(const DirectedGraph& g, const Eigen::VectorXd& sign_ref,
                                     const SpectralOptions& opt, const Eigen::VectorXd* warm) {
    const int n = g.vertex_count();
    Eigen::VectorXd start = warm ? *warm : unit_degree_start(g.in_degrees());
    auto apply = [&g, n](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int i : g.in_neighbors(j)) acc += x[i];
            y[j] = acc;
        }
    };
    return power_iterate(n, apply, start, sign_ref, opt);
}

PowerResult leading_right_eigenvector(const Eigen::MatrixXd& a, const Eigen::VectorXd& sign_ref,
                                      const SpectralOptions& opt, const Eigen::VectorXd* warm) {
    const int n = static_cast<int>(a.rows());
    Eigen::VectorXd start = warm ? *warm : Eigen::VectorXd(sign_ref);
    auto apply = [&a](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y.noalias() = a * x; };
    return power_iterate(n, apply, start, sign_ref, opt);
}

PowerResult leading_left_eigenvector(const Eigen::MatrixXd& a, const Eigen::VectorXd& sign_ref,
                                     const SpectralOptions& opt, const Eigen::VectorXd* warm) {
    const int n = static_cast<int>(a.rows());
    Eigen::VectorXd start = warm ? *warm : Eigen::VectorXd(sign_ref);
    auto apply = [&a](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
        y.noalias() = a.transpose() * x;
    };
    return power_iterate(n, apply, start, sign_ref, opt);
}

Spectrum full_spectrum(const Eigen::MatrixXd& a, int dense_cap) {
    if (a.rows() != a.cols()) throw ValidationError("full_spectrum: matrix must be square");
    const auto n = a.rows();
    if (n > dense_cap) {
        throw ValidationError("full_spectrum: size " + std::to_string(n) +
                              " exceeds dense cap " + std::to_string(dense_cap));
    }
    if (n == 0) throw ValidationError("full_spectrum: empty matrix");

    Eigen::EigenSolver<Eigen::MatrixXd> solver(a, /*computeEigenvectors=*/true);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("full_spectrum: eigensolver failed to converge");
    }
    Eigen::VectorXcd vals = solver.eigenvalues();
    Eigen::MatrixXcd vecs = solver.eigenvectors();

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&vals](Eigen::Index i, Eigen::Index j) {
        double mi = std::abs(vals[i]), mj = std::abs(vals[j]);
        if (mi != mj) return mi > mj;
        if (vals[i].real() != vals[j].real()) return vals[i].real() > vals[j].real();
        return vals[i].imag() > vals[j].imag();
    });

    Spectrum out;
    out.eigenvalues.resize(n);
    out.eigenvectors.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        out.eigenvalues[k] = vals[order[static_cast<std::size_t>(k)]];
        Eigen::VectorXcd col = vecs.col(order[static_cast<std::size_t>(k)]);
        double cn = col.norm();
        if (cn > 0.0) col /= cn;
        out.eigenvectors.col(k) = col;
    }

    // Pairwise sin of principal angles via the Gram matrix of unit columns.
    Eigen::MatrixXcd gram = out.eigenvectors.adjoint() * out.eigenvectors;
    double min_sep = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double c = std::min(1.0, std::abs(gram(i, j)));
            min_sep = std::min(min_sep, std::sqrt(std::max(0.0, 1.0 - c * c)));
        }
    }
    out.min_column_separation = (n > 1) ? min_sep : 1.0;
    out.near_defective = out.min_column_separation < 1e-8;
    return out;
}

GapResult spectral_gap(const Eigen::VectorXcd& ordered_eigenvalues) {
    const auto n = ordered_eigenvalues.size();
    if (n < 2) throw ValidationError("spectral_gap: need at least two eigenvalues");
    const std::complex<double> lead = ordered_eigenvalues[0];
    GapResult res;
    res.gap = std::abs(lead - ordered_eigenvalues[1]);
    for (Eigen::Index j = 1; j < n; ++j) {
        res.gap = std::min(res.gap, std::abs(lead - ordered_eigenvalues[j]));
    }
    if (res.gap < 1e-9) {
        res.simple = false;
        res.gap = 0.0;
    }
    return res;
}

double distortion_factor(const Eigen::MatrixXd& v) {
    if (v.rows() != v.cols() || v.rows() == 0) {
        throw ValidationError("distortion_factor: matrix must be square and nonempty");
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(v);
    const auto& s = svd.singularValues();
    double smax = s[0], smin = s[s.size() - 1];
    if (!(smin > 0.0) || smax / smin > 1e15) {
        throw NumericalError("distortion_factor: eigenvector matrix is singular to working precision");
    }
    return smax / smin;
}

double distortion_factor(const Eigen::MatrixXcd& v) {
    if (v.rows() != v.cols() || v.rows() == 0) {
        throw ValidationError("distortion_factor: matrix must be square and nonempty");
    }
    const auto n = v.rows();
    // Realification [[Re, -Im], [Im, Re]] shares the singular values of v
    // (each doubled), so the ratio is unchanged.
    Eigen::MatrixXd r(2 * n, 2 * n);
    r.topLeftCorner(n, n) = v.real();
    r.topRightCorner(n, n) = -v.imag();
    r.bottomLeftCorner(n, n) = v.imag();
    r.bottomRightCorner(n, n) = v.real();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(r);
    const auto& s = svd.singularValues();
    double smax = s[0], smin = s[s.size() - 1];
    if (!(smin > 0.0) || smax / smin > 1e15) {
        throw NumericalError("distortion_factor: eigenvector matrix is singular to working precision");
    }
    return smax / smin;
}

double angle_between(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    if (x.size() != y.size()) throw ValidationError("angle: dimension mismatch");
    double nx = x.norm(), ny = y.norm();
    if (nx == 0.0 || ny == 0.0) throw ValidationError("angle: zero vector");
    double c = std::abs(x.dot(y)) / (nx * ny);
    c = std::min(1.0, c);
    return std::acos(c);
}

SparseSignedMatrix::SparseSignedMatrix(int n) : n_(n) {
    if (n < 0) throw ValidationError("matrix size must be nonnegative");
    row_abs_.assign(static_cast<std::size_t>(n), 0);
    col_abs_.assign(static_cast<std::size_t>(n), 0);
}

void SparseSignedMatrix::add(int i, int j, int delta) {
    if (i < 0 || i >= n_ || j < 0 || j >= n_) throw ValidationError("entry index out of range");
    if (delta == 0) return;
    auto key = std::make_pair(i, j);
    auto it = entries_.find(key);
    int old = (it == entries_.end()) ? 0 : it->second;
    int neu = old + delta;
    row_abs_[static_cast<std::size_t>(i)] += std::abs(neu) - std::abs(old);
    col_abs_[static_cast<std::size_t>(j)] += std::abs(neu) - std::abs(old);
    if (neu == 0) {
        if (it != entries_.end()) entries_.erase(it);
    } else if (it == entries_.end()) {
        entries_.emplace(key, neu);
    } else {
        it->second = neu;
    }
}

int SparseSignedMatrix::value(int i, int j) const {
    auto it = entries_.find(std::make_pair(i, j));
    return it == entries_.end() ? 0 : it->second;
}

long long SparseSignedMatrix::max_row_abs_sum() const {
    long long m = 0;
    for (long long v : row_abs_) m = std::max(m, v);
    return m;
}

long long SparseSignedMatrix::max_col_abs_sum() const {
    long long m = 0;
    for (long long v : col_abs_) m = std::max(m, v);
    return m;
}

double SparseSignedMatrix::norm_cap() const {
    // ||M||_1 = max column abs sum, ||M||_inf = max row abs sum.
    return std::sqrt(static_cast<double>(max_col_abs_sum()) *
                     static_cast<double>(max_row_abs_sum()));
}

Eigen::MatrixXd SparseSignedMatrix::to_dense() const {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_, n_);
    for (const auto& [ij, v] : entries_) a(ij.first, ij.second) = static_cast<double>(v);
    return a;
}

NormResult spectral_norm(const SparseSignedMatrix& m, double tol, int max_iter) {
    NormResult res;
    res.cap = m.norm_cap();
    if (m.nonzero_count() == 0) return res;

    const int n = m.size();
    Eigen::VectorXd x(n), y(n), z(n);

    // Deterministic restarts with distinct start vectors guard against a start
    // that happens to lie in the kernel of M.
    for (std::uint64_t attempt = 0; attempt < 3; ++attempt) {
        RngStream init(0xC0FFEEull + attempt);
        for (int i = 0; i < n; ++i) x[i] = 0.5 + init.next_double();
        x /= x.norm();

        double sigma2 = 0.0, prev = -1.0;
        bool dead = false;
        for (int it = 1; it <= max_iter; ++it) {
            y.setZero();
            for (const auto& [ij, v] : m.entries()) {
                y[ij.first] += static_cast<double>(v) * x[ij.second];
            }
            z.setZero();
            for (const auto& [ij, v] : m.entries()) {
                z[ij.second] += static_cast<double>(v) * y[ij.first];
            }
            sigma2 = x.dot(z);
            res.iterations = it;
            double zn = z.norm();
            if (zn == 0.0) {
                dead = true;
                break;
            }
            if (prev >= 0.0 && std::abs(sigma2 - prev) <= tol * std::max(1.0, sigma2)) {
                res.value = std::sqrt(std::max(0.0, sigma2));
                res.converged = true;
                return res;
            }
            prev = sigma2;
            x = z / zn;
        }
        if (!dead) {
            res.value = std::sqrt(std::max(0.0, sigma2));
            res.converged = false;
            return res;
        }
        // Start vector was annihilated: retry with the next deterministic seed.
    }
    // Every restart died in the kernel; the operator norm may still be positive
    // but nothing was recovered. Report zero unconverged, bounded by the cap.
    res.value = 0.0;
    res.converged = false;
    return res;
}

SpectralSummary compute_spectral_summary(const DirectedGraph& g, const SpectralOptions& opt) {
    SpectralSummary s;
    DegreeVectors dv = DegreeVectors::of(g);

    PowerResult right = leading_right_eigenvector(g, dv.d_out_unit, opt);
    PowerResult left = leading_left_eigenvector(g, dv.d_in_unit, opt);

    Spectrum spec = full_spectrum(g.to_dense(), opt.dense_cap);
    GapResult gap = spectral_gap(spec.eigenvalues);
    s.gap = gap.gap;
    s.gap_simple = gap.simple;
    s.near_defective = spec.near_defective;
    try {
        s.kappa = distortion_factor(spec.eigenvectors);
    } catch (const NumericalError&) {
        // Effectively defective eigenbasis: the distortion is unbounded and
        // every perturbation condition built on it is vacuous.
        s.kappa = std::numeric_limits<double>::infinity();
        s.near_defective = true;
    }

    if (right.converged && left.converged) {
        s.method = SpectralMethod::power_iteration;
        s.lambda1 = right.lambda1;
        s.v_right = right.v;
        s.v_left = left.v;
        s.residual_right = right.residual;
        s.residual_left = left.residual;
        s.converged = true;
    } else {
        // Fall back to the dense leading column, rotated to a real vector.
        s.method = SpectralMethod::dense_full;
        s.lambda1 = std::abs(spec.eigenvalues[0]);
        auto realize = [&](const Eigen::VectorXcd& col, const Eigen::VectorXd& ref) {
            Eigen::Index imax = 0;
            col.cwiseAbs().maxCoeff(&imax);
            std::complex<double> phase = col[imax] / std::abs(col[imax]);
            Eigen::VectorXd v = (col / phase).real();
            double nn = v.norm();
            if (nn > 0) v /= nn;
            if (v.dot(ref) < 0) v = -v;
            return v;
        };
        s.v_right = realize(spec.eigenvectors.col(0), dv.d_out_unit);
        Eigen::MatrixXd at = g.to_dense().transpose();
        Spectrum lspec = full_spectrum(at, opt.dense_cap);
        s.v_left = realize(lspec.eigenvectors.col(0), dv.d_in_unit);
        Eigen::MatrixXd a = g.to_dense();
        s.residual_right = (a * s.v_right - s.lambda1 * s.v_right).norm();
        s.residual_left = (at * s.v_left - s.lambda1 * s.v_left).norm();
        s.converged = false;
    }
    return s;
}

}  // namespace specnet
