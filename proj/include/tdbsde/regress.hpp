#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

#include "tdbsde/core.hpp"

namespace tdbsde {

struct BasisSpec {
  int degree = 3;
  // Append the previous iterate's delay integrals to the regression state.
  bool augment_delay_state = false;
};

/// Least-squares projection onto polynomials of total degree <= p in the
/// standardised state. Probabilists' Hermite polynomials are used per
/// coordinate, which keeps the Gram matrix close to the identity for
/// Gaussian states. Columns with no spread are constant and get dropped, so a
/// degenerate state (t = 0) projects onto the plain average.
template <class Scalar>
class SliceRegression {
 public:
  using Matrix = MatrixX<Scalar>;
  using Vector = VectorX<Scalar>;

  SliceRegression(const Matrix& state, int degree) {
    if (degree < 0) throw UsageError("SliceRegression: degree must be >= 0");
    const Index rows = state.rows();
    if (rows < 1) throw UsageError("SliceRegression: empty state");

    std::vector<Vector> columns;
    for (Index c = 0; c < state.cols(); ++c) {
      const Scalar mean = state.col(c).mean();
      const Scalar sd =
          std::sqrt((state.col(c).array() - mean).square().sum() / static_cast<Scalar>(rows));
      if (!(sd > static_cast<Scalar>(1e-9) * (1 + std::abs(mean)))) continue;
      columns.push_back((state.col(c).array() - mean) / sd);
    }

    std::vector<std::vector<int>> exponents;
    std::vector<int> current(columns.size(), 0);
    enumerate(exponents, current, 0, degree);

    design_.resize(rows, static_cast<Index>(exponents.size()));
    for (std::size_t b = 0; b < exponents.size(); ++b) {
      Vector col = Vector::Ones(rows);
      for (std::size_t c = 0; c < columns.size(); ++c)
        if (exponents[b][c] > 0) col.array() *= hermite(columns[c], exponents[b][c]).array();
      design_.col(static_cast<Index>(b)) = col;
    }

    Matrix gram = design_.transpose() * design_ / static_cast<Scalar>(rows);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    const Scalar lo = eig.eigenvalues().minCoeff();
    const Scalar hi = eig.eigenvalues().maxCoeff();
    condition_ = lo > 0 ? static_cast<double>(hi / lo) : std::numeric_limits<double>::infinity();
    if (!(condition_ < 1e12) || rows <= design_.cols()) {
      const Scalar ridge = static_cast<Scalar>(1e-8) * gram.trace() / static_cast<Scalar>(gram.rows());
      gram.diagonal().array() += ridge;
      regularized_ = true;
    }
    solver_.compute(gram);
  }

  Index basis_size() const noexcept { return design_.cols(); }
  double condition_number() const noexcept { return condition_; }
  bool regularized() const noexcept { return regularized_; }
  const Matrix& design() const noexcept { return design_; }

  Matrix coefficients(const Matrix& targets) const {
    if (targets.rows() != design_.rows())
      throw UsageError("SliceRegression: target row count differs from state");
    const Matrix rhs = design_.transpose() * targets / static_cast<Scalar>(design_.rows());
    return solver_.solve(rhs);
  }

  Matrix fit(const Matrix& targets) const { return design_ * coefficients(targets); }

 private:
  static void enumerate(std::vector<std::vector<int>>& out, std::vector<int>& current,
                        std::size_t pos, int remaining) {
    if (pos == current.size()) {
      out.push_back(current);
      return;
    }
    for (int e = 0; e <= remaining; ++e) {
      current[pos] = e;
      enumerate(out, current, pos + 1, remaining - e);
    }
    current[pos] = 0;
  }

  static Vector hermite(const Vector& x, int order) {
    Vector prev = Vector::Ones(x.size());
    if (order == 0) return prev;
    Vector cur = x;
    for (int k = 1; k < order; ++k) {
      Vector next = x.cwiseProduct(cur) - static_cast<Scalar>(k) * prev;
      prev = std::move(cur);
      cur = std::move(next);
    }
    return cur;
  }

  Matrix design_;
  Eigen::LDLT<Matrix> solver_;
  double condition_ = 1.0;
  bool regularized_ = false;
};

/// Regression state at node i: W_{t_i}, followed by X_{t_i} when the ensemble
/// carries a forward component.
template <class Scalar>
MatrixX<Scalar> regression_state(const PathEnsemble<Scalar>& e, int i) {
  const auto& W = e.paths->W[static_cast<std::size_t>(i)];
  if (!e.has_forward()) return W;
  const auto& X = e.X[static_cast<std::size_t>(i)];
  MatrixX<Scalar> s(W.rows(), W.cols() + X.cols());
  s << W, X;
  return s;
}

namespace detail {
template <class Scalar>
void check_node(const PathEnsemble<Scalar>& e, int i, int last, const char* who) {
  detail::require_nonempty(e, who);
  if (i < 0 || i > last) throw UsageError(std::string(who) + ": node index out of range");
}
}  // namespace detail

/// Per-path least-squares surrogate of E[target | F_{t_i}].
template <class Scalar>
MatrixX<Scalar> cond_expect(const MatrixX<Scalar>& target, const PathEnsemble<Scalar>& e, int i,
                            const BasisSpec& basis) {
  detail::check_node(e, i, e.grid().steps(), "cond_expect");
  if (!target.allFinite()) throw DataError("cond_expect: target has non-finite entries");
  return SliceRegression<Scalar>(regression_state(e, i), basis.degree).fit(target);
}

/// Columns k d + j hold residual_k * dW_j / dt.
template <class Scalar>
MatrixX<Scalar> martingale_targets(const MatrixX<Scalar>& residual, const MatrixX<Scalar>& dW,
                                   Scalar dt) {
  const Index m = residual.cols();
  const Index d = dW.cols();
  MatrixX<Scalar> out(residual.rows(), m * d);
  for (Index k = 0; k < m; ++k)
    for (Index j = 0; j < d; ++j)
      out.col(k * d + j) = residual.col(k).cwiseProduct(dW.col(j)) / dt;
  return out;
}

/// Z_{t_i} ~ E[(ynext - E[ynext | F_{t_i}]) dW_i^T | F_{t_i}] / dt, flattened
/// to M x (m d). Subtracting the fitted continuation leaves the same
/// conditional expectation but removes the part of ynext that is already
/// F_{t_i}-measurable from the regression noise.
template <class Scalar>
MatrixX<Scalar> extract_z(const MatrixX<Scalar>& ynext, const PathEnsemble<Scalar>& e, int i,
                          const BasisSpec& basis) {
  detail::check_node(e, i, e.grid().steps() - 1, "extract_z");
  if (!ynext.allFinite()) throw DataError("extract_z: target has non-finite entries");
  const SliceRegression<Scalar> reg(regression_state(e, i), basis.degree);
  const MatrixX<Scalar> residual = ynext - reg.fit(ynext);
  return reg.fit(martingale_targets<Scalar>(residual, e.paths->increment(i),
                                            static_cast<Scalar>(e.grid().dt())));
}

}  // namespace tdbsde
