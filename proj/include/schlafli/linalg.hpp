#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace schlafli {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input or a violated precondition.
class InputError : public Error {
 public:
  using Error::Error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

class CombinatoricsChanged : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

class Infeasible : public Error {
 public:
  using Error::Error;
};

inline double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

/// Volume of the unit sphere S^k in R^{k+1}.
inline double sphere_volume(int k) {
  if (k < 0) throw InputError("sphere_volume: negative dimension");
  const double h = 0.5 * (k + 1);
  return 2.0 * std::pow(std::numbers::pi, h) / std::tgamma(h);
}

inline double clamp_unit(double c) { return std::clamp(c, -1.0, 1.0); }

/// Columns spanning the kernel of A, relative threshold on singular values.
inline Mat null_space(const Mat& A, double rel_tol = 1e-10) {
  const Eigen::Index cols = A.cols();
  if (A.rows() == 0) return Mat::Identity(cols, cols);
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeFullV);
  const Vec& s = svd.singularValues();
  const double smax = s.size() ? s(0) : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rel_tol * std::max(smax, 1e-300)) ++rank;
  if (smax == 0.0) rank = 0;
  return svd.matrixV().rightCols(cols - rank);
}

inline int numerical_rank(const Mat& A, double rel_tol = 1e-10) {
  if (A.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(A);
  const Vec& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rel_tol * s(0)) ++r;
  return r;
}

/// Minimum-norm least-squares solution with singular values below
/// rel_tol * sigma_max treated as zero.
inline Vec min_norm_solve(const Mat& A, const Vec& b, double rel_tol = 1e-10, int* rank_out = nullptr) {
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& s = svd.singularValues();
  const double smax = s.size() ? s(0) : 0.0;
  Vec coeff = svd.matrixU().transpose() * b;
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (smax > 0.0 && s(i) > rel_tol * smax) {
      coeff(i) /= s(i);
      ++rank;
    } else {
      coeff(i) = 0.0;
    }
  }
  if (rank_out) *rank_out = rank;
  return svd.matrixV() * coeff;
}

inline Vec form_apply(const Vec& signs, const Vec& v) { return signs.cwiseProduct(v); }

inline double form_dot(const Vec& signs, const Vec& u, const Vec& v) {
  return (signs.array() * u.array() * v.array()).sum();
}

/// Gram matrix B^T S B of the columns of B under the diagonal form S.
inline Mat form_gram(const Vec& signs, const Mat& B) { return B.transpose() * signs.asDiagonal() * B; }

/// Orthogonal projection of w onto span(B) for the diagonal form S.
/// Throws GeometryError when the form restricted to span(B) is degenerate.
inline Vec form_project(const Vec& signs, const Mat& B, const Vec& w) {
  if (B.cols() == 0) return Vec::Zero(w.size());
  Mat G = form_gram(signs, B);
  Vec d(G.rows());
  for (Eigen::Index i = 0; i < G.rows(); ++i) {
    const double n = B.col(i).norm();
    if (n == 0.0) throw GeometryError("projection basis contains a zero vector");
    d(i) = 1.0 / n;
  }
  Mat Gn = d.asDiagonal() * G * d.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Mat> es(Gn);
  const double small = es.eigenvalues().cwiseAbs().minCoeff();
  if (small < 1e-11) throw GeometryError("degenerate Gram matrix: the form is singular on the subspace");
  Vec rhs = B.transpose() * signs.asDiagonal() * w;
  Vec c = G.fullPivLu().solve(rhs);
  return B * c;
}

/// Orthonormal (for the form) basis of span(B); the form on span(B) must be
/// nondegenerate. Timelike directions, if any, come last.
inline Mat form_orthonormal_basis(const Vec& signs, const Mat& B, Vec* out_signs = nullptr) {
  Mat G = form_gram(signs, B);
  Eigen::SelfAdjointEigenSolver<Mat> es(G);
  std::vector<int> pos, neg;
  const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    const double ev = es.eigenvalues()(i);
    if (std::abs(ev) <= 1e-12 * scale) throw GeometryError("degenerate subspace");
    (ev > 0 ? pos : neg).push_back(i);
  }
  Mat Q(B.rows(), B.cols());
  Vec s(B.cols());
  int c = 0;
  for (int i : pos) {
    Q.col(c) = B * es.eigenvectors().col(i) / std::sqrt(es.eigenvalues()(i));
    s(c++) = 1.0;
  }
  for (int i : neg) {
    Q.col(c) = B * es.eigenvectors().col(i) / std::sqrt(-es.eigenvalues()(i));
    s(c++) = -1.0;
  }
  if (out_signs) *out_signs = s;
  return Q;
}

}  // namespace schlafli
