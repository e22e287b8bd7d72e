#pragma once

#include "linalg.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace schlafli {

struct QuadratureConfig {
  int base_rule_order = 5;  // Grundmann-Moller index s, exact to degree 2s+1
  int max_subdivision_depth = 16;
  double target_rel_tol = 1e-9;
  long mc_samples = 200000;
  std::uint64_t seed = 1;
  int max_pieces = 20000;

  void validate() const {
    if (!(target_rel_tol > 0)) throw InputError("target_rel_tol must be positive");
    if (base_rule_order < 1 || max_subdivision_depth < 1) throw InputError("quadrature orders must be at least 1");
    if (mc_samples < 1) throw InputError("mc_samples must be positive");
  }
};

/// Quadrature rule on the standard k-simplex in barycentric coordinates.
/// Weights sum to one, so the rule computes averages.
struct SimplexRule {
  int dim = 0;
  int order = 0;
  Mat bary;  // (dim+1) x npts
  Vec weights;
};

namespace detail {

inline void compositions(int total, int parts, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (parts == 1) {
    cur.push_back(total);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int a = 0; a <= total; ++a) {
    cur.push_back(a);
    compositions(total - a, parts - 1, cur, out);
    cur.pop_back();
  }
}

inline SimplexRule make_grundmann_moller(int n, int s) {
  SimplexRule rule;
  rule.dim = n;
  rule.order = s;
  const int d = 2 * s + 1;
  std::vector<Vec> pts;
  std::vector<double> ws;
  for (int i = 0; i <= s; ++i) {
    const double denom = d + n - 2 * i;
    double w = std::pow(2.0, -2.0 * s) * std::pow(denom, d) / (factorial(i) * factorial(d + n - i));
    if (i % 2 == 1) w = -w;
    std::vector<std::vector<int>> betas;
    std::vector<int> cur;
    compositions(s - i, n + 1, cur, betas);
    for (const auto& b : betas) {
      Vec p(n + 1);
      for (int j = 0; j <= n; ++j) p(j) = (2.0 * b[j] + 1.0) / denom;
      pts.push_back(p);
      ws.push_back(w);
    }
  }
  rule.bary.resize(n + 1, static_cast<Eigen::Index>(pts.size()));
  rule.weights.resize(static_cast<Eigen::Index>(pts.size()));
  double total = 0.0;
  for (size_t q = 0; q < pts.size(); ++q) {
    rule.bary.col(static_cast<Eigen::Index>(q)) = pts[q];
    rule.weights(static_cast<Eigen::Index>(q)) = ws[q];
    total += ws[q];
  }
  rule.weights /= total;
  return rule;
}

}  // namespace detail

/// Grundmann-Moller rule of index s on the n-simplex (degree 2s+1); cached.
inline const SimplexRule& grundmann_moller(int n, int s) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, SimplexRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(n, s);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, detail::make_grundmann_moller(n, s)).first;
  return it->second;
}

/// Volume, first and (optionally) second moment of a region.
struct RadialIntegral {
  double volume = 0.0;
  Vec moment;
  Mat second;
  double error = 0.0;

  void add(const RadialIntegral& o) {
    volume += o.volume;
    if (moment.size() == 0) moment = Vec::Zero(o.moment.size());
    moment += o.moment;
    if (o.second.size()) {
      if (second.size() == 0) second = Mat::Zero(o.second.rows(), o.second.cols());
      second += o.second;
    }
    error += o.error;
  }
};

/// Refinement of a simplex into sub-simplices, each given by the coefficients
/// of its vertices (columns) on the vertices of the original simplex.
using SimplexPlan = std::vector<Mat>;

/// Refinement plans keyed by a structural id. Reusing a plan across nearby
/// configurations keeps the quadrature a smooth function of the vertices.
class QuadCache {
 public:
  SimplexPlan* slot(const std::string& key) { return &plans_[key]; }
  size_t size() const { return plans_.size(); }
  void clear() { plans_.clear(); }

 private:
  std::unordered_map<std::string, SimplexPlan> plans_;
};

namespace detail {

inline RadialIntegral apply_rule(const Vec& S, const Mat& Y, const SimplexRule& rule, bool second) {
  const Eigen::Index D = Y.rows();
  const int k = static_cast<int>(Y.cols()) - 1;
  RadialIntegral r;
  r.moment = Vec::Zero(D);
  if (second) r.second = Mat::Zero(D, D);
  const double jac = std::sqrt(std::abs(form_gram(S, Y).determinant())) / factorial(k);
  for (Eigen::Index q = 0; q < rule.bary.cols(); ++q) {
    Vec y = Y * rule.bary.col(q);
    const double r2 = std::abs(form_dot(S, y, y));
    const double rho = std::sqrt(r2);
    const double f = rule.weights(q) * std::pow(rho, -(k + 1));
    r.volume += f;
    r.moment += (f / rho) * y;
    if (second) r.second += (f / r2) * (y * y.transpose());
  }
  r.volume *= jac;
  r.moment *= jac;
  if (second) r.second *= jac;
  return r;
}

inline double diff_norm(const RadialIntegral& a, const RadialIntegral& b) {
  double e = std::abs(a.volume - b.volume) + (a.moment - b.moment).cwiseAbs().maxCoeff();
  if (a.second.size()) e += (a.second - b.second).cwiseAbs().maxCoeff();
  return e;
}


}  // namespace detail

/// Exact volume and moments of a flat Euclidean simplex with vertex columns U.
inline RadialIntegral integrate_flat(const Mat& U, bool second) {
  const Eigen::Index D = U.rows();
  const int k = static_cast<int>(U.cols()) - 1;
  RadialIntegral r;
  if (k == 0) {
    r.volume = 1.0;
    r.moment = U.col(0);
    if (second) r.second = U.col(0) * U.col(0).transpose();
    return r;
  }
  Mat E = U.rightCols(k).colwise() - U.col(0);
  r.volume = std::sqrt(std::max(0.0, (E.transpose() * E).determinant())) / factorial(k);
  Vec sum = U.rowwise().sum();
  r.moment = r.volume * sum / (k + 1);
  if (second) {
    Mat acc = sum * sum.transpose();
    for (int i = 0; i <= k; ++i) acc += U.col(i) * U.col(i).transpose();
    r.second = r.volume / ((k + 1.0) * (k + 2.0)) * acc;
  }
  (void)D;
  return r;
}

/// Integral over the radial projection of the flat simplex with vertex
/// columns U onto the unit quadric of the diagonal form S:
///   d sigma = sqrt|det Gram_S(U)| rho(y)^{-(k+1)} d lambda,  rho = sqrt|<y,y>|.
/// When `plan` is non-null and non-empty the stored refinement is used as is;
/// when it is non-null and empty the adaptive refinement is stored into it.
inline RadialIntegral integrate_radial(const Vec& S, const Mat& U, const QuadratureConfig& cfg,
                                       SimplexPlan* plan = nullptr, bool second = false) {
  const Eigen::Index D = U.rows();
  const int k = static_cast<int>(U.cols()) - 1;
  if (k == 0) {
    RadialIntegral r;
    const double rho = std::sqrt(std::abs(form_dot(S, U.col(0), U.col(0))));
    Vec x = U.col(0) / rho;
    r.volume = 1.0;
    r.moment = x;
    if (second) r.second = x * x.transpose();
    return r;
  }
  const SimplexRule& lo = grundmann_moller(k, cfg.base_rule_order);
  const SimplexRule& hi = grundmann_moller(k, cfg.base_rule_order + 1);

  if (plan && !plan->empty()) {
    RadialIntegral total;
    total.moment = Vec::Zero(D);
    if (second) total.second = Mat::Zero(D, D);
    for (const Mat& B : *plan) total.add(detail::apply_rule(S, U * B, hi, second));
    return total;
  }

  struct Piece {
    Mat B;
    RadialIntegral value;
    double err;
    int depth;
  };
  auto evaluate = [&](Mat B, int depth) {
    Mat Y = U * B;
    RadialIntegral a = detail::apply_rule(S, Y, lo, second);
    RadialIntegral b = detail::apply_rule(S, Y, hi, second);
    const double e = detail::diff_norm(a, b);
    b.error = e;
    return Piece{std::move(B), std::move(b), e, depth};
  };
  auto worse = [](const Piece& a, const Piece& b) { return a.err < b.err; };

  std::vector<Piece> heap;
  heap.push_back(evaluate(Mat::Identity(k + 1, k + 1), 0));
  double err_sum = heap.front().err;
  double volume = heap.front().value.volume;
  Vec moment = heap.front().value.moment;
  while (true) {
    const double size = std::abs(volume) + moment.cwiseAbs().maxCoeff();
    if (err_sum <= cfg.target_rel_tol * size + 1e-300) {
      RadialIntegral total;
      total.moment = Vec::Zero(D);
      if (second) total.second = Mat::Zero(D, D);
      for (const auto& p : heap) total.add(p.value);
      if (plan) {
        plan->clear();
        for (const auto& p : heap) plan->push_back(p.B);
      }
      return total;
    }
    std::pop_heap(heap.begin(), heap.end(), worse);
    Piece w = std::move(heap.back());
    heap.pop_back();
    if (w.depth >= cfg.max_subdivision_depth || static_cast<int>(heap.size()) + 1 >= cfg.max_pieces)
      throw NonConvergence("simplex quadrature did not converge within the subdivision limits");
    Mat Y = U * w.B;
    int ia = 0, ib = 1;
    double best = -1.0;
    for (int i = 0; i <= k; ++i)
      for (int j = i + 1; j <= k; ++j) {
        const double len = (Y.col(i) - Y.col(j)).norm();
        if (len > best) {
          best = len;
          ia = i;
          ib = j;
        }
      }
    // Bisect the cone: the new vertex is put back on the quadric so that the
    // pieces shrink uniformly in angle rather than in the flat chart.
    Vec mid = 0.5 * (w.B.col(ia) + w.B.col(ib));
    Vec ym = U * mid;
    mid /= std::sqrt(std::abs(form_dot(S, ym, ym)));
    Mat B1 = w.B, B2 = w.B;
    B1.col(ia) = mid;
    B2.col(ib) = mid;
    err_sum -= w.err;
    volume -= w.value.volume;
    moment -= w.value.moment;
    Piece c1 = evaluate(std::move(B1), w.depth + 1);
    Piece c2 = evaluate(std::move(B2), w.depth + 1);
    for (Piece* c : {&c1, &c2}) {
      err_sum += c->err;
      volume += c->value.volume;
      moment += c->value.moment;
      heap.push_back(std::move(*c));
      std::push_heap(heap.begin(), heap.end(), worse);
    }
  }
}

}  // namespace schlafli
