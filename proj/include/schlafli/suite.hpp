#pragma once

#include "generate.hpp"
#include "identities.hpp"
#include "measure.hpp"

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace schlafli {

/// Quadrature against the Monte Carlo oracle on every face of positive
/// dimension, body included. rel_residual is the largest |difference| in
/// standard errors over `sigmas`, so the report passes below `sigmas`.
inline IdentityReport check_oracle_agreement(const Polytope& P, const QuadratureConfig& cfg, double sigmas = 3.0) {
  std::vector<Term> terms;
  double worst = 0.0;
  for (int c = 0; c < P.dim(); ++c)
    for (const Face& f : P.faces(c)) {
      FaceMeasure q = measure_face(P, f.ref(), cfg);
      MonteCarloEstimate m = mc_oracle(P, f.ref(), cfg, static_cast<std::uint64_t>(c) * 100000 + f.id);
      // The estimator cannot resolve less than one sample's weight, which
      // matters when every sample landed on the same side of the boundary.
      const double w = m.volume / (m.acceptance * static_cast<double>(cfg.mc_samples));
      auto score = [](double exact, double estimate, double se, double floor) {
        return (exact - estimate) / std::max(se, floor);
      };
      Vec z(q.moment.size() + 1);
      z(0) = score(q.volume, m.volume, m.volume_se, w);
      for (Eigen::Index i = 0; i < q.moment.size(); ++i)
        z(i + 1) = score(q.moment(i), m.moment(i), m.moment_se(i), w * std::max(1.0, std::abs(m.moment(i)) / m.volume));
      worst = std::max(worst, z.cwiseAbs().maxCoeff());
      terms.push_back({0, f.ref(), z, 0.0});
    }
  IdentityReport r;
  r.id = IdentityId::OracleAgreement;
  r.scalar = true;
  r.tolerance = 1.0;
  r.residual = Vec::Constant(1, worst);
  r.scale = sigmas;
  r.rel_residual = worst / sigmas;
  r.pass = r.rel_residual < r.tolerance;
  r.note = "largest deviation in standard errors";
  r.terms = std::move(terms);
  return r;
}

/// Identities the batch driver knows, by command-line name.
inline const std::vector<std::string>& suite_identities() {
  static const std::vector<std::string> names = {
      "E0",        "Ep",        "Hp",        "Kp",           "Fp_prime",       "Gp_prime",       "Lp",
      "Qp_prime",  "Mp_prime",  "MinkowskiStatic", "ScalarSchlafli", "ClassicalSchlafli", "ConsistencyEp",
      "ConsistencyLp", "ConsistencyKp", "OracleAgreement"};
  return names;
}

struct PRange {
  bool applies = false;
  bool indexed = true;
  int lo = 0, hi = -1;
};

/// Admissible p for an identity in dimension n+1 = dim; `applies` is false
/// when the identity is not stated for the space.
inline PRange suite_p_range(const std::string& name, int curvature, int dim) {
  const int n = dim - 1;
  const bool curved = curvature != 0;
  auto range = [](int lo, int hi) { return PRange{hi >= lo, true, lo, hi}; };
  if (name == "E0" || name == "ClassicalSchlafli" || name == "OracleAgreement") return {true, false, 0, -1};
  if (name == "Ep" || name == "ScalarSchlafli") return range(1, n - 1);
  if (name == "Hp" || name == "Kp" || name == "ConsistencyKp") return range(2, n - 1);
  if (name == "MinkowskiStatic") return range(0, n);
  if (!curved) return {};
  if (name == "Fp_prime") return range(1, n);
  if (name == "Gp_prime" || name == "Qp_prime" || name == "Mp_prime") return range(0, n - 1);
  if (name == "Lp" || name == "ConsistencyEp" || name == "ConsistencyLp") return range(1, n - 1);
  return {};
}

struct SuiteConfig {
  std::uint64_t seed = 1;
  int curvature = 1;
  int dim = 3;  // n+1
  int vertex_count = 8;
  int instances = 1;
  int deformations = 1;
  std::vector<std::string> identities;  // empty selects every admissible one
  std::vector<int> ps;                  // empty selects every admissible p
  std::optional<double> tolerance;
  QuadratureConfig quad;
  DerivativeEngine fd;
  bool sign_flip = false;
  bool keep_terms = false;
  int threads = 1;

  void validate() const {
    SpaceForm(curvature, dim);
    if (vertex_count < dim + 1) throw InputError("vertex count below the minimum n+2");
    if (instances < 1 || deformations < 1) throw InputError("instance and deformation counts must be positive");
    if (tolerance && !(*tolerance >= 0)) throw InputError("tolerance must be non-negative");
    if (threads < 1) throw InputError("thread count must be positive");
    quad.validate();
    fd.validate();
    for (const std::string& s : identities) {
      if (std::find(suite_identities().begin(), suite_identities().end(), s) == suite_identities().end())
        throw InputError("unknown identity '" + s + "'");
      PRange r = suite_p_range(s, curvature, dim);
      if (!r.applies) throw InputError("identity '" + s + "' is not stated for this space and dimension");
      if (r.indexed && !ps.empty() && std::none_of(ps.begin(), ps.end(), [&](int p) { return p >= r.lo && p <= r.hi; }))
        throw InputError("no requested p is admissible for '" + s + "'");
    }
  }

  std::vector<std::string> selected() const {
    if (!identities.empty()) return identities;
    std::vector<std::string> out;
    for (const std::string& s : suite_identities())
      if (s != "OracleAgreement" && suite_p_range(s, curvature, dim).applies) out.push_back(s);
    return out;
  }

  std::vector<int> p_values(const std::string& name) const {
    PRange r = suite_p_range(name, curvature, dim);
    std::vector<int> out;
    for (int p = r.lo; p <= r.hi; ++p)
      if (ps.empty() || std::find(ps.begin(), ps.end(), p) != ps.end()) out.push_back(p);
    return out;
  }
};

struct SuiteItem {
  std::string key;
  int instance = 0;
  int deformation = 0;
  std::uint64_t instance_seed = 0;
  IdentityReport report;
  std::string error;
};

struct SuiteResult {
  std::vector<SuiteItem> items;

  int failures() const {
    int k = 0;
    for (const SuiteItem& i : items) k += i.report.pass ? 0 : 1;
    return k;
  }
  bool all_pass() const { return !items.empty() && failures() == 0; }
};

inline std::uint64_t instance_seed(const SuiteConfig& c, int instance) { return c.seed + static_cast<std::uint64_t>(instance); }

inline Polytope suite_instance(const SuiteConfig& c, int instance) {
  return random_polytope(SpaceForm(c.curvature, c.dim), c.vertex_count, instance_seed(c, instance));
}

inline DeformationField suite_field(const SuiteConfig& c, const Polytope& P, int instance, int deformation) {
  std::seed_seq seq{static_cast<std::uint32_t>(instance_seed(c, instance)),
                    static_cast<std::uint32_t>(instance_seed(c, instance) >> 32), 0x5eedu,
                    static_cast<std::uint32_t>(deformation)};
  std::mt19937_64 rng(seq);
  return random_field(P, rng);
}

namespace detail {

inline std::string item_key(int instance, int deformation, const std::string& name, std::optional<int> p) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "i%04d/d%03d/%s", instance, deformation, name.c_str());
  std::string k = buf;
  if (p) k += "/p" + std::to_string(*p);
  return k;
}

inline IdentityReport run_one(const VariationalData& d, const std::string& name, int p, const CheckConfig& cfg) {
  if (name == "Ep") return check_Ep(d, p, cfg);
  if (name == "Hp") return check_Hp(d, p, cfg);
  if (name == "Kp") return check_Kp(d, p, cfg);
  if (name == "Fp_prime") return check_Fp_prime(d, p, cfg);
  if (name == "Gp_prime") return check_Gp_prime(d, p, cfg);
  if (name == "Lp") return check_Lp(d, p, cfg);
  if (name == "Qp_prime") return check_Qp_prime(d, p, cfg);
  if (name == "Mp_prime") return check_Mp_prime(d, p, cfg);
  if (name == "ScalarSchlafli") return check_scalar_schlafli(d, p, cfg);
  if (name == "ConsistencyEp") return check_Ep_consistency(d, p, cfg);
  if (name == "ConsistencyLp") return check_Lp_consistency(d, p, cfg);
  if (name == "ConsistencyKp") return check_Kp_consistency(d, p, cfg);
  throw InputError("unknown identity '" + name + "'");
}

/// All items of one (instance, deformation) pair.
inline std::vector<SuiteItem> run_task(const SuiteConfig& c, const Polytope* fixed, const DeformationField* field,
                                       int instance, int deformation) {
  std::vector<SuiteItem> out;
  CheckConfig cfg;
  cfg.quad = c.quad;
  cfg.fd = c.fd;
  cfg.tolerance = c.tolerance;
  cfg.sign_flip = c.sign_flip;
  cfg.keep_terms = c.keep_terms;
  auto push = [&](const std::string& name, std::optional<int> p, IdentityReport r, std::string err = {}) {
    out.push_back({item_key(instance, deformation, name, p), instance, deformation, instance_seed(c, instance),
                   std::move(r), std::move(err)});
  };
  auto failed = [&](IdentityId id, std::optional<int> p, const std::string& what) {
    IdentityReport r;
    r.id = id;
    r.p = p;
    r.rel_residual = std::numeric_limits<double>::infinity();
    r.tolerance = c.tolerance.value_or(default_tolerance(c.dim));
    r.note = what;
    return r;
  };
  const std::vector<std::string> names = c.selected();
  Polytope P = fixed ? *fixed : suite_instance(c, instance);
  const bool needs_body = std::find(names.begin(), names.end(), "ClassicalSchlafli") != names.end() ||
                          (P.curvature() != 0 && std::find(names.begin(), names.end(), "MinkowskiStatic") != names.end());
  VariationalData d = prepare(P, field ? *field : suite_field(c, P, instance, deformation), cfg, needs_body);
  for (const std::string& name : names) {
    try {
      if (name == "E0") {
        push(name, std::nullopt, check_E0(d, cfg));
      } else if (name == "ClassicalSchlafli") {
        push(name, std::nullopt, check_classical_schlafli(d, cfg));
      } else if (name == "OracleAgreement") {
        if (deformation == 0) {
          IdentityReport r = check_oracle_agreement(P, c.quad);
          if (c.tolerance) {
            r.tolerance = *c.tolerance;
            r.pass = r.rel_residual < r.tolerance;
          }
          if (!c.keep_terms) r.terms.clear();
          push(name, std::nullopt, std::move(r));
        }
      } else if (name == "MinkowskiStatic") {
        if (deformation != 0) continue;
        auto [first, rest] = check_minkowski_static(P, d.base, cfg);
        const std::vector<int> ps = c.p_values(name);
        if (std::find(ps.begin(), ps.end(), 0) != ps.end()) push(name, 0, first);
        for (IdentityReport& r : rest)
          if (std::find(ps.begin(), ps.end(), *r.p) != ps.end()) push(name, *r.p, std::move(r));
      } else {
        for (int p : c.p_values(name)) {
          try {
            push(name, p, run_one(d, name, p, cfg));
          } catch (const Error& e) {
            push(name, p, failed(identity_from_name(name).value_or(IdentityId::E0), p, e.what()), e.what());
          }
        }
      }
    } catch (const Error& e) {
      push(name, std::nullopt, failed(identity_from_name(name).value_or(IdentityId::MinkowskiStatic1), std::nullopt, e.what()), e.what());
    }
  }
  return out;
}

}  // namespace detail

/// Runs every (instance, deformation) task on a worker pool and returns the
/// items sorted by key, independent of completion order. A fixed polytope
/// replaces the generated instances, and a fixed field the random ones.
inline SuiteResult run_suite(const SuiteConfig& c, const Polytope* fixed = nullptr,
                             const DeformationField* field = nullptr) {
  c.validate();
  if (fixed && (fixed->curvature() != c.curvature || fixed->dim() != c.dim))
    throw InputError("polytope does not match the configured space");
  if (field && !fixed) throw InputError("a fixed deformation needs a fixed polytope");
  if (field) validate_field(*fixed, *field);
  if (fixed && !field && !fixed->simplicial())
    throw InputError("random deformations bend non-simplicial facets; supply a deformation field");
  const int tasks = c.instances * c.deformations;
  std::vector<std::vector<SuiteItem>> slots(static_cast<size_t>(tasks));
  std::vector<std::string> errors(static_cast<size_t>(tasks));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int t = next++; t < tasks; t = next++) {
      try {
        slots[static_cast<size_t>(t)] = detail::run_task(c, fixed, field, t / c.deformations, t % c.deformations);
      } catch (const std::exception& e) {
        errors[static_cast<size_t>(t)] = e.what();
      }
    }
  };
  const int nthreads = std::min(c.threads, tasks);
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  for (const std::string& e : errors)
    if (!e.empty()) throw GeometryError(e);
  SuiteResult out;
  for (auto& s : slots)
    for (SuiteItem& i : s) out.items.push_back(std::move(i));
  std::sort(out.items.begin(), out.items.end(), [](const SuiteItem& a, const SuiteItem& b) { return a.key < b.key; });
  return out;
}

}  // namespace schlafli
