#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "milr/autodiff.hpp"
#include "milr/rng.hpp"

namespace milr {

struct PowerConfig {
  double tol = 1e-4;
  int max_iter = 200;
};

template <class Scalar>
struct SharpnessEstimate {
  Scalar lambda1 = 0;  // dominant by magnitude, signed
  int iterations = 0;
  Scalar residual = 0;  // ||Hv - lambda v|| / |lambda|
  bool converged = false;
};

template <class Scalar>
Vec<Scalar> gaussian_vector(Eigen::Index n, Rng& rng) {
  Vec<Scalar> v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = Scalar(rng.normal());
  return v;
}

// Power iteration with Rayleigh-quotient sign recovery. The start vector is
// redrawn if the quotient and the residual both stall while the residual is above tol.
// `warm`, if given and of matching size, seeds the iteration and receives the final iterate.
template <class Scalar, class Op>
SharpnessEstimate<Scalar> top_eigenvalue(const Op& op, Eigen::Index dim, Rng& rng, const PowerConfig& cfg = {},
                                         Vec<Scalar>* warm = nullptr) {
  SharpnessEstimate<Scalar> est;
  Vec<Scalar> v;
  if (warm && warm->size() == dim && warm->norm() > Scalar(0))
    v = *warm;
  else
    v = gaussian_vector<Scalar>(dim, rng);
  v.normalize();
  struct Keep {
    Vec<Scalar>* dst;
    const Vec<Scalar>& src;
    ~Keep() {
      if (dst) *dst = src;
    }
  } keep{warm, v};
  Scalar prev = std::numeric_limits<Scalar>::quiet_NaN(), prev_res = prev;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    Vec<Scalar> w = op(v);
    est.iterations = it;
    const Scalar wn = w.norm();
    if (!std::isfinite(static_cast<double>(wn))) throw NumericError("top_eigenvalue: non-finite operator output");
    if (wn == Scalar(0)) {
      est.lambda1 = 0;
      est.residual = 0;
      est.converged = true;
      return est;
    }
    const Scalar lam = v.dot(w);
    est.lambda1 = lam;
    est.residual = lam == Scalar(0) ? std::numeric_limits<Scalar>::infinity() : (w - lam * v).norm() / std::abs(lam);
    if (est.residual < Scalar(cfg.tol)) {
      est.converged = true;
      return est;
    }
    // Stalled: the quotient no longer moves and neither does the residual (a +/- pair of
    // equal magnitude, or an unlucky start). A converging iterate keeps shrinking the residual.
    if (std::abs(lam - prev) < Scalar(1e-12) * std::abs(lam) && est.residual > Scalar(0.999) * prev_res) {
      v = gaussian_vector<Scalar>(dim, rng);
      v.normalize();
      prev = prev_res = std::numeric_limits<Scalar>::quiet_NaN();
      continue;
    }
    prev = lam;
    prev_res = est.residual;
    v = w / wn;
  }
  return est;
}

template <class Scalar>
SharpnessEstimate<Scalar> sharpness(const Mlp<Scalar>& net, const Batch<Scalar>& batch, LossKind kind, Rng& rng,
                                    const PowerConfig& cfg = {}, Vec<Scalar>* warm = nullptr) {
  HessianOperator<Scalar> op(net, batch, kind);
  return top_eigenvalue<Scalar>(op, op.dim(), rng, cfg, warm);
}

struct MeanStdErr {
  double mean = 0;
  double std_err = 0;
  std::size_t count = 0;
};

MeanStdErr mean_std_err(const std::vector<double>& xs);

// Hutchinson estimate of ||H||_F^2 = E ||H v||^2, v standard Gaussian.
template <class Scalar, class Op>
MeanStdErr hutchinson_frob_sq(const Op& op, Eigen::Index dim, int probes, Rng& rng) {
  std::vector<double> vals;
  vals.reserve(probes);
  for (int p = 0; p < probes; ++p) vals.push_back(static_cast<double>(op(gaussian_vector<Scalar>(dim, rng)).squaredNorm()));
  return mean_std_err(vals);
}

// Exact ||H||_F^2 as the sum of squared columns H e_j.
template <class Scalar, class Op>
double exact_frob_sq(const Op& op, Eigen::Index dim) {
  double s = 0;
  Vec<Scalar> e = Vec<Scalar>::Zero(dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    e[j] = Scalar(1);
    s += static_cast<double>(op(e).squaredNorm());
    e[j] = Scalar(0);
  }
  return s;
}

// ---- theory-mode Monte Carlo (double precision) ----

// One draw of the theory setting: scalar-output net, single input with ||x||^2 = n0, y ~ N(0,1).
struct TheorySample {
  MlpD net;
  BatchD batch;
};

TheorySample make_theory_sample(const ArchSpec& arch, InitScheme scheme, Rng& rng);

// Learning-rate weights eta_hat_mu = eta^(l) / sqrt(n_{l-1}) expanded to parameter length.
Vec<double> eta_hat_weights(const ArchSpec& arch, const std::vector<double>& eta_per_layer);

enum class HessianKind { Raw, Effective };

struct FrobeniusConfig {
  HessianKind kind = HessianKind::Raw;
  std::vector<double> eta_per_layer;  // used when kind == Effective, one per weight layer
  int seeds = 200;
  int probes = 32;
  std::size_t exact_cap = 2000;  // dense assembly at or below this P
};

struct FrobeniusSeedRow {
  std::uint64_t seed;
  double estimate;
  int probes;  // 0 when assembled exactly
  bool diverged;
};

struct FrobeniusStats {
  double mean = 0;
  double std_err = 0;
  std::size_t seeds = 0;
  int probes_per_seed = 0;
  std::size_t discarded = 0;
  std::vector<FrobeniusSeedRow> rows;
};

// Per-seed ||H||_F^2 (or ||H_eff||_F^2) for one sample.
double frobenius_sq_sample(const TheorySample& s, const FrobeniusConfig& cfg, Rng& rng, int* probes_used = nullptr);

FrobeniusStats frobenius_sq_mc(const ArchSpec& arch, InitScheme scheme, const FrobeniusConfig& cfg, Rng& rng);

}  // namespace milr
