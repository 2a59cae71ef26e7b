// casv/hmm_train.hpp

// Copyright 2026  cascade-verify authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef CASV_HMM_TRAIN_HPP
#define CASV_HMM_TRAIN_HPP

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "casv/hmm.hpp"

namespace casv {

struct TrainConfig {
  int n_states = 6;
  int n_mixtures = 3;
  Topology topology = Topology::kLeftToRight;
  int max_iters = 30;
  double loglik_rel_tol = 1e-5;
  // Relative floor: each dimension's variance is kept at or above
  // variance_floor times the global per-dimension variance of the training
  // data (with a small absolute fallback when the data are degenerate).
  double variance_floor = 1e-3;
  std::uint64_t init_seed = 0;
  int kmeans_restarts = 3;

  void validate() const {
    if (n_states < 1) throw ConfigInvalid("n_states must be >= 1");
    if (n_mixtures < 1 || std::size_t(n_mixtures) > kMaxMixtures)
      throw ConfigInvalid("n_mixtures out of range");
    if (max_iters < 1) throw ConfigInvalid("max_iters must be >= 1");
    if (!(loglik_rel_tol > 0.0))
      throw ConfigInvalid("loglik_rel_tol must be positive");
    if (!(variance_floor > 0.0))
      throw ConfigInvalid("variance_floor must be positive");
    if (kmeans_restarts < 1)
      throw ConfigInvalid("kmeans_restarts must be >= 1");
  }
};

struct TrainResult {
  Hmm model;
  std::vector<double> loglik_trace;  // total log-likelihood per EM iteration
  std::vector<std::string> warnings;
};

namespace detail {

constexpr double kAbsVarianceFallback = 1e-8;
constexpr double kMinMixtureOccupancy = 1e-8;
constexpr double kMinMixtureWeight = 1e-6;

// Lloyd k-means with deterministic seeding and lowest-index tie breaking.
// Empty clusters are reseeded to the point farthest from its own centroid.
struct KmeansResult {
  Matrix centroids;            // K x D
  std::vector<int> assignment; // per point
  double inertia = 0.0;
};

inline KmeansResult kmeans_once(const std::vector<const double *> &pts,
                                std::size_t dim, int K, std::mt19937_64 &rng) {
  KmeansResult r;
  r.centroids = Matrix(K, dim);
  std::size_t n = pts.size();
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  for (int k = 0; k < K; ++k) {
    const double *p = pts[pick(rng)];
    for (std::size_t d = 0; d < dim; ++d) r.centroids.at(k, d) = p[d];
  }
  r.assignment.assign(n, 0);

  auto dist2 = [&](const double *p, int k) {
    double s = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      double diff = p[d] - r.centroids.at(k, d);
      s += diff * diff;
    }
    return s;
  };

  for (int iter = 0; iter < 20; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double bd = dist2(pts[i], 0);
      for (int k = 1; k < K; ++k) {
        double d = dist2(pts[i], k);
        if (d < bd) {  // strict: ties keep the lowest index
          bd = d;
          best = k;
        }
      }
      if (best != r.assignment[i]) {
        r.assignment[i] = best;
        changed = true;
      }
    }
    std::vector<std::size_t> count(K, 0);
    Matrix sums(K, dim);
    for (std::size_t i = 0; i < n; ++i) {
      count[r.assignment[i]]++;
      for (std::size_t d = 0; d < dim; ++d)
        sums.at(r.assignment[i], d) += pts[i][d];
    }
    for (int k = 0; k < K; ++k) {
      if (count[k] == 0) {
        // Reseed to the globally worst-fit point.
        std::size_t far_i = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          double d = dist2(pts[i], r.assignment[i]);
          if (d > far_d) {
            far_d = d;
            far_i = i;
          }
        }
        for (std::size_t d = 0; d < dim; ++d)
          r.centroids.at(k, d) = pts[far_i][d];
        r.assignment[far_i] = k;
        changed = true;
      } else {
        for (std::size_t d = 0; d < dim; ++d)
          r.centroids.at(k, d) = sums.at(k, d) / double(count[k]);
      }
    }
    if (!changed && iter > 0) break;
  }
  r.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) r.inertia += dist2(pts[i], r.assignment[i]);
  return r;
}

inline KmeansResult kmeans(const std::vector<const double *> &pts,
                           std::size_t dim, int K, int restarts,
                           std::uint64_t seed) {
  KmeansResult best;
  for (int r = 0; r < restarts; ++r) {
    std::mt19937_64 rng(splitmix64(seed + std::uint64_t(r)));
    KmeansResult cand = kmeans_once(pts, dim, K, rng);
    if (r == 0 || cand.inertia < best.inertia) best = std::move(cand);
  }
  return best;
}

// Flat-start: split every sequence into n_states contiguous chunks, pool the
// frames per state, then fit the state GMM by k-means statistics.
inline Hmm initialize_model(const std::vector<const FeatureSequence *> &data,
                            const TrainConfig &cfg,
                            const std::vector<double> &var_floor,
                            const std::string &label) {
  std::size_t dim = data[0]->dim();
  Hmm m;
  m.label = label;
  m.n_states = cfg.n_states;
  m.feature_dim = dim;
  m.topology = cfg.topology;

  m.log_pi.assign(cfg.n_states, kLogZero);
  m.log_A = Matrix(cfg.n_states, cfg.n_states, kLogZero);
  if (cfg.topology == Topology::kLeftToRight) {
    m.log_pi[0] = 0.0;
    for (int i = 0; i < cfg.n_states; ++i) {
      if (i + 1 < cfg.n_states) {
        m.log_A.at(i, i) = std::log(0.7);
        m.log_A.at(i, i + 1) = std::log(0.3);
      } else {
        m.log_A.at(i, i) = 0.0;
      }
    }
  } else {
    double lp = -std::log(double(cfg.n_states));
    for (int i = 0; i < cfg.n_states; ++i) {
      m.log_pi[i] = lp;
      for (int j = 0; j < cfg.n_states; ++j) m.log_A.at(i, j) = lp;
    }
  }

  std::vector<std::vector<const double *>> pools(cfg.n_states);
  for (const auto *seq : data) {
    std::size_t T = seq->num_frames();
    for (std::size_t t = 0; t < T; ++t) {
      int s = int(t * std::size_t(cfg.n_states) / T);
      pools[s].push_back(seq->vectors.row(t));
    }
  }

  for (int s = 0; s < cfg.n_states; ++s) {
    auto &pool = pools[s];
    GmmState e;
    int M = cfg.n_mixtures;
    e.log_weights.assign(M, 0.0);
    e.means = Matrix(M, dim);
    e.vars = Matrix(M, dim);
    if (pool.empty()) {
      // A state can end up without frames only for very short sequences;
      // borrow the global pool so the model stays proper.
      for (const auto *seq : data)
        for (std::size_t t = 0; t < seq->num_frames(); ++t)
          pool.push_back(seq->vectors.row(t));
    }
    KmeansResult km =
        kmeans(pool, dim, M, cfg.kmeans_restarts,
               derive_seed(cfg.init_seed, label + "/state" + std::to_string(s)));
    std::vector<std::size_t> count(M, 0);
    Matrix sq(M, dim);
    for (std::size_t i = 0; i < pool.size(); ++i) {
      int k = km.assignment[i];
      count[k]++;
      for (std::size_t d = 0; d < dim; ++d) {
        double diff = pool[i][d] - km.centroids.at(k, d);
        sq.at(k, d) += diff * diff;
      }
    }
    for (int k = 0; k < M; ++k) {
      double w = count[k] > 0 ? double(count[k]) / double(pool.size())
                              : kMinMixtureWeight;
      e.log_weights[k] = std::log(std::max(w, kMinMixtureWeight));
      for (std::size_t d = 0; d < dim; ++d) {
        e.means.at(k, d) = km.centroids.at(k, d);
        double v = count[k] > 0 ? sq.at(k, d) / double(count[k]) : 0.0;
        e.vars.at(k, d) = std::max(v, var_floor[d]);
      }
    }
    // Renormalize weights after the minimum-weight clamp.
    double lse = log_sum_exp(e.log_weights);
    for (double &lw : e.log_weights) lw -= lse;
    m.emissions.push_back(std::move(e));
  }
  m.precompute();
  return m;
}

struct EstepAccumulators {
  std::vector<double> pi;          // N
  Matrix trans;                    // N x N
  Matrix mix_occ;                  // N x M
  std::vector<Matrix> mean_acc;    // per state: M x D
  std::vector<Matrix> sq_acc;      // per state: M x D
  double total_loglik = 0.0;

  EstepAccumulators(int N, int M, std::size_t D)
      : pi(N, 0.0), trans(N, N), mix_occ(N, M) {
    for (int s = 0; s < N; ++s) {
      mean_acc.emplace_back(M, D);
      sq_acc.emplace_back(M, D);
    }
  }
};

// Forward-backward over one sequence, accumulating expected counts.
inline void accumulate_sequence(const Hmm &m, const FeatureSequence &seq,
                                EstepAccumulators &acc) {
  std::size_t T = seq.num_frames();
  int N = m.n_states;
  int M = int(m.emissions[0].n_mixtures());
  std::size_t D = m.feature_dim;

  // Per-frame per-state mixture component logs and their state totals.
  std::vector<Matrix> logb_mix(T);  // each N x M
  Matrix logb(T, N);
  std::vector<double> mix_terms(M);
  for (std::size_t t = 0; t < T; ++t) {
    logb_mix[t] = Matrix(N, M);
    const double *x = seq.vectors.row(t);
    for (int j = 0; j < N; ++j) {
      const GmmState &e = m.emissions[j];
      for (int k = 0; k < M; ++k) {
        double q = 0.0;
        const double *mu = e.means.row(k);
        const double *var = e.vars.row(k);
        for (std::size_t d = 0; d < D; ++d) {
          double diff = x[d] - mu[d];
          q += diff * diff / var[d];
        }
        mix_terms[k] = e.log_gconst[k] - 0.5 * q;
        logb_mix[t].at(j, k) = mix_terms[k];
      }
      logb.at(t, j) = log_sum_exp(mix_terms);
    }
  }

  Matrix alpha(T, N), beta(T, N);
  std::vector<double> terms(N);
  for (int i = 0; i < N; ++i) alpha.at(0, i) = m.log_pi[i] + logb.at(0, i);
  for (std::size_t t = 1; t < T; ++t)
    for (int j = 0; j < N; ++j) {
      for (int i = 0; i < N; ++i)
        terms[i] = alpha.at(t - 1, i) + m.log_A.at(i, j);
      alpha.at(t, j) = log_sum_exp(terms) + logb.at(t, j);
    }
  for (int i = 0; i < N; ++i) beta.at(T - 1, i) = 0.0;
  for (std::size_t t = T - 1; t > 0; --t)
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < N; ++j)
        terms[j] = m.log_A.at(i, j) + logb.at(t, j) + beta.at(t, j);
      beta.at(t - 1, i) = log_sum_exp(terms);
    }

  std::vector<double> last(N);
  for (int i = 0; i < N; ++i) last[i] = alpha.at(T - 1, i);
  double ll = log_sum_exp(last);
  if (ll == kLogZero)
    throw NumericalError("sequence has zero probability under model '" +
                         m.label + "'");
  acc.total_loglik += ll;

  // State and mixture occupancies.
  for (std::size_t t = 0; t < T; ++t) {
    const double *x = seq.vectors.row(t);
    for (int j = 0; j < N; ++j) {
      double lg = alpha.at(t, j) + beta.at(t, j) - ll;
      if (lg == kLogZero) continue;
      double gamma = std::exp(lg);
      if (t == 0) acc.pi[j] += gamma;
      for (int k = 0; k < M; ++k) {
        double lmk = logb_mix[t].at(j, k) - logb.at(t, j);
        double g_mk = gamma * std::exp(lmk);
        if (g_mk == 0.0) continue;
        acc.mix_occ.at(j, k) += g_mk;
        for (std::size_t d = 0; d < D; ++d) {
          acc.mean_acc[j].at(k, d) += g_mk * x[d];
          acc.sq_acc[j].at(k, d) += g_mk * x[d] * x[d];
        }
      }
    }
  }
  // Transition expectations.
  for (std::size_t t = 0; t + 1 < T; ++t)
    for (int i = 0; i < N; ++i) {
      if (alpha.at(t, i) == kLogZero) continue;
      for (int j = 0; j < N; ++j) {
        double la = m.log_A.at(i, j);
        if (la == kLogZero) continue;
        double lxi = alpha.at(t, i) + la + logb.at(t + 1, j) +
                     beta.at(t + 1, j) - ll;
        acc.trans.at(i, j) += std::exp(lxi);
      }
    }
}

}  // namespace detail

// Baum-Welch (EM) training. Iterates until the relative log-likelihood
// improvement drops below loglik_rel_tol or max_iters is reached. The
// returned trace is non-decreasing: an M-step that lowers the likelihood
// (possible only through the variance-floor projection) is rolled back and
// training stops at the previous parameters.
inline TrainResult train_baum_welch(
    const std::vector<const FeatureSequence *> &data, const TrainConfig &cfg,
    const std::string &label = "") {
  cfg.validate();
  if (data.empty()) throw InsufficientData("no training sequences");
  std::size_t dim = data[0]->dim();
  std::size_t total_frames = 0;
  for (const auto *seq : data) {
    if (seq->dim() != dim)
      throw DimensionMismatch("training sequences disagree on dimension");
    total_frames += seq->num_frames();
  }
  if (total_frames < std::size_t(cfg.n_states) * std::size_t(cfg.n_mixtures))
    throw InsufficientData("only " + std::to_string(total_frames) +
                           " frames for " + std::to_string(cfg.n_states) +
                           "x" + std::to_string(cfg.n_mixtures) +
                           " state-mixture cells");

  TrainResult result;

  // Global per-dimension variance drives the floor.
  std::vector<double> gmean(dim, 0.0), gvar(dim, 0.0);
  for (const auto *seq : data)
    for (std::size_t t = 0; t < seq->num_frames(); ++t)
      for (std::size_t d = 0; d < dim; ++d) gmean[d] += seq->vectors.at(t, d);
  for (std::size_t d = 0; d < dim; ++d) gmean[d] /= double(total_frames);
  for (const auto *seq : data)
    for (std::size_t t = 0; t < seq->num_frames(); ++t)
      for (std::size_t d = 0; d < dim; ++d) {
        double diff = seq->vectors.at(t, d) - gmean[d];
        gvar[d] += diff * diff;
      }
  std::vector<double> var_floor(dim);
  bool degenerate = true;
  for (std::size_t d = 0; d < dim; ++d) {
    gvar[d] /= double(total_frames);
    if (gvar[d] > detail::kAbsVarianceFallback) degenerate = false;
    var_floor[d] =
        std::max(cfg.variance_floor * gvar[d], detail::kAbsVarianceFallback);
  }
  if (degenerate)
    result.warnings.push_back(
        "degenerate input: training data have (near-)zero variance in every "
        "dimension; variances held at the absolute floor");

  Hmm model = detail::initialize_model(data, cfg, var_floor, label);

  // Iteration k evaluates the likelihood of the current parameters and, if
  // not converged, re-estimates them; up to max_iters M-steps run, so the
  // trace has at most max_iters + 1 entries.
  int N = cfg.n_states, M = cfg.n_mixtures;
  for (int iter = 0; iter <= cfg.max_iters; ++iter) {
    detail::EstepAccumulators acc(N, M, dim);
    for (const auto *seq : data) detail::accumulate_sequence(model, *seq, acc);

    // Monotonicity guard: EM guarantees non-decreasing likelihood except
    // where the floor projection binds; a drop rolls back and stops.
    if (!result.loglik_trace.empty() &&
        acc.total_loglik < result.loglik_trace.back() - 1e-8) {
      result.warnings.push_back(
          "log-likelihood decreased after a floored M-step at iteration " +
          std::to_string(iter) + "; rolled back");
      break;
    }
    double prev = result.loglik_trace.empty() ? kLogZero
                                              : result.loglik_trace.back();
    result.loglik_trace.push_back(acc.total_loglik);
    result.model = model;  // parameters that achieved this trace entry

    if (prev != kLogZero) {
      double rel = std::fabs(acc.total_loglik - prev) /
                   std::max(1.0, std::fabs(prev));
      if (rel < cfg.loglik_rel_tol) break;
    }
    if (iter == cfg.max_iters) break;

    // M-step.
    Hmm next = model;
    double pi_total = 0.0;
    for (int i = 0; i < N; ++i) pi_total += acc.pi[i];
    for (int i = 0; i < N; ++i)
      next.log_pi[i] =
          acc.pi[i] > 0.0 ? std::log(acc.pi[i] / pi_total) : kLogZero;
    for (int i = 0; i < N; ++i) {
      double row = 0.0;
      for (int j = 0; j < N; ++j) row += acc.trans.at(i, j);
      for (int j = 0; j < N; ++j) {
        if (model.log_A.at(i, j) == kLogZero || row == 0.0) {
          // Topology zeros stay zero; a state never left keeps its old row.
          if (row == 0.0) next.log_A.at(i, j) = model.log_A.at(i, j);
          continue;
        }
        double a = acc.trans.at(i, j) / row;
        next.log_A.at(i, j) = a > 0.0 ? std::log(a) : kLogZero;
      }
    }
    for (int s = 0; s < N; ++s) {
      GmmState &e = next.emissions[s];
      double occ_total = 0.0;
      for (int k = 0; k < M; ++k) occ_total += acc.mix_occ.at(s, k);
      for (int k = 0; k < M; ++k) {
        double occ = acc.mix_occ.at(s, k);
        if (occ < detail::kMinMixtureOccupancy || occ_total <= 0.0) {
          // Starved mixture: keep previous parameters at minimum weight.
          e.log_weights[k] = std::log(detail::kMinMixtureWeight);
          continue;
        }
        e.log_weights[k] = std::log(occ / occ_total);
        for (std::size_t d = 0; d < dim; ++d) {
          double mean = acc.mean_acc[s].at(k, d) / occ;
          double var = acc.sq_acc[s].at(k, d) / occ - mean * mean;
          e.means.at(k, d) = mean;
          e.vars.at(k, d) = std::max(var, var_floor[d]);
        }
      }
      double lse = log_sum_exp(e.log_weights);
      for (double &lw : e.log_weights) lw -= lse;
    }
    next.precompute();
    model = std::move(next);
  }

  result.model.check_invariants();
  for (std::size_t i = 1; i < result.loglik_trace.size(); ++i)
    if (result.loglik_trace[i] < result.loglik_trace[i - 1] - 1e-8)
      throw NumericalError("EM trace decreased for model '" + label + "'");
  return result;
}

inline TrainResult train_baum_welch(const std::vector<FeatureSequence> &data,
                                    const TrainConfig &cfg,
                                    const std::string &label = "") {
  std::vector<const FeatureSequence *> ptrs;
  ptrs.reserve(data.size());
  for (const auto &s : data) ptrs.push_back(&s);
  return train_baum_welch(ptrs, cfg, label);
}

}  // namespace casv

#endif  // CASV_HMM_TRAIN_HPP
