// tests/oracles.hpp

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

// Independent reference implementations the test suites check the library
// against. Everything here is deliberately brute force and shares no code
// with the implementation paths it verifies.

#ifndef CASV_TESTS_ORACLES_HPP
#define CASV_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include "casv/hmm.hpp"

namespace oracles {

// log N(x; mu, diag(var)) written out long-hand.
inline double ref_gaussian_logpdf(const std::vector<double> &x,
                                  const std::vector<double> &mu,
                                  const std::vector<double> &var) {
  double lp = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    double diff = x[d] - mu[d];
    lp += -0.5 * std::log(2.0 * M_PI * var[d]) - 0.5 * diff * diff / var[d];
  }
  return lp;
}

inline double ref_gmm_logpdf(const casv::GmmState &g,
                             const std::vector<double> &x) {
  double linear = 0.0;
  // Mixtures are tiny in oracle models; a max-shifted sum is still used to
  // stay finite for far-off points.
  double mx = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  for (std::size_t k = 0; k < g.n_mixtures(); ++k) {
    std::vector<double> mu(g.means.row(k), g.means.row(k) + g.means.cols);
    std::vector<double> var(g.vars.row(k), g.vars.row(k) + g.vars.cols);
    double t = g.log_weights[k] + ref_gaussian_logpdf(x, mu, var);
    terms.push_back(t);
    mx = std::max(mx, t);
  }
  if (!std::isfinite(mx)) return mx;
  for (double t : terms) linear += std::exp(t - mx);
  return mx + std::log(linear);
}

// Total log P(O | model) by explicit enumeration of all n_states^T paths.
inline double brute_force_log_likelihood(const casv::Hmm &m,
                                         const casv::FeatureSequence &seq) {
  std::size_t T = seq.num_frames();
  int N = m.n_states;
  std::size_t n_paths = 1;
  for (std::size_t t = 0; t < T; ++t) n_paths *= std::size_t(N);

  double mx = -std::numeric_limits<double>::infinity();
  std::vector<double> path_logs;
  path_logs.reserve(n_paths);
  std::vector<int> path(T);
  for (std::size_t code = 0; code < n_paths; ++code) {
    std::size_t c = code;
    for (std::size_t t = 0; t < T; ++t) {
      path[t] = int(c % N);
      c /= N;
    }
    double lp = m.log_pi[path[0]];
    for (std::size_t t = 1; t < T && std::isfinite(lp); ++t)
      lp += m.log_A.at(path[t - 1], path[t]);
    for (std::size_t t = 0; t < T && std::isfinite(lp); ++t) {
      std::vector<double> x(seq.vectors.row(t),
                            seq.vectors.row(t) + seq.vectors.cols);
      lp += ref_gmm_logpdf(m.emissions[path[t]], x);
    }
    if (std::isfinite(lp)) {
      path_logs.push_back(lp);
      mx = std::max(mx, lp);
    }
  }
  if (path_logs.empty()) return -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (double lp : path_logs) sum += std::exp(lp - mx);
  return mx + std::log(sum);
}

// Best path by the same enumeration; first maximum in lexicographic path
// order (state index varying slowest at t=0).
inline std::pair<std::vector<int>, double> brute_force_viterbi(
    const casv::Hmm &m, const casv::FeatureSequence &seq) {
  std::size_t T = seq.num_frames();
  int N = m.n_states;
  std::vector<int> path(T, 0), best_path;
  double best = -std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, double)> rec = [&](std::size_t t,
                                                     double lp) {
    if (!std::isfinite(lp)) return;
    if (t == T) {
      if (lp > best) {
        best = lp;
        best_path = path;
      }
      return;
    }
    for (int s = 0; s < N; ++s) {
      path[t] = s;
      double step = (t == 0 ? m.log_pi[s] : m.log_A.at(path[t - 1], s));
      std::vector<double> x(seq.vectors.row(t),
                            seq.vectors.row(t) + seq.vectors.cols);
      rec(t + 1, lp + step + ref_gmm_logpdf(m.emissions[s], x));
    }
  };
  rec(0, 0.0);
  return {best_path, best};
}

// Naive O(n^2) DFT for checking the radix-2 FFT.
inline std::vector<std::complex<double>> ref_dft(
    const std::vector<double> &x) {
  std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      double ang = -2.0 * M_PI * double(k) * double(t) / double(n);
      acc += x[t] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

// Exhaustive EER sweep: every distinct score is tried as a threshold (plus
// one beyond the maximum), FAR/FRR counted directly, and the crossing is
// interpolated linearly between the bracketing operating points.
struct RefEer {
  double eer_fraction = 0.0;
  double threshold = 0.0;
};

inline RefEer ref_eer(std::vector<double> targets,
                      std::vector<double> nontargets) {
  std::vector<double> thresholds;
  for (double s : targets) thresholds.push_back(s);
  for (double s : nontargets) thresholds.push_back(s);
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());
  thresholds.push_back(thresholds.back() + 1.0);

  auto far_at = [&](double th) {
    std::size_t n = 0;
    for (double s : nontargets)
      if (s >= th) ++n;
    return double(n) / double(nontargets.size());
  };
  auto frr_at = [&](double th) {
    std::size_t n = 0;
    for (double s : targets)
      if (s < th) ++n;
    return double(n) / double(targets.size());
  };

  double prev_th = thresholds[0];
  double prev_far = far_at(prev_th), prev_frr = frr_at(prev_th);
  for (std::size_t i = 1; i < thresholds.size(); ++i) {
    double th = thresholds[i];
    double far = far_at(th), frr = frr_at(th);
    double d0 = prev_far - prev_frr, d1 = far - frr;
    if (d1 <= 0.0) {
      if (d0 == d1) return {prev_far, prev_th};
      double a = d0 / (d0 - d1);
      return {prev_far + a * (far - prev_far), prev_th + a * (th - prev_th)};
    }
    prev_th = th;
    prev_far = far;
    prev_frr = frr;
  }
  return {prev_far, prev_th};
}

// Deterministic random HMMs and sequences for oracle sweeps.
inline casv::Hmm random_hmm(std::mt19937_64 &rng, int n_states, int n_mix,
                            std::size_t dim, bool left_to_right) {
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.5);
  casv::Hmm m;
  m.label = "random";
  m.n_states = n_states;
  m.feature_dim = dim;
  m.topology =
      left_to_right ? casv::Topology::kLeftToRight : casv::Topology::kErgodic;
  auto normalize_log = [&](std::vector<double> &v) {
    double s = 0.0;
    for (double x : v) s += x;
    for (double &x : v) x = std::log(x / s);
  };
  std::vector<double> pi(n_states);
  if (left_to_right) {
    m.log_pi.assign(n_states, casv::kLogZero);
    m.log_pi[0] = 0.0;
  } else {
    for (auto &p : pi) p = unif(rng);
    normalize_log(pi);
    m.log_pi = pi;
  }
  m.log_A = casv::Matrix(n_states, n_states, casv::kLogZero);
  for (int i = 0; i < n_states; ++i) {
    std::vector<double> row;
    std::vector<int> cols;
    for (int j = 0; j < n_states; ++j) {
      if (left_to_right && (j < i || j > i + 1)) continue;
      cols.push_back(j);
      row.push_back(unif(rng));
    }
    normalize_log(row);
    for (std::size_t c = 0; c < cols.size(); ++c)
      m.log_A.at(i, cols[c]) = row[c];
  }
  for (int s = 0; s < n_states; ++s) {
    casv::GmmState e;
    std::vector<double> w(n_mix);
    for (auto &x : w) x = unif(rng);
    normalize_log(w);
    e.log_weights = w;
    e.means = casv::Matrix(n_mix, dim);
    e.vars = casv::Matrix(n_mix, dim);
    for (int k = 0; k < n_mix; ++k)
      for (std::size_t d = 0; d < dim; ++d) {
        e.means.at(k, d) = gauss(rng);
        e.vars.at(k, d) = 0.2 + unif(rng);
      }
    m.emissions.push_back(std::move(e));
  }
  m.precompute();
  return m;
}

inline casv::FeatureSequence random_sequence(std::mt19937_64 &rng,
                                             std::size_t T, std::size_t dim) {
  std::normal_distribution<double> gauss(0.0, 1.5);
  casv::FeatureSequence seq;
  seq.vectors = casv::Matrix(T, dim);
  for (auto &v : seq.vectors.data) v = gauss(rng);
  return seq;
}

// Samples an observation sequence from a known HMM; used by the parameter
// recovery test for Baum-Welch.
inline casv::FeatureSequence sample_from_hmm(const casv::Hmm &m,
                                             std::size_t T,
                                             std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto pick_log = [&](const std::vector<double> &logp) {
    double r = u(rng), acc = 0.0;
    for (std::size_t i = 0; i < logp.size(); ++i) {
      acc += logp[i] == casv::kLogZero ? 0.0 : std::exp(logp[i]);
      if (r <= acc) return int(i);
    }
    return int(logp.size()) - 1;
  };
  casv::FeatureSequence seq;
  seq.vectors = casv::Matrix(T, m.feature_dim);
  int state = pick_log(m.log_pi);
  for (std::size_t t = 0; t < T; ++t) {
    const auto &e = m.emissions[state];
    int k = pick_log(e.log_weights);
    for (std::size_t d = 0; d < m.feature_dim; ++d)
      seq.vectors.at(t, d) =
          e.means.at(k, d) + std::sqrt(e.vars.at(k, d)) * gauss(rng);
    if (t + 1 < T) {
      std::vector<double> row(m.n_states);
      for (int j = 0; j < m.n_states; ++j) row[j] = m.log_A.at(state, j);
      state = pick_log(row);
    }
  }
  return seq;
}

}  // namespace oracles

#endif  // CASV_TESTS_ORACLES_HPP
