// casv/hmm.hpp

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

#ifndef CASV_HMM_HPP
#define CASV_HMM_HPP

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "casv/common.hpp"
#include "casv/frontend.hpp"
#include "casv/logmath.hpp"

namespace casv {

enum class Topology { kLeftToRight, kErgodic };

inline std::string to_string(Topology t) {
  return t == Topology::kLeftToRight ? "left_to_right" : "ergodic";
}

inline Topology topology_from_string(const std::string &s) {
  if (s == "left_to_right") return Topology::kLeftToRight;
  if (s == "ergodic") return Topology::kErgodic;
  throw ConfigInvalid("unknown topology '" + s + "'");
}

// Hard cap on mixtures per state; keeps density evaluation allocation-free.
constexpr std::size_t kMaxMixtures = 64;

// Diagonal-covariance Gaussian mixture attached to one HMM state.
struct GmmState {
  std::vector<double> log_weights;  // M
  Matrix means;                     // M x D
  Matrix vars;                      // M x D, all >= variance floor
  // Cached per-mixture log normalizer:
  // log w_k - 0.5 * sum_d log(2*pi*var_kd). Rebuilt by precompute().
  std::vector<double> log_gconst;

  std::size_t n_mixtures() const { return log_weights.size(); }

  void precompute() {
    log_gconst.resize(log_weights.size());
    for (std::size_t k = 0; k < log_weights.size(); ++k) {
      double s = 0.0;
      for (std::size_t d = 0; d < vars.cols; ++d)
        s += std::log(vars.at(k, d)) + kLogTwoPi;
      log_gconst[k] = log_weights[k] - 0.5 * s;
    }
  }

  double log_density(const double *x) const {
    double best = kLogZero;
    double terms[kMaxMixtures];
    std::size_t M = log_weights.size();
    for (std::size_t k = 0; k < M; ++k) {
      double q = 0.0;
      const double *mu = means.row(k);
      const double *var = vars.row(k);
      for (std::size_t d = 0; d < means.cols; ++d) {
        double diff = x[d] - mu[d];
        q += diff * diff / var[d];
      }
      terms[k] = log_gconst[k] - 0.5 * q;
      if (terms[k] > best) best = terms[k];
    }
    if (best == kLogZero) return kLogZero;
    double sum = 0.0;
    for (std::size_t k = 0; k < M; ++k) sum += std::exp(terms[k] - best);
    return best + std::log(sum);
  }
};

// Hidden Markov model with GMM emissions; the single classifier type used by
// all three cascade stages (gender, emotion, speaker models differ only in
// label and training data).
struct Hmm {
  std::string label;
  int n_states = 0;
  std::size_t feature_dim = 0;
  Topology topology = Topology::kLeftToRight;
  std::vector<double> log_pi;  // n_states
  Matrix log_A;                // n_states x n_states
  std::vector<GmmState> emissions;

  void precompute() {
    for (auto &e : emissions) e.precompute();
  }

  // Structural invariants: stochastic pi and A rows, stochastic mixture
  // weights, positive variances, and the left-to-right zero pattern
  // (log_A[i][j] = -inf for j < i and j > i+1).
  void check_invariants(double tol = 1e-9) const {
    if (n_states < 1 || emissions.size() != std::size_t(n_states) ||
        log_pi.size() != std::size_t(n_states) ||
        log_A.rows != std::size_t(n_states) ||
        log_A.cols != std::size_t(n_states))
      throw NumericalError("hmm '" + label + "': inconsistent shape");
    double pi_sum = 0.0;
    for (double lp : log_pi) pi_sum += lp == kLogZero ? 0.0 : std::exp(lp);
    if (std::fabs(pi_sum - 1.0) > tol)
      throw NumericalError("hmm '" + label + "': pi does not sum to 1");
    for (int i = 0; i < n_states; ++i) {
      double row = 0.0;
      for (int j = 0; j < n_states; ++j) {
        double la = log_A.at(i, j);
        row += la == kLogZero ? 0.0 : std::exp(la);
        if (topology == Topology::kLeftToRight && (j < i || j > i + 1) &&
            la != kLogZero)
          throw NumericalError("hmm '" + label +
                               "': transition violates left-to-right mask");
      }
      if (std::fabs(row - 1.0) > tol)
        throw NumericalError("hmm '" + label + "': A row " +
                             std::to_string(i) + " does not sum to 1");
    }
    for (const auto &e : emissions) {
      if (e.n_mixtures() == 0 || e.n_mixtures() > kMaxMixtures)
        throw NumericalError("hmm '" + label + "': mixture count out of range");
      double w = 0.0;
      for (double lw : e.log_weights)
        w += lw == kLogZero ? 0.0 : std::exp(lw);
      if (std::fabs(w - 1.0) > tol)
        throw NumericalError("hmm '" + label +
                             "': mixture weights do not sum to 1");
      if (e.means.cols != feature_dim || e.vars.cols != feature_dim)
        throw NumericalError("hmm '" + label + "': emission dim mismatch");
      for (double v : e.vars.data)
        if (!(v > 0.0))
          throw NumericalError("hmm '" + label + "': non-positive variance");
    }
  }
};

namespace detail {

inline void check_seq(const Hmm &m, const FeatureSequence &seq) {
  if (seq.dim() != m.feature_dim)
    throw DimensionMismatch("sequence dim " + std::to_string(seq.dim()) +
                            " vs model dim " + std::to_string(m.feature_dim) +
                            " (model '" + m.label + "')");
  if (seq.num_frames() < 1)
    throw DimensionMismatch("empty feature sequence");
}

// Per-frame, per-state emission log densities (T x N).
inline Matrix emission_logs(const Hmm &m, const FeatureSequence &seq) {
  std::size_t T = seq.num_frames();
  Matrix logb(T, m.n_states);
  for (std::size_t t = 0; t < T; ++t) {
    const double *x = seq.vectors.row(t);
    for (int j = 0; j < m.n_states; ++j)
      logb.at(t, j) = m.emissions[j].log_density(x);
  }
  return logb;
}

}  // namespace detail

// Total log P(O | model) by the log-domain forward algorithm. Returns -inf
// only when no state path can emit the sequence.
inline double log_likelihood(const Hmm &model, const FeatureSequence &seq) {
  detail::check_seq(model, seq);
  std::size_t T = seq.num_frames();
  int N = model.n_states;
  Matrix logb = detail::emission_logs(model, seq);

  std::vector<double> alpha(N), next(N);
  for (int i = 0; i < N; ++i) alpha[i] = model.log_pi[i] + logb.at(0, i);
  std::vector<double> terms(N);
  for (std::size_t t = 1; t < T; ++t) {
    for (int j = 0; j < N; ++j) {
      for (int i = 0; i < N; ++i) terms[i] = alpha[i] + model.log_A.at(i, j);
      next[j] = log_sum_exp(terms) + logb.at(t, j);
    }
    alpha.swap(next);
  }
  return log_sum_exp(alpha);
}

// Per-frame-normalized log-likelihood: log P(O|model) / T. This is the score
// the cascade stages and the verification ratio are built from.
inline double avg_log_likelihood(const Hmm &model, const FeatureSequence &seq) {
  return log_likelihood(model, seq) / double(seq.num_frames());
}

struct ViterbiResult {
  std::vector<int> path;
  double log_prob = kLogZero;
};

// Most likely state path. Ties break toward the lowest state index, both for
// predecessors and for the final state, so runs are reproducible.
inline ViterbiResult viterbi(const Hmm &model, const FeatureSequence &seq) {
  detail::check_seq(model, seq);
  std::size_t T = seq.num_frames();
  int N = model.n_states;
  Matrix logb = detail::emission_logs(model, seq);

  Matrix delta(T, N, kLogZero);
  std::vector<std::vector<int>> back(T, std::vector<int>(N, -1));
  for (int i = 0; i < N; ++i)
    delta.at(0, i) = model.log_pi[i] + logb.at(0, i);
  for (std::size_t t = 1; t < T; ++t) {
    for (int j = 0; j < N; ++j) {
      double best = kLogZero;
      int arg = -1;
      for (int i = 0; i < N; ++i) {
        double cand = delta.at(t - 1, i) + model.log_A.at(i, j);
        if (cand > best || (arg == -1 && cand == best)) {
          best = cand;
          arg = i;
        }
      }
      delta.at(t, j) = best + logb.at(t, j);
      back[t][j] = arg;
    }
  }

  ViterbiResult r;
  int end = 0;
  for (int j = 1; j < N; ++j)
    if (delta.at(T - 1, j) > delta.at(T - 1, end)) end = j;
  r.log_prob = delta.at(T - 1, end);
  r.path.assign(T, 0);
  r.path[T - 1] = end;
  for (std::size_t t = T - 1; t > 0; --t)
    r.path[t - 1] = back[t][r.path[t]];
  return r;
}

// ---------------------------------------------------------------------------
// Model file format: self-describing structured text, one model per file,
// floats written with 17 significant digits for exact round-trip.
// ---------------------------------------------------------------------------

inline std::string serialize_hmm(const Hmm &m) {
  std::ostringstream out;
  out << "casv_hmm v1\n";
  out << "label " << m.label << "\n";
  out << "n_states " << m.n_states << "\n";
  out << "feature_dim " << m.feature_dim << "\n";
  out << "topology " << to_string(m.topology) << "\n";
  out << "log_pi";
  for (double v : m.log_pi) out << " " << format_double17(v);
  out << "\n";
  for (int i = 0; i < m.n_states; ++i) {
    out << "log_A " << i;
    for (int j = 0; j < m.n_states; ++j)
      out << " " << format_double17(m.log_A.at(i, j));
    out << "\n";
  }
  for (int s = 0; s < m.n_states; ++s) {
    const GmmState &e = m.emissions[s];
    out << "state " << s << " n_mixtures " << e.n_mixtures() << "\n";
    out << "log_weights";
    for (double v : e.log_weights) out << " " << format_double17(v);
    out << "\n";
    for (std::size_t k = 0; k < e.n_mixtures(); ++k) {
      out << "mean " << k;
      for (std::size_t d = 0; d < m.feature_dim; ++d)
        out << " " << format_double17(e.means.at(k, d));
      out << "\n";
      out << "var " << k;
      for (std::size_t d = 0; d < m.feature_dim; ++d)
        out << " " << format_double17(e.vars.at(k, d));
      out << "\n";
    }
  }
  out << "end\n";
  return out.str();
}

inline Hmm deserialize_hmm(const std::string &text, const std::string &name) {
  std::istringstream in(text);
  std::string line;
  auto fail = [&](const std::string &why) {
    throw IntegrityError(name + ": " + why);
  };
  auto next_tokens = [&](const std::string &expect_head) {
    if (!std::getline(in, line))
      fail("unexpected end (want " + expect_head + ")");
    auto toks = split(trim(line), ' ');
    if (toks.empty() || toks[0] != expect_head)
      fail("expected '" + expect_head + "', got '" + line + "'");
    return toks;
  };

  if (!std::getline(in, line) || trim(line) != "casv_hmm v1")
    throw IntegrityError(name + ": bad magic line");
  Hmm m;
  {
    auto t = next_tokens("label");
    m.label = t.size() > 1 ? t[1] : "";
  }
  m.n_states = int(parse_long(next_tokens("n_states").at(1)));
  m.feature_dim = std::size_t(parse_long(next_tokens("feature_dim").at(1)));
  m.topology = topology_from_string(next_tokens("topology").at(1));
  {
    auto t = next_tokens("log_pi");
    if (t.size() != std::size_t(m.n_states) + 1) fail("bad log_pi arity");
    for (int i = 0; i < m.n_states; ++i)
      m.log_pi.push_back(parse_double(t[i + 1]));
  }
  m.log_A = Matrix(m.n_states, m.n_states);
  for (int i = 0; i < m.n_states; ++i) {
    auto t = next_tokens("log_A");
    if (t.size() != std::size_t(m.n_states) + 2 ||
        parse_long(t[1]) != i)
      fail("bad log_A row " + std::to_string(i));
    for (int j = 0; j < m.n_states; ++j)
      m.log_A.at(i, j) = parse_double(t[j + 2]);
  }
  for (int s = 0; s < m.n_states; ++s) {
    auto head = next_tokens("state");
    if (head.size() != 4 || parse_long(head[1]) != s ||
        head[2] != "n_mixtures")
      fail("bad state header for state " + std::to_string(s));
    std::size_t M = std::size_t(parse_long(head[3]));
    if (M == 0 || M > kMaxMixtures) fail("mixture count out of range");
    GmmState e;
    e.means = Matrix(M, m.feature_dim);
    e.vars = Matrix(M, m.feature_dim);
    auto w = next_tokens("log_weights");
    if (w.size() != M + 1) fail("bad log_weights arity");
    for (std::size_t k = 0; k < M; ++k)
      e.log_weights.push_back(parse_double(w[k + 1]));
    for (std::size_t k = 0; k < M; ++k) {
      auto mu = next_tokens("mean");
      auto va = next_tokens("var");
      if (mu.size() != m.feature_dim + 2 || va.size() != m.feature_dim + 2)
        fail("bad mixture arity in state " + std::to_string(s));
      for (std::size_t d = 0; d < m.feature_dim; ++d) {
        e.means.at(k, d) = parse_double(mu[d + 2]);
        e.vars.at(k, d) = parse_double(va[d + 2]);
      }
    }
    m.emissions.push_back(std::move(e));
  }
  if (!std::getline(in, line) || trim(line) != "end")
    throw IntegrityError(name + ": missing end marker");
  m.precompute();
  return m;
}

inline void save_hmm(const std::string &path, const Hmm &m) {
  write_text_file(path, serialize_hmm(m));
}

inline Hmm load_hmm(const std::string &path) {
  return deserialize_hmm(read_text_file(path), path);
}

}  // namespace casv

#endif  // CASV_HMM_HPP
