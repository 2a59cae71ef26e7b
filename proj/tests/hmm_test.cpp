// tests/hmm_test.cpp

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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "casv/hmm.hpp"
#include "casv/logmath.hpp"
#include "oracles.hpp"

using namespace casv;

namespace {

// 2-state ergodic model with hand-picked parameters; small enough to
// enumerate all paths by hand or by the oracle.
Hmm known_two_state() {
  Hmm m;
  m.label = "known2";
  m.n_states = 2;
  m.feature_dim = 1;
  m.topology = Topology::kErgodic;
  m.log_pi = {std::log(0.6), std::log(0.4)};
  m.log_A = Matrix(2, 2);
  m.log_A.at(0, 0) = std::log(0.7);
  m.log_A.at(0, 1) = std::log(0.3);
  m.log_A.at(1, 0) = std::log(0.4);
  m.log_A.at(1, 1) = std::log(0.6);
  for (double mean : {-1.0, 2.0}) {
    GmmState e;
    e.log_weights = {0.0};
    e.means = Matrix(1, 1);
    e.means.at(0, 0) = mean;
    e.vars = Matrix(1, 1);
    e.vars.at(0, 0) = 0.5;
    m.emissions.push_back(e);
  }
  m.precompute();
  return m;
}

FeatureSequence seq1d(std::initializer_list<double> xs) {
  FeatureSequence s;
  s.vectors = Matrix(xs.size(), 1);
  std::size_t t = 0;
  for (double x : xs) s.vectors.at(t++, 0) = x;
  return s;
}

}  // namespace

TEST_CASE("log_sum_exp basics") {
  REQUIRE(log_add(kLogZero, kLogZero) == kLogZero);
  REQUIRE(log_add(0.0, kLogZero) == 0.0);
  REQUIRE(log_add(std::log(2.0), std::log(3.0)) ==
          Catch::Approx(std::log(5.0)));
  std::vector<double> xs = {std::log(1.0), std::log(2.0), std::log(3.0)};
  REQUIRE(log_sum_exp(xs) == Catch::Approx(std::log(6.0)));
  std::vector<double> huge = {1000.0, 1000.0};
  REQUIRE(log_sum_exp(huge) == Catch::Approx(1000.0 + std::log(2.0)));
  std::vector<double> none;
  REQUIRE(log_sum_exp(none) == kLogZero);
}

TEST_CASE("forward base case: T = 1") {
  Hmm m = known_two_state();
  FeatureSequence s = seq1d({0.5});
  std::vector<double> terms;
  for (int i = 0; i < 2; ++i) {
    std::vector<double> x = {0.5};
    terms.push_back(m.log_pi[i] + oracles::ref_gmm_logpdf(m.emissions[i], x));
  }
  REQUIRE(log_likelihood(m, s) == Catch::Approx(log_sum_exp(terms)));
  REQUIRE(avg_log_likelihood(m, s) == Catch::Approx(log_likelihood(m, s)));
}

TEST_CASE("1-state model degenerates to a per-frame sum") {
  Hmm m;
  m.label = "one";
  m.n_states = 1;
  m.feature_dim = 2;
  m.topology = Topology::kErgodic;
  m.log_pi = {0.0};
  m.log_A = Matrix(1, 1);
  m.log_A.at(0, 0) = 0.0;
  GmmState e;
  e.log_weights = {std::log(0.25), std::log(0.75)};
  e.means = Matrix(2, 2);
  e.means.at(0, 0) = -1.0;
  e.means.at(0, 1) = 0.5;
  e.means.at(1, 0) = 2.0;
  e.means.at(1, 1) = -0.5;
  e.vars = Matrix(2, 2, 0.8);
  m.emissions.push_back(e);
  m.precompute();

  FeatureSequence s;
  s.vectors = Matrix(4, 2);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  for (auto &v : s.vectors.data) v = g(rng);

  double expect = 0.0;
  for (std::size_t t = 0; t < 4; ++t) {
    std::vector<double> x(s.vectors.row(t), s.vectors.row(t) + 2);
    expect += oracles::ref_gmm_logpdf(m.emissions[0], x);
  }
  REQUIRE(log_likelihood(m, s) == Catch::Approx(expect));

  // Duplicating the frames leaves the per-frame average unchanged.
  FeatureSequence dup;
  dup.vectors = Matrix(8, 2);
  for (std::size_t t = 0; t < 8; ++t)
    for (std::size_t d = 0; d < 2; ++d)
      dup.vectors.at(t, d) = s.vectors.at(t % 4, d);
  REQUIRE(avg_log_likelihood(m, dup) ==
          Catch::Approx(avg_log_likelihood(m, s)));

  // Viterbi on a 1-state model: the only path.
  auto v = viterbi(m, s);
  REQUIRE(v.path == std::vector<int>{0, 0, 0, 0});
}

TEST_CASE("T=3 two-state model matches brute-force path enumeration") {
  Hmm m = known_two_state();
  FeatureSequence s = seq1d({-0.8, 1.9, 0.1});
  double ref = oracles::brute_force_log_likelihood(m, s);
  double impl = log_likelihood(m, s);
  REQUIRE(impl == Catch::Approx(ref).epsilon(1e-9));
  REQUIRE(avg_log_likelihood(m, s) == Catch::Approx(ref / 3.0).epsilon(1e-9));

  auto [ref_path, ref_lp] = oracles::brute_force_viterbi(m, s);
  auto v = viterbi(m, s);
  REQUIRE(v.path == ref_path);
  REQUIRE(v.log_prob == Catch::Approx(ref_lp).epsilon(1e-9));
}

TEST_CASE("property: forward equals path enumeration on random models") {
  std::mt19937_64 rng(123);
  std::uniform_int_distribution<int> states(1, 3), mixes(1, 2), dims(1, 2),
      lens(1, 6), coin(0, 1);
  for (int rep = 0; rep < 60; ++rep) {
    int N = states(rng), M = mixes(rng), D = dims(rng), T = lens(rng);
    Hmm m = oracles::random_hmm(rng, N, M, D, coin(rng) == 1);
    FeatureSequence s = oracles::random_sequence(rng, T, D);
    double ref = oracles::brute_force_log_likelihood(m, s);
    double impl = log_likelihood(m, s);
    if (ref == kLogZero)
      REQUIRE(impl == kLogZero);
    else
      REQUIRE(impl == Catch::Approx(ref).epsilon(1e-9));

    // Viterbi path log-prob never exceeds the forward likelihood.
    auto v = viterbi(m, s);
    REQUIRE(v.log_prob <= impl + 1e-9);
  }
}

TEST_CASE("forced-advance left-to-right pins the viterbi path") {
  int N = 4;
  Hmm m;
  m.label = "forced";
  m.n_states = N;
  m.feature_dim = 1;
  m.topology = Topology::kLeftToRight;
  m.log_pi.assign(N, kLogZero);
  m.log_pi[0] = 0.0;
  m.log_A = Matrix(N, N, kLogZero);
  for (int i = 0; i + 1 < N; ++i) m.log_A.at(i, i + 1) = 0.0;  // no self-loop
  m.log_A.at(N - 1, N - 1) = 0.0;
  for (int s = 0; s < N; ++s) {
    GmmState e;
    e.log_weights = {0.0};
    e.means = Matrix(1, 1);
    e.means.at(0, 0) = double(s);
    e.vars = Matrix(1, 1, 1.0);
    m.emissions.push_back(e);
  }
  m.precompute();

  FeatureSequence s = seq1d({0.0, 0.0, 0.0, 0.0});
  auto v = viterbi(m, s);
  REQUIRE(v.path == std::vector<int>{0, 1, 2, 3});
  REQUIRE(v.log_prob == Catch::Approx(log_likelihood(m, s)));

  // With T < N under forced advance, prefixes of the path are still the
  // only admissible assignment.
  FeatureSequence st = seq1d({0.0, 0.0});
  REQUIRE(viterbi(m, st).path == std::vector<int>{0, 1});
}

TEST_CASE("dimension mismatch raises") {
  Hmm m = known_two_state();
  FeatureSequence s;
  s.vectors = Matrix(3, 2, 0.0);
  REQUIRE_THROWS_AS(log_likelihood(m, s), DimensionMismatch);
  REQUIRE_THROWS_AS(viterbi(m, s), DimensionMismatch);
  FeatureSequence empty;
  empty.vectors = Matrix(0, 1);
  REQUIRE_THROWS_AS(log_likelihood(m, empty), DimensionMismatch);
}

TEST_CASE("serialization round-trip is value-exact") {
  std::mt19937_64 rng(77);
  for (int rep = 0; rep < 8; ++rep) {
    Hmm m = oracles::random_hmm(rng, 3, 2, 4, rep % 2 == 0);
    m.label = "roundtrip/" + std::to_string(rep);
    std::string text = serialize_hmm(m);
    Hmm back = deserialize_hmm(text, "mem");
    REQUIRE(back.label == m.label);
    REQUIRE(back.n_states == m.n_states);
    REQUIRE(back.feature_dim == m.feature_dim);
    REQUIRE(back.topology == m.topology);
    REQUIRE(back.log_pi == m.log_pi);
    REQUIRE(back.log_A == m.log_A);
    for (int s = 0; s < m.n_states; ++s) {
      REQUIRE(back.emissions[s].log_weights == m.emissions[s].log_weights);
      REQUIRE(back.emissions[s].means == m.emissions[s].means);
      REQUIRE(back.emissions[s].vars == m.emissions[s].vars);
    }
    // -inf entries survive the trip (left-to-right zero pattern).
    if (m.topology == Topology::kLeftToRight)
      REQUIRE(back.log_A.at(2, 0) == kLogZero);
  }

  REQUIRE_THROWS_AS(deserialize_hmm("not a model", "mem"), IntegrityError);
  REQUIRE_THROWS_AS(deserialize_hmm("casv_hmm v1\nlabel x\n", "mem"),
                    IntegrityError);
}

TEST_CASE("invariant checker flags broken models") {
  Hmm m = known_two_state();
  m.check_invariants();

  Hmm bad = m;
  bad.log_pi[0] = std::log(0.9);  // no longer sums to 1
  REQUIRE_THROWS_AS(bad.check_invariants(), NumericalError);

  bad = m;
  bad.emissions[0].vars.at(0, 0) = 0.0;
  REQUIRE_THROWS_AS(bad.check_invariants(), NumericalError);

  bad = m;
  bad.topology = Topology::kLeftToRight;  // A has a backward transition
  REQUIRE_THROWS_AS(bad.check_invariants(), NumericalError);
}
