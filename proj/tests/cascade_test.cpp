// tests/cascade_test.cpp

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

#include "casv/cascade.hpp"
#include "oracles.hpp"

using namespace casv;

namespace {

// 1-state, 1-mixture model whose average log-likelihood is easy to compute
// independently.
Hmm tiny_model(const std::string &label, std::vector<double> mean,
               double var = 0.5) {
  Hmm m;
  m.label = label;
  m.n_states = 1;
  m.feature_dim = mean.size();
  m.topology = Topology::kErgodic;
  m.log_pi = {0.0};
  m.log_A = Matrix(1, 1);
  m.log_A.at(0, 0) = 0.0;
  GmmState e;
  e.log_weights = {0.0};
  e.means = Matrix(1, mean.size());
  for (std::size_t d = 0; d < mean.size(); ++d) e.means.at(0, d) = mean[d];
  e.vars = Matrix(1, mean.size(), var);
  m.emissions.push_back(e);
  m.precompute();
  return m;
}

double oracle_avg_ll(const Hmm &m, const FeatureSequence &seq) {
  double total = 0.0;
  for (std::size_t t = 0; t < seq.num_frames(); ++t) {
    std::vector<double> x(seq.vectors.row(t),
                          seq.vectors.row(t) + seq.vectors.cols);
    total += oracles::ref_gmm_logpdf(m.emissions[0], x);
  }
  return total / double(seq.num_frames());
}

// Registry of tiny known models over the given emotion list, with one male
// claimant "ma" and one female claimant "fa". Model means are spread apart
// deterministically so every score is distinct.
ModelRegistry tiny_registry(const std::vector<std::string> &emotions) {
  ModelRegistry reg;
  reg.emotion_set = emotions;
  reg.feature_dim = 2;
  reg.claimant_order = {"ma", "fa"};
  reg.claimant_gender["ma"] = Gender::kMale;
  reg.claimant_gender["fa"] = Gender::kFemale;

  reg.models["gender/male"] = tiny_model("gender/male", {0.0, 0.0});
  reg.models["gender/female"] = tiny_model("gender/female", {3.0, 3.0});
  double off = 0.0;
  for (const auto &e : emotions) {
    reg.models["emotion/male/" + e] =
        tiny_model("emotion/male/" + e, {0.2 + off, -0.1 - off});
    reg.models["emotion/female/" + e] =
        tiny_model("emotion/female/" + e, {2.8 - off, 3.2 + off});
    reg.models["emotion_pooled/" + e] =
        tiny_model("emotion_pooled/" + e, {1.5 + off, 1.5 - off});
    reg.models["speaker/male/" + e + "/ma"] =
        tiny_model("speaker/male/" + e + "/ma", {-0.3 + off, 0.4 + off});
    reg.models["speaker/female/" + e + "/fa"] =
        tiny_model("speaker/female/" + e + "/fa", {3.3 - off, 2.6 - off});
    off += 0.45;
  }
  reg.models["speaker_pooled/ma"] = tiny_model("speaker_pooled/ma", {-0.2, 0.3});
  reg.models["speaker_pooled/fa"] = tiny_model("speaker_pooled/fa", {3.1, 2.9});
  return reg;
}

FeatureSequence make_seq(std::uint64_t seed, std::size_t T = 4,
                         std::size_t D = 2) {
  std::mt19937_64 rng(seed);
  return oracles::random_sequence(rng, T, D);
}

}  // namespace

TEST_CASE("identify_gender argmax and tie handling") {
  ModelRegistry reg = tiny_registry({"neutral", "anger"});
  FeatureSequence near_male = make_seq(1);  // near the origin: male models

  StageDecision d = identify_gender(reg, near_male);
  REQUIRE(d.chosen == "male");
  REQUIRE(d.scores.size() == 2);
  REQUIRE_FALSE(d.tie);
  // Chosen label attains the maximum of the recorded score map.
  double mx = std::max(d.scores[0].second, d.scores[1].second);
  for (const auto &[label, sc] : d.scores)
    if (label == d.chosen) REQUIRE(sc == mx);

  // Exact tie: identical models; first gender in {male, female} wins and
  // the tie is flagged.
  reg.models["gender/female"] = reg.models["gender/male"];
  StageDecision t = identify_gender(reg, near_male);
  REQUIRE(t.chosen == "male");
  REQUIRE(t.tie);
}

TEST_CASE("identify_emotion ordering, ties, and degenerate m=1") {
  ModelRegistry reg = tiny_registry({"neutral", "anger", "sadness"});
  FeatureSequence seq = make_seq(2);
  StageDecision d = identify_emotion(reg, seq, Gender::kMale);
  REQUIRE(d.scores.size() == 3);
  REQUIRE(d.scores[0].first == "neutral");  // manifest order preserved
  double best = d.scores[0].second;
  for (const auto &[label, sc] : d.scores) best = std::max(best, sc);
  for (const auto &[label, sc] : d.scores)
    if (label == d.chosen) REQUIRE(sc == best);

  // m = 1: the only emotion is returned unconditionally.
  ModelRegistry one = tiny_registry({"neutral"});
  StageDecision d1 = identify_emotion(one, seq, Gender::kMale);
  REQUIRE(d1.chosen == "neutral");

  // Tie between identical emotion models: first label in manifest order.
  ModelRegistry tie = tiny_registry({"neutral", "anger"});
  tie.models["emotion/male/anger"] = tie.models["emotion/male/neutral"];
  StageDecision dt = identify_emotion(tie, seq, Gender::kMale);
  REQUIRE(dt.chosen == "neutral");
  REQUIRE(dt.tie);
}

TEST_CASE("verification_score assembles the three terms as printed") {
  std::vector<std::string> emotions = {"neutral", "anger", "sadness"};
  ModelRegistry reg = tiny_registry(emotions);
  FeatureSequence seq = make_seq(3, 5);

  VerificationScore v =
      verification_score(reg, seq, "ma", Gender::kMale, "anger");
  REQUIRE(v.b_used == 2);  // B = m - 1

  // Oracle assembly with independently computed average log-likelihoods.
  double t1 = oracle_avg_ll(reg.models.at("speaker/male/anger/ma"), seq);
  double t2 = 0.5 * (oracle_avg_ll(reg.models.at("speaker/male/neutral/ma"),
                                   seq) +
                     oracle_avg_ll(reg.models.at("speaker/male/sadness/ma"),
                                   seq));
  double t3 =
      0.5 * (oracle_avg_ll(reg.models.at("emotion/female/neutral"), seq) +
             oracle_avg_ll(reg.models.at("emotion/female/sadness"), seq));
  REQUIRE(v.target_term == Catch::Approx(t1).epsilon(1e-9));
  REQUIRE(v.wrong_emotion_term == Catch::Approx(t2).epsilon(1e-9));
  REQUIRE(v.wrong_gender_term == Catch::Approx(t3).epsilon(1e-9));
  REQUIRE(v.lambda == Catch::Approx(t1 - t2 - t3).epsilon(1e-9));
  // The identity holds exactly as computed, not merely to tolerance.
  REQUIRE(v.lambda ==
          v.target_term - v.wrong_emotion_term - v.wrong_gender_term);
}

TEST_CASE("m=2 degenerates both averages to single terms") {
  ModelRegistry reg = tiny_registry({"neutral", "anger"});
  FeatureSequence seq = make_seq(4);
  VerificationScore v =
      verification_score(reg, seq, "ma", Gender::kMale, "neutral");
  REQUIRE(v.b_used == 1);
  REQUIRE(v.wrong_emotion_term ==
          Catch::Approx(
              oracle_avg_ll(reg.models.at("speaker/male/anger/ma"), seq)));
  REQUIRE(v.wrong_gender_term ==
          Catch::Approx(
              oracle_avg_ll(reg.models.at("emotion/female/anger"), seq)));
}

TEST_CASE("six emotions give B = 5") {
  std::vector<std::string> six = {"neutral",   "anger",   "sadness",
                                  "happiness", "disgust", "fear"};
  ModelRegistry reg = tiny_registry(six);
  FeatureSequence seq = make_seq(5);
  VerificationScore v =
      verification_score(reg, seq, "ma", Gender::kMale, "neutral");
  REQUIRE(v.b_used == 5);
}

TEST_CASE("cohort configuration variants") {
  std::vector<std::string> emotions = {"neutral", "anger", "sadness"};
  ModelRegistry reg = tiny_registry(emotions);
  FeatureSequence seq = make_seq(6);

  CascadeConfig cfg;
  cfg.eq5_cohort = Eq5Cohort::kGenderEmotionModels;
  VerificationScore v =
      verification_score(reg, seq, "ma", Gender::kMale, "anger", cfg);
  double t2 =
      0.5 * (oracle_avg_ll(reg.models.at("emotion/male/neutral"), seq) +
             oracle_avg_ll(reg.models.at("emotion/male/sadness"), seq));
  REQUIRE(v.wrong_emotion_term == Catch::Approx(t2).epsilon(1e-9));

  cfg = CascadeConfig{};
  cfg.eq6_cohort = Eq6Cohort::kOppositePooledSpeakers;
  v = verification_score(reg, seq, "ma", Gender::kMale, "anger", cfg);
  REQUIRE(v.wrong_gender_term ==
          Catch::Approx(oracle_avg_ll(reg.models.at("speaker_pooled/fa"),
                                      seq)));

  cfg = CascadeConfig{};
  cfg.eq3_variant = Eq3Variant::kMean;
  v = verification_score(reg, seq, "ma", Gender::kMale, "anger", cfg);
  REQUIRE(v.lambda ==
          Catch::Approx(v.target_term -
                        0.5 * (v.wrong_emotion_term + v.wrong_gender_term)));
}

TEST_CASE("verification errors") {
  ModelRegistry reg = tiny_registry({"neutral", "anger"});
  FeatureSequence seq = make_seq(7);
  REQUIRE_THROWS_AS(
      verification_score(reg, seq, "nobody", Gender::kMale, "neutral"),
      UnknownClaimant);
  REQUIRE_THROWS_AS(
      verification_score(reg, seq, "ma", Gender::kMale, "boredom"),
      MissingModel);

  ModelRegistry broken = tiny_registry({"neutral", "anger"});
  broken.models.erase("emotion/female/anger");
  REQUIRE_THROWS_AS(
      verification_score(broken, seq, "ma", Gender::kMale, "neutral"),
      MissingModel);

  ModelRegistry one = tiny_registry({"neutral"});
  REQUIRE_THROWS_AS(
      verification_score(one, seq, "ma", Gender::kMale, "neutral"),
      MissingModel);
}

TEST_CASE("verify threshold semantics") {
  ModelRegistry reg = tiny_registry({"neutral", "anger"});
  FeatureSequence seq = make_seq(8);
  double neg_inf = -std::numeric_limits<double>::infinity();
  double pos_inf = std::numeric_limits<double>::infinity();

  auto accept_all =
      verify(reg, seq, "ma", neg_inf, VerifyMode::kThreeStage);
  REQUIRE(accept_all.accept);
  auto reject_all =
      verify(reg, seq, "ma", pos_inf, VerifyMode::kThreeStage);
  REQUIRE_FALSE(reject_all.accept);
}

TEST_CASE("forced mode with the stage outputs reproduces three_stage") {
  ModelRegistry reg = tiny_registry({"neutral", "anger", "sadness"});
  FeatureSequence seq = make_seq(9);

  auto three = verify(reg, seq, "ma", 0.0, VerifyMode::kThreeStage);
  REQUIRE(three.score.trace.gender.has_value());
  REQUIRE(three.score.trace.emotion.has_value());
  Gender g_star = gender_from_string(three.score.trace.gender->chosen);
  std::string e_star = three.score.trace.emotion->chosen;

  auto forced = verify(reg, seq, "ma", 0.0, VerifyMode::kForced, {}, g_star,
                       e_star);
  REQUIRE(forced.score.lambda == three.score.lambda);
  REQUIRE(forced.score.target_term == three.score.target_term);
  REQUIRE(forced.score.trace.forced_gender.has_value());
  REQUIRE(forced.score.trace.forced_emotion.has_value());
}

TEST_CASE("stage decisions are claimant-blind") {
  ModelRegistry reg = tiny_registry({"neutral", "anger"});
  FeatureSequence seq = make_seq(10);
  auto a = verify(reg, seq, "ma", 0.0, VerifyMode::kThreeStage);
  auto b = verify(reg, seq, "fa", 0.0, VerifyMode::kThreeStage);
  REQUIRE(a.score.trace.gender->chosen == b.score.trace.gender->chosen);
  REQUIRE(a.score.trace.emotion->chosen == b.score.trace.emotion->chosen);
  REQUIRE(a.score.trace.gender->scores == b.score.trace.gender->scores);
}

TEST_CASE("baseline modes use the documented cohorts") {
  // Four claimants so the cohorts are non-trivial.
  std::vector<std::string> emotions = {"neutral", "anger"};
  ModelRegistry reg = tiny_registry(emotions);
  reg.claimant_order = {"ma", "mb", "fa", "fb"};
  reg.claimant_gender["mb"] = Gender::kMale;
  reg.claimant_gender["fb"] = Gender::kFemale;
  for (const auto &e : emotions) {
    reg.models["speaker/male/" + e + "/mb"] =
        tiny_model("speaker/male/" + e + "/mb", {-0.6, 0.9});
    reg.models["speaker/female/" + e + "/fb"] =
        tiny_model("speaker/female/" + e + "/fb", {3.6, 2.2});
  }
  reg.models["speaker_pooled/mb"] = tiny_model("speaker_pooled/mb", {-0.5, 0.8});
  reg.models["speaker_pooled/fb"] = tiny_model("speaker_pooled/fb", {3.5, 2.1});

  FeatureSequence seq = make_seq(11);

  // one_stage: pooled target vs all other claimants' pooled models.
  auto one = verify(reg, seq, "ma", 0.0, VerifyMode::kOneStage);
  double t = oracle_avg_ll(reg.models.at("speaker_pooled/ma"), seq);
  double cohort = (oracle_avg_ll(reg.models.at("speaker_pooled/mb"), seq) +
                   oracle_avg_ll(reg.models.at("speaker_pooled/fa"), seq) +
                   oracle_avg_ll(reg.models.at("speaker_pooled/fb"), seq)) /
                  3.0;
  REQUIRE(one.score.lambda == Catch::Approx(t - cohort).epsilon(1e-9));
  REQUIRE(one.score.b_used == 3);

  // two_stage_gender: same-gender cohort only (the decided gender's).
  auto twog = verify(reg, seq, "ma", 0.0, VerifyMode::kTwoStageGender);
  REQUIRE(twog.score.trace.gender.has_value());
  std::string g_star = twog.score.trace.gender->chosen;  // male models win
  REQUIRE(g_star == "male");
  double cohort_g = oracle_avg_ll(reg.models.at("speaker_pooled/mb"), seq);
  REQUIRE(twog.score.lambda == Catch::Approx(t - cohort_g).epsilon(1e-9));

  // two_stage_emotion: emotion-specific target, mixed-gender cohort of the
  // other claimants' models under the decided emotion.
  auto twoe = verify(reg, seq, "ma", 0.0, VerifyMode::kTwoStageEmotion);
  REQUIRE(twoe.score.trace.emotion.has_value());
  std::string e_star = twoe.score.trace.emotion->chosen;
  double te = oracle_avg_ll(reg.models.at("speaker/male/" + e_star + "/ma"),
                            seq);
  double cohort_e =
      (oracle_avg_ll(reg.models.at("speaker/male/" + e_star + "/mb"), seq) +
       oracle_avg_ll(reg.models.at("speaker/female/" + e_star + "/fa"), seq) +
       oracle_avg_ll(reg.models.at("speaker/female/" + e_star + "/fb"), seq)) /
      3.0;
  REQUIRE(twoe.score.lambda == Catch::Approx(te - cohort_e).epsilon(1e-9));
}

TEST_CASE("score cache returns identical values") {
  ModelRegistry reg = tiny_registry({"neutral", "anger"});
  FeatureSequence seq = make_seq(12);
  ScoreCache cache(seq);
  const Hmm &m = reg.models.at("gender/male");
  double a = cache.score(m);
  double b = cache.score(m);
  REQUIRE(a == b);
  REQUIRE(a == avg_log_likelihood(m, seq));
}
