// casv/cascade.hpp

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

#ifndef CASV_CASCADE_HPP
#define CASV_CASCADE_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "casv/registry.hpp"

namespace casv {

enum class VerifyMode {
  kOneStage,
  kTwoStageGender,
  kTwoStageEmotion,
  kThreeStage,
  kWorstCase,  // forced wrong labels chosen by the harness
  kForced,     // caller-supplied labels
};

inline std::string to_string(VerifyMode m) {
  switch (m) {
    case VerifyMode::kOneStage: return "one_stage";
    case VerifyMode::kTwoStageGender: return "two_stage_gender";
    case VerifyMode::kTwoStageEmotion: return "two_stage_emotion";
    case VerifyMode::kThreeStage: return "three_stage";
    case VerifyMode::kWorstCase: return "worst_case";
    case VerifyMode::kForced: return "forced";
  }
  return "?";
}

inline VerifyMode verify_mode_from_string(const std::string &s) {
  if (s == "one_stage") return VerifyMode::kOneStage;
  if (s == "two_stage_gender") return VerifyMode::kTwoStageGender;
  if (s == "two_stage_emotion") return VerifyMode::kTwoStageEmotion;
  if (s == "three_stage") return VerifyMode::kThreeStage;
  if (s == "worst_case") return VerifyMode::kWorstCase;
  if (s == "forced") return VerifyMode::kForced;
  throw ConfigInvalid("unknown mode '" + s + "'");
}

// Which models realize the B imposter emotion models of the two
// normalization terms. The equations leave this open; both readings are
// implemented and the choice is configuration.
enum class Eq5Cohort {
  kOwnEmotions,          // claimed speaker's models under the other emotions
  kGenderEmotionModels,  // speaker-independent emotion models of gender G*
};
enum class Eq6Cohort {
  kOppositeEmotionModels,   // emotion models of the other gender
  kOppositePooledSpeakers,  // pooled speaker models of the other gender
};
enum class Eq3Variant {
  kAsPrinted,  // lambda = t1 - t2 - t3
  kMean,       // lambda = t1 - (t2 + t3) / 2
};

struct CascadeConfig {
  Eq5Cohort eq5_cohort = Eq5Cohort::kOwnEmotions;
  Eq6Cohort eq6_cohort = Eq6Cohort::kOppositeEmotionModels;
  Eq3Variant eq3_variant = Eq3Variant::kAsPrinted;
};

// Memoizes per-utterance average log-likelihoods across trials: stage
// decisions and cohort terms are shared by every claim against the same
// audio.
class ScoreCache {
 public:
  explicit ScoreCache(const FeatureSequence &seq) : seq_(seq) {}

  double score(const Hmm &model) {
    auto it = cache_.find(&model);
    if (it != cache_.end()) return it->second;
    double v = avg_log_likelihood(model, seq_);
    cache_.emplace(&model, v);
    return v;
  }

  const FeatureSequence &sequence() const { return seq_; }

 private:
  const FeatureSequence &seq_;
  std::map<const Hmm *, double> cache_;
};

// One stage's argmax decision with its full score map; ties break toward
// the first label in fixed order and are flagged.
struct StageDecision {
  std::string chosen;
  std::vector<std::pair<std::string, double>> scores;  // label order
  bool tie = false;
};

struct StageTrace {
  std::optional<StageDecision> gender;
  std::optional<StageDecision> emotion;
  std::optional<std::string> forced_gender;  // set when a stage was bypassed
  std::optional<std::string> forced_emotion;
};

namespace detail {

inline StageDecision argmax_stage(
    const std::vector<std::pair<std::string, double>> &scores) {
  StageDecision d;
  d.scores = scores;
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i].second > scores[best].second) best = i;
    else if (scores[i].second == scores[best].second) d.tie = true;
  }
  // The tie flag should only mark ties at the maximum.
  if (d.tie) {
    d.tie = false;
    for (std::size_t i = 0; i < scores.size(); ++i)
      if (i != best && scores[i].second == scores[best].second) d.tie = true;
  }
  d.chosen = scores[best].first;
  return d;
}

}  // namespace detail

// Stage 1: G* = argmax over {male, female} of the per-frame-normalized
// log-likelihood under the gender models.
inline StageDecision identify_gender(const ModelRegistry &reg,
                                     ScoreCache &cache) {
  std::vector<std::pair<std::string, double>> scores;
  for (auto g : {Gender::kMale, Gender::kFemale})
    scores.emplace_back(to_string(g), cache.score(reg.gender_model(g)));
  return detail::argmax_stage(scores);
}

inline StageDecision identify_gender(const ModelRegistry &reg,
                                     const FeatureSequence &seq) {
  ScoreCache cache(seq);
  return identify_gender(reg, cache);
}

// Stage 2: E* = argmax over the emotion set of the gender-conditioned
// emotion models.
inline StageDecision identify_emotion(const ModelRegistry &reg, Gender g,
                                      ScoreCache &cache) {
  std::vector<std::pair<std::string, double>> scores;
  for (const auto &e : reg.emotion_set)
    scores.emplace_back(e, cache.score(reg.emotion_model(g, e)));
  return detail::argmax_stage(scores);
}

inline StageDecision identify_emotion(const ModelRegistry &reg,
                                      const FeatureSequence &seq, Gender g) {
  ScoreCache cache(seq);
  return identify_emotion(reg, g, cache);
}

// Gender-independent emotion stage for the emotion-dependent two-stage
// baseline: argmax over gender-pooled emotion models.
inline StageDecision identify_emotion_pooled(const ModelRegistry &reg,
                                             ScoreCache &cache) {
  std::vector<std::pair<std::string, double>> scores;
  for (const auto &e : reg.emotion_set)
    scores.emplace_back(e, cache.score(reg.pooled_emotion_model(e)));
  return detail::argmax_stage(scores);
}

// The verification score and its three terms. lambda is exactly
// target_term - wrong_emotion_term - wrong_gender_term as computed (or the
// mean variant when configured); baseline modes reuse the structure with
// their single cohort term in the matching slot and zero in the other.
struct VerificationScore {
  double lambda = 0.0;
  double target_term = 0.0;
  double wrong_emotion_term = 0.0;
  double wrong_gender_term = 0.0;
  int b_used = 0;
  StageTrace trace;
};

// Third stage: the log-likelihood ratio over the claimant model under the
// recognized (gender, emotion) against the two sets of B = m - 1 imposter
// emotion models, one under the recognized gender and one under the other.
inline VerificationScore verification_score(const ModelRegistry &reg,
                                            const std::string &claimed,
                                            Gender g, const std::string &e,
                                            ScoreCache &cache,
                                            const CascadeConfig &cfg = {}) {
  if (!reg.is_claimant(claimed))
    throw UnknownClaimant("'" + claimed + "' is not an enrolled claimant");
  if (reg.emotion_set.size() < 2)
    throw MissingModel("verification needs at least 2 emotions (B = m - 1)");
  int idx = -1;
  for (std::size_t i = 0; i < reg.emotion_set.size(); ++i)
    if (reg.emotion_set[i] == e) idx = int(i);
  if (idx < 0) throw MissingModel("unknown emotion label '" + e + "'");

  VerificationScore v;
  v.target_term = cache.score(reg.speaker_model(g, e, claimed));

  int B = 0;
  double we = 0.0;
  for (const auto &other : reg.emotion_set) {
    if (other == e) continue;
    ++B;
    switch (cfg.eq5_cohort) {
      case Eq5Cohort::kOwnEmotions:
        we += cache.score(reg.speaker_model(g, other, claimed));
        break;
      case Eq5Cohort::kGenderEmotionModels:
        we += cache.score(reg.emotion_model(g, other));
        break;
    }
  }
  v.wrong_emotion_term = we / double(B);
  v.b_used = B;

  double wg = 0.0;
  if (cfg.eq6_cohort == Eq6Cohort::kOppositeEmotionModels) {
    for (const auto &other : reg.emotion_set) {
      if (other == e) continue;
      wg += cache.score(reg.emotion_model(opposite(g), other));
    }
    wg /= double(B);
  } else {
    auto cohort = reg.claimants_of_gender(opposite(g));
    if (cohort.empty())
      throw MissingModel("no opposite-gender claimants for the Eq. 6 cohort");
    for (const auto &spk : cohort) wg += cache.score(reg.pooled_speaker_model(spk));
    wg /= double(cohort.size());
  }
  v.wrong_gender_term = wg;

  v.lambda = cfg.eq3_variant == Eq3Variant::kAsPrinted
                 ? v.target_term - v.wrong_emotion_term - v.wrong_gender_term
                 : v.target_term -
                       0.5 * (v.wrong_emotion_term + v.wrong_gender_term);
  return v;
}

inline VerificationScore verification_score(const ModelRegistry &reg,
                                            const FeatureSequence &seq,
                                            const std::string &claimed,
                                            Gender g, const std::string &e,
                                            const CascadeConfig &cfg = {}) {
  ScoreCache cache(seq);
  return verification_score(reg, claimed, g, e, cache, cfg);
}

struct VerifyOutcome {
  bool accept = false;
  VerificationScore score;
  VerifyMode mode = VerifyMode::kThreeStage;
};

namespace detail {

// Mean cohort score over claimants other than the claimed one, optionally
// restricted to one gender.
inline double claimant_cohort_mean(const ModelRegistry &reg,
                                   const std::string &claimed,
                                   std::optional<Gender> restrict_gender,
                                   ScoreCache &cache, int *size_out,
                                   const char *what) {
  double sum = 0.0;
  int n = 0;
  for (const auto &spk : reg.claimant_order) {
    if (spk == claimed) continue;
    if (restrict_gender && reg.claimant_gender.at(spk) != *restrict_gender)
      continue;
    sum += cache.score(reg.pooled_speaker_model(spk));
    ++n;
  }
  if (n == 0)
    throw MissingModel(std::string("empty cohort for ") + what);
  if (size_out) *size_out = n;
  return sum / double(n);
}

inline double emotion_claimant_cohort_mean(const ModelRegistry &reg,
                                           const std::string &claimed,
                                           const std::string &emotion,
                                           ScoreCache &cache, int *size_out) {
  double sum = 0.0;
  int n = 0;
  for (const auto &spk : reg.claimant_order) {
    if (spk == claimed) continue;
    Gender g = reg.claimant_gender.at(spk);
    sum += cache.score(reg.speaker_model(g, emotion, spk));
    ++n;
  }
  if (n == 0) throw MissingModel("empty cohort for two_stage_emotion");
  if (size_out) *size_out = n;
  return sum / double(n);
}

}  // namespace detail

// Full verification in any framework variant. Accepts iff the score clears
// the threshold. forced_gender/forced_emotion are consumed only by
// kForced/kWorstCase and recorded in the trace.
inline VerifyOutcome verify(const ModelRegistry &reg,
                            const FeatureSequence &seq,
                            const std::string &claimed, double threshold,
                            VerifyMode mode, const CascadeConfig &cfg = {},
                            std::optional<Gender> forced_gender = std::nullopt,
                            std::optional<std::string> forced_emotion =
                                std::nullopt,
                            ScoreCache *shared_cache = nullptr) {
  if (!reg.is_claimant(claimed))
    throw UnknownClaimant("'" + claimed + "' is not an enrolled claimant");
  ScoreCache local(seq);
  ScoreCache &cache = shared_cache ? *shared_cache : local;

  VerifyOutcome out;
  out.mode = mode;
  switch (mode) {
    case VerifyMode::kThreeStage: {
      StageDecision g = identify_gender(reg, cache);
      Gender g_star = gender_from_string(g.chosen);
      StageDecision e = identify_emotion(reg, g_star, cache);
      out.score = verification_score(reg, claimed, g_star, e.chosen, cache, cfg);
      out.score.trace.gender = g;
      out.score.trace.emotion = e;
      break;
    }
    case VerifyMode::kForced:
    case VerifyMode::kWorstCase: {
      if (!forced_gender || !forced_emotion)
        throw ConfigInvalid("forced mode needs both labels");
      out.score = verification_score(reg, claimed, *forced_gender,
                                     *forced_emotion, cache, cfg);
      out.score.trace.forced_gender = to_string(*forced_gender);
      out.score.trace.forced_emotion = *forced_emotion;
      break;
    }
    case VerifyMode::kTwoStageGender: {
      StageDecision g = identify_gender(reg, cache);
      Gender g_star = gender_from_string(g.chosen);
      out.score.trace.gender = g;
      out.score.target_term =
          cache.score(reg.gender_pooled_speaker_model(claimed));
      int n = 0;
      out.score.wrong_gender_term = detail::claimant_cohort_mean(
          reg, claimed, g_star, cache, &n, "two_stage_gender");
      out.score.wrong_emotion_term = 0.0;
      out.score.b_used = n;
      out.score.lambda = out.score.target_term - out.score.wrong_gender_term;
      break;
    }
    case VerifyMode::kTwoStageEmotion: {
      StageDecision e = identify_emotion_pooled(reg, cache);
      out.score.trace.emotion = e;
      Gender enrolled = reg.gender_of_claimant(claimed);
      out.score.target_term =
          cache.score(reg.speaker_model(enrolled, e.chosen, claimed));
      int n = 0;
      out.score.wrong_emotion_term = detail::emotion_claimant_cohort_mean(
          reg, claimed, e.chosen, cache, &n);
      out.score.wrong_gender_term = 0.0;
      out.score.b_used = n;
      out.score.lambda = out.score.target_term - out.score.wrong_emotion_term;
      break;
    }
    case VerifyMode::kOneStage: {
      out.score.target_term = cache.score(reg.pooled_speaker_model(claimed));
      int n = 0;
      out.score.wrong_gender_term = detail::claimant_cohort_mean(
          reg, claimed, std::nullopt, cache, &n, "one_stage");
      out.score.wrong_emotion_term = 0.0;
      out.score.b_used = n;
      out.score.lambda = out.score.target_term - out.score.wrong_gender_term;
      break;
    }
  }
  out.accept = out.score.lambda >= threshold;
  return out;
}

}  // namespace casv

#endif  // CASV_CASCADE_HPP
