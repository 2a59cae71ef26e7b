// casv/eval.hpp

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

#ifndef CASV_EVAL_HPP
#define CASV_EVAL_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "casv/cascade.hpp"

namespace casv {

// One verification trial outcome: the score population EER is computed over.
struct TrialScore {
  double score = 0.0;
  bool is_target = false;
  std::string emotion_true;
  std::string gender_true;
  std::string mode;
};

struct EerResult {
  double eer_percent = 0.0;
  double threshold = 0.0;
};

struct DetPoint {
  double far = 0.0;
  double frr = 0.0;
  double threshold = 0.0;
};

namespace detail {

// Operating points swept at score midpoints (plus one point below the
// minimum and one above the maximum). FAR(t) = fraction of non-targets with
// score >= t; FRR(t) = fraction of targets with score < t.
inline std::vector<DetPoint> operating_points(
    const std::vector<double> &targets, const std::vector<double> &nontargets) {
  std::vector<double> all;
  all.reserve(targets.size() + nontargets.size());
  for (double s : targets) all.push_back(s);
  for (double s : nontargets) all.push_back(s);
  for (double s : all)
    if (!std::isfinite(s))
      throw DegenerateTrialSet("non-finite trial score");
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());

  std::vector<double> thresholds;
  thresholds.push_back(all.front() - 1.0);
  for (std::size_t i = 0; i + 1 < all.size(); ++i)
    thresholds.push_back(0.5 * (all[i] + all[i + 1]));
  thresholds.push_back(all.back() + 1.0);

  std::vector<double> tar = targets, non = nontargets;
  std::sort(tar.begin(), tar.end());
  std::sort(non.begin(), non.end());

  std::vector<DetPoint> pts;
  pts.reserve(thresholds.size());
  for (double th : thresholds) {
    auto below_tar = std::lower_bound(tar.begin(), tar.end(), th) - tar.begin();
    auto below_non = std::lower_bound(non.begin(), non.end(), th) - non.begin();
    DetPoint p;
    p.threshold = th;
    p.frr = double(below_tar) / double(tar.size());
    p.far = double(non.size() - below_non) / double(non.size());
    pts.push_back(p);
  }
  return pts;
}

inline void split_trials(const std::vector<TrialScore> &trials,
                         std::vector<double> &targets,
                         std::vector<double> &nontargets) {
  for (const auto &t : trials)
    (t.is_target ? targets : nontargets).push_back(t.score);
  if (targets.empty() || nontargets.empty())
    throw DegenerateTrialSet("need at least one target and one non-target");
}

}  // namespace detail

// Equal error rate with linear interpolation between the bracketing
// operating points of the threshold sweep.
inline EerResult compute_eer(const std::vector<double> &targets,
                             const std::vector<double> &nontargets) {
  if (targets.empty() || nontargets.empty())
    throw DegenerateTrialSet("need at least one target and one non-target");
  auto pts = detail::operating_points(targets, nontargets);
  double prev_d = pts[0].far - pts[0].frr;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    double d = pts[i].far - pts[i].frr;
    if (d <= 0.0) {
      EerResult r;
      if (prev_d == d) {
        r.eer_percent = 100.0 * pts[i - 1].far;
        r.threshold = pts[i - 1].threshold;
      } else {
        double a = prev_d / (prev_d - d);
        r.eer_percent =
            100.0 * (pts[i - 1].far + a * (pts[i].far - pts[i - 1].far));
        r.threshold = pts[i - 1].threshold +
                      a * (pts[i].threshold - pts[i - 1].threshold);
      }
      return r;
    }
    prev_d = d;
  }
  // FAR never fell to FRR: all thresholds accept everything (degenerate,
  // but only reachable with pathological inputs).
  return {100.0 * pts.back().far, pts.back().threshold};
}

inline EerResult compute_eer(const std::vector<TrialScore> &trials) {
  std::vector<double> targets, nontargets;
  detail::split_trials(trials, targets, nontargets);
  return compute_eer(targets, nontargets);
}

// DET curve: one point per distinct threshold, endpoints (FAR=1, FRR=0) and
// (FAR=0, FRR=1) included.
inline std::vector<DetPoint> det_curve(const std::vector<TrialScore> &trials) {
  std::vector<double> targets, nontargets;
  detail::split_trials(trials, targets, nontargets);
  return detail::operating_points(targets, nontargets);
}

// ---------------------------------------------------------------------------
// Identification confusion matrices (stage 1 and stage 2).
// ---------------------------------------------------------------------------

struct StageOutcome {
  std::string gender_true;
  std::string gender_decided;
  std::string emotion_true;
  std::string emotion_decided;
};

struct ConfusionMatrices {
  std::vector<std::string> emotion_set;
  // gender_counts[true][decided], order {male, female}.
  std::array<std::array<std::size_t, 2>, 2> gender_counts{};
  // Per true gender: m x m counts, rows = true emotion, cols = decided.
  std::map<std::string, Matrix> emotion_counts;

  double gender_accuracy() const {
    std::size_t correct = gender_counts[0][0] + gender_counts[1][1];
    std::size_t total = gender_counts[0][0] + gender_counts[0][1] +
                        gender_counts[1][0] + gender_counts[1][1];
    return total ? double(correct) / double(total) : 0.0;
  }

  // Recall of one emotion pooled over both genders.
  double emotion_recall(const std::string &emotion) const {
    int idx = -1;
    for (std::size_t i = 0; i < emotion_set.size(); ++i)
      if (emotion_set[i] == emotion) idx = int(i);
    if (idx < 0) return 0.0;
    double correct = 0.0, total = 0.0;
    for (const auto &[g, mat] : emotion_counts) {
      correct += mat.at(idx, idx);
      for (std::size_t j = 0; j < mat.cols; ++j) total += mat.at(idx, j);
    }
    return total > 0.0 ? correct / total : 0.0;
  }

  double average_emotion_accuracy() const {
    if (emotion_set.empty()) return 0.0;
    double s = 0.0;
    for (const auto &e : emotion_set) s += emotion_recall(e);
    return s / double(emotion_set.size());
  }
};

inline ConfusionMatrices confusion_matrices(
    const std::vector<StageOutcome> &outcomes,
    const std::vector<std::string> &emotion_set) {
  ConfusionMatrices c;
  c.emotion_set = emotion_set;
  std::size_t m = emotion_set.size();
  c.emotion_counts["male"] = Matrix(m, m);
  c.emotion_counts["female"] = Matrix(m, m);
  auto emo_idx = [&](const std::string &e) {
    for (std::size_t i = 0; i < m; ++i)
      if (emotion_set[i] == e) return int(i);
    return -1;
  };
  for (const auto &o : outcomes) {
    int gt = o.gender_true == "male" ? 0 : 1;
    int gd = o.gender_decided == "male" ? 0 : 1;
    c.gender_counts[gt][gd]++;
    int et = emo_idx(o.emotion_true), ed = emo_idx(o.emotion_decided);
    if (et >= 0 && ed >= 0) c.emotion_counts[o.gender_true].at(et, ed) += 1.0;
  }
  return c;
}

// ---------------------------------------------------------------------------
// Experiment suite.
// ---------------------------------------------------------------------------

struct TrialRecord {
  std::string utterance;
  std::string claimed;
  std::string true_speaker;
  std::string gender_true;
  std::string gender_decided;  // "-" when the mode has no gender stage
  std::string emotion_true;
  std::string emotion_decided;  // "-" when the mode has no emotion stage
  std::string mode;
  double lambda = 0.0;
  double target_term = 0.0;
  double wrong_emotion_term = 0.0;
  double wrong_gender_term = 0.0;
  bool is_target = false;
  bool accept = false;
};

struct ModeReport {
  std::vector<std::pair<std::string, EerResult>> per_emotion_eer;
  EerResult pooled;
  double average_eer_percent = 0.0;  // mean of the per-emotion EERs
  std::vector<DetPoint> det;
};

struct EvalReport {
  std::vector<std::string> emotion_set;
  ConfusionMatrices confusion;
  std::vector<std::pair<VerifyMode, ModeReport>> modes;
  std::vector<TrialRecord> trials;

  const ModeReport *mode_report(VerifyMode m) const {
    for (const auto &[mode, rep] : modes)
      if (mode == m) return &rep;
    return nullptr;
  }
};

struct EvalOptions {
  FrontendConfig frontend;
  CascadeConfig cascade;
  std::vector<VerifyMode> modes = {
      VerifyMode::kOneStage, VerifyMode::kTwoStageGender,
      VerifyMode::kTwoStageEmotion, VerifyMode::kThreeStage,
      VerifyMode::kWorstCase};
  // Off by default: with it on, claimants also claim other same-gender
  // claimants, which grows the trial count quadratically.
  bool cross_claimant_trials = false;
  int jobs = 1;
  std::string cache_dir;
};

namespace detail {

inline std::string next_emotion_cyclic(const std::vector<std::string> &set,
                                       const std::string &current) {
  for (std::size_t i = 0; i < set.size(); ++i)
    if (set[i] == current) return set[(i + 1) % set.size()];
  return set.front();
}

}  // namespace detail

// Runs every framework variant over the manifest's test split: targets are
// claimants claiming themselves, non-targets are imposters claiming each
// same-gender claimant (plus cross-claimant claims when enabled). Returns
// per-emotion and average EERs per mode, stage confusion matrices, and the
// full trial table.
inline EvalReport run_experiment_suite(const ModelRegistry &reg,
                                       const DatasetManifest &manifest,
                                       const EvalOptions &opts) {
  struct UttWork {
    const ManifestEntry *entry = nullptr;
    std::vector<std::string> claims;
    StageOutcome outcome;
    std::vector<TrialRecord> records;
  };

  std::vector<UttWork> work;
  for (const auto &e : manifest.entries) {
    if (e.split != Split::kTest) continue;
    UttWork w;
    w.entry = &e;
    if (reg.is_claimant(e.speaker_id)) {
      w.claims.push_back(e.speaker_id);
      if (opts.cross_claimant_trials)
        for (const auto &c : reg.claimants_of_gender(e.gender))
          if (c != e.speaker_id) w.claims.push_back(c);
    } else {
      for (const auto &c : reg.claimants_of_gender(e.gender))
        w.claims.push_back(c);
    }
    work.push_back(std::move(w));
  }
  if (work.empty()) throw DegenerateTrialSet("manifest has no test split");

  parallel_for(work.size(), opts.jobs, [&](std::size_t i) {
    UttWork &w = work[i];
    const ManifestEntry &e = *w.entry;
    FeatureSequence seq = extract_features_cached(
        manifest.resolve_path(e), opts.frontend, opts.cache_dir);
    ScoreCache cache(seq);

    // Stage decisions are claim-independent; compute once per utterance.
    StageDecision g_dec = identify_gender(reg, cache);
    Gender g_star = gender_from_string(g_dec.chosen);
    StageDecision e_dec = identify_emotion(reg, g_star, cache);
    w.outcome = {to_string(e.gender), g_dec.chosen, e.emotion, e_dec.chosen};

    Gender worst_gender = opposite(e.gender);
    std::string worst_emotion =
        detail::next_emotion_cyclic(reg.emotion_set, e.emotion);

    for (const auto &claimed : w.claims) {
      for (VerifyMode mode : opts.modes) {
        VerifyOutcome out;
        switch (mode) {
          case VerifyMode::kThreeStage:
          case VerifyMode::kTwoStageGender:
          case VerifyMode::kTwoStageEmotion:
          case VerifyMode::kOneStage:
            out = verify(reg, seq, claimed, 0.0, mode, opts.cascade,
                         std::nullopt, std::nullopt, &cache);
            break;
          case VerifyMode::kWorstCase:
          case VerifyMode::kForced:
            out = verify(reg, seq, claimed, 0.0, VerifyMode::kWorstCase,
                         opts.cascade, worst_gender, worst_emotion, &cache);
            break;
        }
        TrialRecord r;
        r.utterance = e.path;
        r.claimed = claimed;
        r.true_speaker = e.speaker_id;
        r.gender_true = to_string(e.gender);
        r.emotion_true = e.emotion;
        r.mode = to_string(mode);
        const StageTrace &tr = out.score.trace;
        r.gender_decided = tr.gender     ? tr.gender->chosen
                           : tr.forced_gender ? *tr.forced_gender
                                              : "-";
        r.emotion_decided = tr.emotion    ? tr.emotion->chosen
                            : tr.forced_emotion ? *tr.forced_emotion
                                                : "-";
        r.lambda = out.score.lambda;
        r.target_term = out.score.target_term;
        r.wrong_emotion_term = out.score.wrong_emotion_term;
        r.wrong_gender_term = out.score.wrong_gender_term;
        r.is_target = claimed == e.speaker_id;
        w.records.push_back(std::move(r));
      }
    }
  });

  EvalReport report;
  report.emotion_set = reg.emotion_set;
  std::vector<StageOutcome> outcomes;
  for (const auto &w : work) outcomes.push_back(w.outcome);
  report.confusion = confusion_matrices(outcomes, reg.emotion_set);
  for (const auto &w : work)
    report.trials.insert(report.trials.end(), w.records.begin(),
                         w.records.end());

  for (VerifyMode mode : opts.modes) {
    std::string mode_name = to_string(mode);
    std::vector<TrialScore> mode_trials;
    for (const auto &r : report.trials)
      if (r.mode == mode_name)
        mode_trials.push_back(
            {r.lambda, r.is_target, r.emotion_true, r.gender_true, r.mode});

    ModeReport mr;
    mr.pooled = compute_eer(mode_trials);
    mr.det = det_curve(mode_trials);
    double sum = 0.0;
    for (const auto &emo : reg.emotion_set) {
      std::vector<TrialScore> sub;
      for (const auto &t : mode_trials)
        if (t.emotion_true == emo) sub.push_back(t);
      EerResult er = compute_eer(sub);
      mr.per_emotion_eer.emplace_back(emo, er);
      sum += er.eer_percent;
    }
    mr.average_eer_percent = sum / double(reg.emotion_set.size());
    report.modes.emplace_back(mode, mr);
  }

  // Accept flags at each mode's pooled-EER threshold.
  std::map<std::string, double> mode_threshold;
  for (const auto &[mode, mr] : report.modes)
    mode_threshold[to_string(mode)] = mr.pooled.threshold;
  for (auto &r : report.trials) r.accept = r.lambda >= mode_threshold[r.mode];

  return report;
}

// EER ordering property of the framework comparison (the acceptance gate's
// 5c/5d). Returns human-readable violations; empty means the property holds.
inline std::vector<std::string> check_eer_ordering(const EvalReport &report,
                                                   double one_stage_slack_pp,
                                                   double worst_case_band_pp) {
  std::vector<std::string> v;
  auto get = [&](VerifyMode m) -> std::optional<double> {
    const ModeReport *r = report.mode_report(m);
    if (!r) return std::nullopt;
    return r->average_eer_percent;
  };
  auto three = get(VerifyMode::kThreeStage);
  auto two_g = get(VerifyMode::kTwoStageGender);
  auto two_e = get(VerifyMode::kTwoStageEmotion);
  auto one = get(VerifyMode::kOneStage);
  auto worst = get(VerifyMode::kWorstCase);
  char buf[160];
  if (three && two_g && *three > *two_g) {
    std::snprintf(buf, sizeof(buf),
                  "three_stage %.3f%% > two_stage_gender %.3f%%", *three,
                  *two_g);
    v.push_back(buf);
  }
  if (three && two_e && *three > *two_e) {
    std::snprintf(buf, sizeof(buf),
                  "three_stage %.3f%% > two_stage_emotion %.3f%%", *three,
                  *two_e);
    v.push_back(buf);
  }
  if (two_g && one && *two_g > *one + one_stage_slack_pp) {
    std::snprintf(buf, sizeof(buf),
                  "two_stage_gender %.3f%% > one_stage %.3f%% + %.1fpp",
                  *two_g, *one, one_stage_slack_pp);
    v.push_back(buf);
  }
  if (two_e && one && *two_e > *one + one_stage_slack_pp) {
    std::snprintf(buf, sizeof(buf),
                  "two_stage_emotion %.3f%% > one_stage %.3f%% + %.1fpp",
                  *two_e, *one, one_stage_slack_pp);
    v.push_back(buf);
  }
  if (worst && three && *worst < *three) {
    std::snprintf(buf, sizeof(buf), "worst_case %.3f%% < three_stage %.3f%%",
                  *worst, *three);
    v.push_back(buf);
  }
  if (worst && one && std::fabs(*worst - *one) > worst_case_band_pp) {
    std::snprintf(buf, sizeof(buf),
                  "worst_case %.3f%% not within %.1fpp of one_stage %.3f%%",
                  *worst, worst_case_band_pp, *one);
    v.push_back(buf);
  }
  return v;
}

// ---------------------------------------------------------------------------
// Report rendering: aligned text (Tables 1-2 layout) and tidy CSV.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string pad(const std::string &s, std::size_t w) {
  return s.size() >= w ? s : s + std::string(w - s.size(), ' ');
}

}  // namespace detail

inline std::string render_report_text(const EvalReport &rep,
                                      const std::string &corpus_name) {
  std::ostringstream out;
  const auto &c = rep.confusion;

  out << "== Stage 1: gender identification (" << corpus_name << ") ==\n";
  out << detail::pad("true \\ decided", 16) << detail::pad("male", 10)
      << detail::pad("female", 10) << "\n";
  const char *gnames[2] = {"male", "female"};
  for (int i = 0; i < 2; ++i) {
    out << detail::pad(gnames[i], 16);
    for (int j = 0; j < 2; ++j)
      out << detail::pad(std::to_string(c.gender_counts[i][j]), 10);
    out << "\n";
  }
  out << "gender identification accuracy: "
      << detail::pct(100.0 * c.gender_accuracy()) << "%\n\n";

  out << "== Stage 2: gender-dependent emotion identification ==\n";
  out << detail::pad("emotion", 16) << detail::pad("recall% (" + corpus_name + ")", 24)
      << "\n";
  for (const auto &e : rep.emotion_set)
    out << detail::pad(e, 16)
        << detail::pct(100.0 * c.emotion_recall(e)) << "\n";
  out << detail::pad("average", 16)
      << detail::pct(100.0 * c.average_emotion_accuracy()) << "\n\n";

  const ModeReport *three = rep.mode_report(VerifyMode::kThreeStage);
  if (three) {
    out << "== Stage 3: percentage EER, three-stage framework ==\n";
    out << detail::pad("emotion", 16) << detail::pad("EER% (" + corpus_name + ")", 20)
        << detail::pad("threshold", 14) << "\n";
    for (const auto &[emo, er] : three->per_emotion_eer)
      out << detail::pad(emo, 16) << detail::pad(detail::pct(er.eer_percent), 20)
          << format_double(er.threshold, 6) << "\n";
    out << detail::pad("average", 16) << detail::pct(three->average_eer_percent)
        << "\n\n";
  }

  out << "== Framework comparison (average % EER over emotions) ==\n";
  out << detail::pad("mode", 20) << detail::pad("avg EER%", 12)
      << detail::pad("pooled EER%", 14) << detail::pad("pooled threshold", 18)
      << "\n";
  for (const auto &[mode, mr] : rep.modes)
    out << detail::pad(to_string(mode), 20)
        << detail::pad(detail::pct(mr.average_eer_percent), 12)
        << detail::pad(detail::pct(mr.pooled.eer_percent), 14)
        << format_double(mr.pooled.threshold, 6) << "\n";
  return out.str();
}

inline std::string render_report_csv(const EvalReport &rep) {
  std::ostringstream out;
  out << "mode,emotion,metric,value\n";
  const auto &c = rep.confusion;
  out << "-,-,gender_accuracy," << format_double(c.gender_accuracy(), 10)
      << "\n";
  for (const auto &e : rep.emotion_set)
    out << "-," << e << ",emotion_recall,"
        << format_double(c.emotion_recall(e), 10) << "\n";
  out << "-,-,average_emotion_accuracy,"
      << format_double(c.average_emotion_accuracy(), 10) << "\n";
  for (const auto &[mode, mr] : rep.modes) {
    std::string m = to_string(mode);
    for (const auto &[emo, er] : mr.per_emotion_eer) {
      out << m << "," << emo << ",eer_percent,"
          << format_double(er.eer_percent, 10) << "\n";
      out << m << "," << emo << ",eer_threshold,"
          << format_double(er.threshold, 10) << "\n";
    }
    out << m << ",-,average_eer_percent,"
        << format_double(mr.average_eer_percent, 10) << "\n";
    out << m << ",-,pooled_eer_percent,"
        << format_double(mr.pooled.eer_percent, 10) << "\n";
    out << m << ",-,pooled_eer_threshold,"
        << format_double(mr.pooled.threshold, 10) << "\n";
  }
  return out.str();
}

inline std::string render_det_csv(const ModeReport &mr) {
  std::ostringstream out;
  out << "far,frr,threshold\n";
  for (const auto &p : mr.det)
    out << format_double(p.far, 10) << "," << format_double(p.frr, 10) << ","
        << format_double(p.threshold, 10) << "\n";
  return out.str();
}

inline const char *kTrialsHeader =
    "utterance,claimed,true_speaker,gender_true,gender_decided,emotion_true,"
    "emotion_decided,mode,lambda,target_term,wrong_emotion_term,"
    "wrong_gender_term,accept";

inline std::string render_trials_csv(const std::vector<TrialRecord> &trials) {
  std::ostringstream out;
  out << kTrialsHeader << "\n";
  for (const auto &r : trials)
    out << r.utterance << "," << r.claimed << "," << r.true_speaker << ","
        << r.gender_true << "," << r.gender_decided << "," << r.emotion_true
        << "," << r.emotion_decided << "," << r.mode << ","
        << format_double(r.lambda, 12) << "," << format_double(r.target_term, 12)
        << "," << format_double(r.wrong_emotion_term, 12) << ","
        << format_double(r.wrong_gender_term, 12) << ","
        << (r.accept ? 1 : 0) << "\n";
  return out.str();
}

inline void write_report_files(const EvalReport &rep, const std::string &dir,
                               const std::string &corpus_name) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  write_text_file((fs::path(dir) / "report.txt").string(),
                  render_report_text(rep, corpus_name));
  write_text_file((fs::path(dir) / "report.csv").string(),
                  render_report_csv(rep));
  write_text_file((fs::path(dir) / "trials.csv").string(),
                  render_trials_csv(rep.trials));
  for (const auto &[mode, mr] : rep.modes)
    write_text_file(
        (fs::path(dir) / ("det_" + to_string(mode) + ".csv")).string(),
        render_det_csv(mr));
}

}  // namespace casv

#endif  // CASV_EVAL_HPP
