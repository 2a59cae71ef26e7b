// casv/config.hpp

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

#ifndef CASV_CONFIG_HPP
#define CASV_CONFIG_HPP

#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "casv/eval.hpp"
#include "casv/synth.hpp"

namespace casv {

// Layered key-value configuration: built-in defaults, then a profile file,
// then --set overrides. Every key of the resolved tree is echoed back out,
// so two runs with identical echoes are identical runs.
struct RunConfig {
  std::uint64_t seed = 1;
  int jobs = 1;
  std::string corpus_name = "synthetic";

  FrontendConfig frontend;
  TrainConfig train;
  SynthSpec synth;
  CascadeConfig cascade;

  std::vector<VerifyMode> eval_modes = {
      VerifyMode::kOneStage, VerifyMode::kTwoStageGender,
      VerifyMode::kTwoStageEmotion, VerifyMode::kThreeStage,
      VerifyMode::kWorstCase};
  bool eval_cross_claimant_trials = false;
  bool eval_assert_ordering = false;
  double eval_ordering_slack_pp = 1.0;
  double eval_worst_case_band_pp = 3.0;

  void apply(const std::string &key, const std::string &raw_value);
  std::string echo() const;

  EvalOptions eval_options(const std::string &cache_dir) const {
    EvalOptions o;
    o.frontend = frontend;
    o.cascade = cascade;
    o.modes = eval_modes;
    o.cross_claimant_trials = eval_cross_claimant_trials;
    o.jobs = jobs;
    o.cache_dir = cache_dir;
    return o;
  }

  SynthSpec synth_spec() const {
    SynthSpec s = synth;
    s.rng_seed = seed;  // all randomness flows from the one top-level seed
    return s;
  }
};

namespace detail {

inline bool parse_bool(const std::string &v, const std::string &key) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigInvalid("bad boolean '" + v + "' for " + key);
}

inline std::vector<std::string> parse_list(const std::string &v) {
  std::vector<std::string> out;
  for (auto &item : split(v, ',')) {
    std::string t = trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

}  // namespace detail

inline void RunConfig::apply(const std::string &key, const std::string &raw) {
  std::string v = trim(raw);
  auto as_d = [&] { return parse_double(v); };
  auto as_i = [&] { return int(parse_long(v)); };
  auto as_b = [&] { return detail::parse_bool(v, key); };

  if (key == "seed") { seed = std::uint64_t(parse_long(v)); return; }
  if (key == "jobs") { jobs = as_i(); return; }
  if (key == "corpus_name") { corpus_name = v; return; }

  if (key == "frontend.preemphasis_alpha") { frontend.preemphasis_alpha = as_d(); return; }
  if (key == "frontend.frame_ms") { frontend.frame_ms = as_d(); return; }
  if (key == "frontend.overlap_ms") { frontend.overlap_ms = as_d(); return; }
  if (key == "frontend.window") { frontend.window = window_from_string(v); return; }
  if (key == "frontend.n_fft") { frontend.n_fft = as_i(); return; }
  if (key == "frontend.n_mel_filters") { frontend.n_mel_filters = as_i(); return; }
  if (key == "frontend.n_ceps") { frontend.n_ceps = as_i(); return; }
  if (key == "frontend.fmin_hz") { frontend.fmin_hz = as_d(); return; }
  if (key == "frontend.fmax_hz") { frontend.fmax_hz = as_d(); return; }
  if (key == "frontend.log_floor") { frontend.log_floor = as_d(); return; }
  if (key == "frontend.apply_cmn") { frontend.apply_cmn = as_b(); return; }
  if (key == "frontend.add_deltas") { frontend.add_deltas = as_b(); return; }
  if (key == "frontend.add_delta_deltas") { frontend.add_delta_deltas = as_b(); return; }

  if (key == "train.n_states") { train.n_states = as_i(); return; }
  if (key == "train.n_mixtures") { train.n_mixtures = as_i(); return; }
  if (key == "train.topology") { train.topology = topology_from_string(v); return; }
  if (key == "train.max_iters") { train.max_iters = as_i(); return; }
  if (key == "train.loglik_rel_tol") { train.loglik_rel_tol = as_d(); return; }
  if (key == "train.variance_floor") { train.variance_floor = as_d(); return; }
  if (key == "train.kmeans_restarts") { train.kmeans_restarts = as_i(); return; }

  if (key == "synth.n_speakers_per_gender") { synth.n_speakers_per_gender = as_i(); return; }
  if (key == "synth.n_speakers_male") { synth.n_speakers_male = as_i(); return; }
  if (key == "synth.n_speakers_female") { synth.n_speakers_female = as_i(); return; }
  if (key == "synth.emotion_set") { synth.emotion_set = detail::parse_list(v); return; }
  if (key == "synth.n_sentences_train") { synth.n_sentences_train = as_i(); return; }
  if (key == "synth.n_sentences_test") { synth.n_sentences_test = as_i(); return; }
  if (key == "synth.n_repetitions") { synth.n_repetitions = as_i(); return; }
  if (key == "synth.utterance_seconds") { synth.utterance_seconds = as_d(); return; }
  if (key == "synth.sample_rate_hz") { synth.sample_rate_hz = as_i(); return; }
  if (key == "synth.speaker_formant_spread_hz") { synth.speaker_formant_spread_hz = as_d(); return; }
  if (key == "synth.emotion_f0_scale_lo") { synth.emotion_f0_scale_lo = as_d(); return; }
  if (key == "synth.emotion_f0_scale_hi") { synth.emotion_f0_scale_hi = as_d(); return; }
  if (key == "synth.emotion_rate_lo") { synth.emotion_rate_lo = as_d(); return; }
  if (key == "synth.emotion_rate_hi") { synth.emotion_rate_hi = as_d(); return; }
  if (key == "synth.noise_snr_db") { synth.noise_snr_db = as_d(); return; }
  if (key == "synth.male_f0_hz") { synth.male_f0_hz = as_d(); return; }
  if (key == "synth.female_f0_hz") { synth.female_f0_hz = as_d(); return; }
  if (key == "synth.speaker_f0_spread_hz") { synth.speaker_f0_spread_hz = as_d(); return; }
  if (key == "synth.claimants_per_gender") { synth.claimants_per_gender = as_i(); return; }
  if (key == "synth.write_audio") { synth.write_audio = as_b(); return; }
  if (key.rfind("synth.emotion.", 0) == 0) {
    std::string label = key.substr(14);
    auto parts = detail::parse_list(v);
    if (label.empty() || (parts.size() != 5 && parts.size() != 7))
      throw ConfigInvalid(key + " wants 5 or 7 comma-separated values "
                          "(f0_scale,rate_scale,breath_db,bandwidth_scale,"
                          "instability[,formant_scale,pulse_width])");
    EmotionProfile p;
    p.f0_scale = parse_double(parts[0]);
    p.rate_scale = parse_double(parts[1]);
    p.breath_delta_db = parse_double(parts[2]);
    p.bandwidth_scale = parse_double(parts[3]);
    p.instability = parse_double(parts[4]);
    if (parts.size() == 7) {
      p.formant_scale = parse_double(parts[5]);
      p.pulse_width = parse_double(parts[6]);
    }
    synth.emotion_overrides[label] = p;
    return;
  }

  if (key == "cascade.eq5_cohort") {
    if (v == "own_emotions") cascade.eq5_cohort = Eq5Cohort::kOwnEmotions;
    else if (v == "gender_emotion_models")
      cascade.eq5_cohort = Eq5Cohort::kGenderEmotionModels;
    else throw ConfigInvalid("bad cascade.eq5_cohort '" + v + "'");
    return;
  }
  if (key == "cascade.eq6_cohort") {
    if (v == "opposite_emotion_models")
      cascade.eq6_cohort = Eq6Cohort::kOppositeEmotionModels;
    else if (v == "opposite_pooled_speakers")
      cascade.eq6_cohort = Eq6Cohort::kOppositePooledSpeakers;
    else throw ConfigInvalid("bad cascade.eq6_cohort '" + v + "'");
    return;
  }
  if (key == "cascade.eq3_variant") {
    if (v == "as_printed") cascade.eq3_variant = Eq3Variant::kAsPrinted;
    else if (v == "mean") cascade.eq3_variant = Eq3Variant::kMean;
    else throw ConfigInvalid("bad cascade.eq3_variant '" + v + "'");
    return;
  }

  if (key == "eval.modes") {
    eval_modes.clear();
    if (v == "all") {
      eval_modes = {VerifyMode::kOneStage, VerifyMode::kTwoStageGender,
                    VerifyMode::kTwoStageEmotion, VerifyMode::kThreeStage,
                    VerifyMode::kWorstCase};
    } else {
      for (const auto &m : detail::parse_list(v))
        eval_modes.push_back(verify_mode_from_string(m));
    }
    if (eval_modes.empty()) throw ConfigInvalid("eval.modes is empty");
    return;
  }
  if (key == "eval.cross_claimant_trials") { eval_cross_claimant_trials = as_b(); return; }
  if (key == "eval.assert_ordering") { eval_assert_ordering = as_b(); return; }
  if (key == "eval.ordering_slack_pp") { eval_ordering_slack_pp = as_d(); return; }
  if (key == "eval.worst_case_band_pp") { eval_worst_case_band_pp = as_d(); return; }

  throw ConfigInvalid("unknown configuration key '" + key + "'");
}

inline std::string RunConfig::echo() const {
  std::map<std::string, std::string> kv;
  kv["seed"] = std::to_string(seed);
  kv["jobs"] = std::to_string(jobs);
  kv["corpus_name"] = corpus_name;

  kv["frontend.preemphasis_alpha"] = format_double17(frontend.preemphasis_alpha);
  kv["frontend.frame_ms"] = format_double17(frontend.frame_ms);
  kv["frontend.overlap_ms"] = format_double17(frontend.overlap_ms);
  kv["frontend.window"] = to_string(frontend.window);
  kv["frontend.n_fft"] = std::to_string(frontend.n_fft);
  kv["frontend.n_mel_filters"] = std::to_string(frontend.n_mel_filters);
  kv["frontend.n_ceps"] = std::to_string(frontend.n_ceps);
  kv["frontend.fmin_hz"] = format_double17(frontend.fmin_hz);
  kv["frontend.fmax_hz"] = format_double17(frontend.fmax_hz);
  kv["frontend.log_floor"] = format_double17(frontend.log_floor);
  kv["frontend.apply_cmn"] = frontend.apply_cmn ? "true" : "false";
  kv["frontend.add_deltas"] = frontend.add_deltas ? "true" : "false";
  kv["frontend.add_delta_deltas"] = frontend.add_delta_deltas ? "true" : "false";

  kv["train.n_states"] = std::to_string(train.n_states);
  kv["train.n_mixtures"] = std::to_string(train.n_mixtures);
  kv["train.topology"] = to_string(train.topology);
  kv["train.max_iters"] = std::to_string(train.max_iters);
  kv["train.loglik_rel_tol"] = format_double17(train.loglik_rel_tol);
  kv["train.variance_floor"] = format_double17(train.variance_floor);
  kv["train.kmeans_restarts"] = std::to_string(train.kmeans_restarts);

  kv["synth.n_speakers_per_gender"] = std::to_string(synth.n_speakers_per_gender);
  kv["synth.n_speakers_male"] = std::to_string(synth.n_speakers_male);
  kv["synth.n_speakers_female"] = std::to_string(synth.n_speakers_female);
  std::string emos;
  for (const auto &e : synth.emotion_set) emos += (emos.empty() ? "" : ",") + e;
  kv["synth.emotion_set"] = emos;
  kv["synth.n_sentences_train"] = std::to_string(synth.n_sentences_train);
  kv["synth.n_sentences_test"] = std::to_string(synth.n_sentences_test);
  kv["synth.n_repetitions"] = std::to_string(synth.n_repetitions);
  kv["synth.utterance_seconds"] = format_double17(synth.utterance_seconds);
  kv["synth.sample_rate_hz"] = std::to_string(synth.sample_rate_hz);
  kv["synth.speaker_formant_spread_hz"] = format_double17(synth.speaker_formant_spread_hz);
  kv["synth.emotion_f0_scale_lo"] = format_double17(synth.emotion_f0_scale_lo);
  kv["synth.emotion_f0_scale_hi"] = format_double17(synth.emotion_f0_scale_hi);
  kv["synth.emotion_rate_lo"] = format_double17(synth.emotion_rate_lo);
  kv["synth.emotion_rate_hi"] = format_double17(synth.emotion_rate_hi);
  kv["synth.noise_snr_db"] = format_double17(synth.noise_snr_db);
  kv["synth.male_f0_hz"] = format_double17(synth.male_f0_hz);
  kv["synth.female_f0_hz"] = format_double17(synth.female_f0_hz);
  kv["synth.speaker_f0_spread_hz"] = format_double17(synth.speaker_f0_spread_hz);
  kv["synth.claimants_per_gender"] = std::to_string(synth.claimants_per_gender);
  kv["synth.write_audio"] = synth.write_audio ? "true" : "false";
  for (const auto &[label, p] : synth.emotion_overrides)
    kv["synth.emotion." + label] =
        format_double17(p.f0_scale) + "," + format_double17(p.rate_scale) +
        "," + format_double17(p.breath_delta_db) + "," +
        format_double17(p.bandwidth_scale) + "," +
        format_double17(p.instability) + "," +
        format_double17(p.formant_scale) + "," +
        format_double17(p.pulse_width);

  kv["cascade.eq5_cohort"] =
      cascade.eq5_cohort == Eq5Cohort::kOwnEmotions ? "own_emotions"
                                                    : "gender_emotion_models";
  kv["cascade.eq6_cohort"] =
      cascade.eq6_cohort == Eq6Cohort::kOppositeEmotionModels
          ? "opposite_emotion_models"
          : "opposite_pooled_speakers";
  kv["cascade.eq3_variant"] =
      cascade.eq3_variant == Eq3Variant::kAsPrinted ? "as_printed" : "mean";

  std::string modes;
  for (auto m : eval_modes) modes += (modes.empty() ? "" : ",") + to_string(m);
  kv["eval.modes"] = modes;
  kv["eval.cross_claimant_trials"] = eval_cross_claimant_trials ? "true" : "false";
  kv["eval.assert_ordering"] = eval_assert_ordering ? "true" : "false";
  kv["eval.ordering_slack_pp"] = format_double17(eval_ordering_slack_pp);
  kv["eval.worst_case_band_pp"] = format_double17(eval_worst_case_band_pp);

  std::string out;
  for (const auto &[k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

// Reads one config file into ordered (key, value) pairs. Lines are
// `key = value`; '#' starts a comment; blank lines are skipped.
inline std::vector<std::pair<std::string, std::string>> read_config_file(
    const std::string &path) {
  std::istringstream in(read_text_file(path));
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigInvalid(path + ":" + std::to_string(lineno) +
                          ": expected 'key = value'");
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

// key=value as given on the command line (--set).
inline std::pair<std::string, std::string> parse_set_override(
    const std::string &arg) {
  auto eq = arg.find('=');
  if (eq == std::string::npos)
    throw ConfigInvalid("--set wants key=value, got '" + arg + "'");
  return {trim(arg.substr(0, eq)), trim(arg.substr(eq + 1))};
}

// Profile lookup: an explicit path wins; otherwise <dir>/<name>.cfg for the
// first directory that has it (CASCADE_VERIFY_PROFILE_DIR, then the
// built-in profile directory the binary was configured with).
inline std::string resolve_profile(const std::string &name_or_path,
                                   const std::string &builtin_dir) {
  namespace fs = std::filesystem;
  if (fs::exists(name_or_path)) return name_or_path;
  std::vector<std::string> dirs;
  if (const char *env = std::getenv("CASCADE_VERIFY_PROFILE_DIR"))
    dirs.push_back(env);
  if (!builtin_dir.empty()) dirs.push_back(builtin_dir);
  for (const auto &d : dirs) {
    fs::path p = fs::path(d) / (name_or_path + ".cfg");
    if (fs::exists(p)) return p.string();
  }
  throw ConfigInvalid("profile '" + name_or_path + "' not found");
}

inline RunConfig load_run_config(
    const std::vector<std::string> &profile_paths,
    const std::vector<std::string> &set_overrides) {
  RunConfig cfg;
  for (const auto &p : profile_paths)
    for (const auto &[k, v] : read_config_file(p)) cfg.apply(k, v);
  for (const auto &s : set_overrides) {
    auto [k, v] = parse_set_override(s);
    cfg.apply(k, v);
  }
  return cfg;
}

}  // namespace casv

#endif  // CASV_CONFIG_HPP
