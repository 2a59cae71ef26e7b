// tools/casv.cpp

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

// Command-line entry point: synth / train / evaluate / verify / report.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "casv/config.hpp"
#include "casv/eval.hpp"
#include "casv/registry.hpp"
#include "casv/synth.hpp"

namespace fs = std::filesystem;
using namespace casv;

#ifndef CASV_PROFILE_DIR
#define CASV_PROFILE_DIR ""
#endif

namespace {

std::string cache_dir_from_env() {
  const char *c = std::getenv("CASCADE_VERIFY_CACHE");
  return c ? std::string(c) : std::string();
}

RunConfig make_config(const std::vector<std::string> &profiles,
                      const std::vector<std::string> &sets,
                      std::optional<std::uint64_t> seed,
                      std::optional<int> jobs) {
  std::vector<std::string> paths;
  for (const auto &p : profiles)
    paths.push_back(resolve_profile(p, CASV_PROFILE_DIR));
  RunConfig cfg = load_run_config(paths, sets);
  if (seed) cfg.seed = *seed;
  if (jobs) cfg.jobs = *jobs;
  if (cfg.jobs <= 0) cfg.jobs = default_jobs();
  return cfg;
}

void echo_config(const RunConfig &cfg, const std::string &dir) {
  fs::create_directories(dir);
  std::string path = (fs::path(dir) / "config.resolved").string();
  write_text_file(path, cfg.echo());
  std::cout << "config echoed to " << path << "\n";
}

int cmd_synth(const RunConfig &cfg, const std::string &out_dir) {
  SynthSpec spec = cfg.synth_spec();
  DatasetManifest manifest = generate_corpus(spec, out_dir, cfg.jobs);
  echo_config(cfg, out_dir);
  CorpusSummary summary = describe_corpus(manifest);
  std::cout << summary.to_string();
  std::cout << "manifest: " << (fs::path(out_dir) / "manifest.csv").string()
            << "\n";
  return 0;
}

int cmd_train(const RunConfig &cfg, const std::string &manifest_path,
              const std::string &model_dir) {
  DatasetManifest manifest = read_manifest(manifest_path);
  ValidationReport vr = validate_manifest(manifest);
  if (!vr.ok()) {
    std::cerr << "manifest validation failed:\n" << vr.to_string();
    return 1;
  }
  cfg.frontend.validate(
      read_wav_header(manifest.resolve_path(manifest.entries.front()))
          .sample_rate);
  FeatureStore features =
      extract_corpus_features(manifest, cfg.frontend, Split::kTrain, cfg.jobs,
                              cache_dir_from_env());

  BuildOptions opts;
  opts.frontend = cfg.frontend;
  opts.train = cfg.train;
  opts.seed = cfg.seed;
  opts.jobs = cfg.jobs;
  TrainingLog log;
  ModelRegistry reg = build_registry(manifest, features, opts, &log);
  save_registry(reg, model_dir);
  write_text_file((fs::path(model_dir) / "training.log").string(),
                  log.to_string());
  echo_config(cfg, model_dir);
  std::cout << "trained " << reg.models.size() << " models into " << model_dir
            << "\n";
  return 0;
}

int cmd_evaluate(const RunConfig &cfg, const std::string &manifest_path,
                 const std::string &model_dir, const std::string &report_dir) {
  DatasetManifest manifest = read_manifest(manifest_path);
  ModelRegistry reg = load_registry(model_dir);
  if (reg.frontend_fingerprint != cfg.frontend.fingerprint()) {
    std::cerr << "frontend configuration does not match the one the registry "
                 "was trained with\n";
    return 2;
  }
  EvalReport report = run_experiment_suite(
      reg, manifest, cfg.eval_options(cache_dir_from_env()));
  write_report_files(report, report_dir, cfg.corpus_name);
  echo_config(cfg, report_dir);
  std::cout << render_report_text(report, cfg.corpus_name);

  if (cfg.eval_assert_ordering) {
    auto violations = check_eer_ordering(report, cfg.eval_ordering_slack_pp,
                                         cfg.eval_worst_case_band_pp);
    if (!violations.empty()) {
      std::cerr << "EER ordering property violated:\n";
      for (const auto &v : violations) std::cerr << "  " << v << "\n";
      return 2;
    }
    std::cout << "EER ordering property holds\n";
  }
  return 0;
}

int cmd_verify(const RunConfig &cfg, const std::string &model_dir,
               const std::string &wav_path, const std::string &claimed,
               double threshold, const std::string &mode_name,
               const std::string &forced_gender,
               const std::string &forced_emotion) {
  ModelRegistry reg = load_registry(model_dir);
  if (reg.frontend_fingerprint != cfg.frontend.fingerprint()) {
    std::cerr << "frontend configuration does not match the one the registry "
                 "was trained with\n";
    return 2;
  }
  FeatureSequence seq = extract_features(load_wav(wav_path), cfg.frontend);
  VerifyMode mode = verify_mode_from_string(mode_name);
  std::optional<Gender> fg;
  std::optional<std::string> fe;
  if (mode == VerifyMode::kForced || mode == VerifyMode::kWorstCase) {
    if (forced_gender.empty() || forced_emotion.empty()) {
      std::cerr << "forced mode needs --gender and --emotion\n";
      return 2;
    }
    fg = gender_from_string(forced_gender);
    fe = forced_emotion;
  }
  VerifyOutcome out =
      verify(reg, seq, claimed, threshold, mode, cfg.cascade, fg, fe);

  const StageTrace &tr = out.score.trace;
  if (tr.gender) {
    std::cout << "G* = " << tr.gender->chosen;
    for (const auto &[label, score] : tr.gender->scores)
      std::cout << "  [" << label << " " << format_double(score, 8) << "]";
    std::cout << (tr.gender->tie ? "  (tie)" : "") << "\n";
  } else if (tr.forced_gender) {
    std::cout << "G* = " << *tr.forced_gender << " (forced)\n";
  }
  if (tr.emotion) {
    std::cout << "E* = " << tr.emotion->chosen;
    for (const auto &[label, score] : tr.emotion->scores)
      std::cout << "  [" << label << " " << format_double(score, 8) << "]";
    std::cout << (tr.emotion->tie ? "  (tie)" : "") << "\n";
  } else if (tr.forced_emotion) {
    std::cout << "E* = " << *tr.forced_emotion << " (forced)\n";
  }
  std::cout << "lambda = " << format_double(out.score.lambda, 10)
            << "  (target " << format_double(out.score.target_term, 10)
            << ", wrong-emotion "
            << format_double(out.score.wrong_emotion_term, 10)
            << ", wrong-gender "
            << format_double(out.score.wrong_gender_term, 10) << ", B "
            << out.score.b_used << ")\n";
  std::cout << (out.accept ? "ACCEPT" : "REJECT") << "\n";
  return out.accept ? 0 : 1;
}

int cmd_report(const std::string &trials_path, const std::string &report_dir,
               const std::string &corpus_name) {
  std::istringstream in(read_text_file(trials_path));
  std::string line;
  if (!std::getline(in, line) || trim(line) != kTrialsHeader) {
    std::cerr << trials_path << ": unexpected trials header\n";
    return 1;
  }
  std::vector<TrialRecord> trials;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    auto f = split(line, ',');
    if (f.size() != 13) {
      std::cerr << trials_path << ": bad row '" << line << "'\n";
      return 1;
    }
    TrialRecord r;
    r.utterance = f[0];
    r.claimed = f[1];
    r.true_speaker = f[2];
    r.gender_true = f[3];
    r.gender_decided = f[4];
    r.emotion_true = f[5];
    r.emotion_decided = f[6];
    r.mode = f[7];
    r.lambda = parse_double(f[8]);
    r.target_term = parse_double(f[9]);
    r.wrong_emotion_term = parse_double(f[10]);
    r.wrong_gender_term = parse_double(f[11]);
    r.is_target = r.claimed == r.true_speaker;
    r.accept = f[12] == "1";
    trials.push_back(std::move(r));
  }

  EvalReport report;
  std::vector<std::string> emotions, mode_names;
  for (const auto &r : trials) {
    if (std::find(emotions.begin(), emotions.end(), r.emotion_true) ==
        emotions.end())
      emotions.push_back(r.emotion_true);
    if (std::find(mode_names.begin(), mode_names.end(), r.mode) ==
        mode_names.end())
      mode_names.push_back(r.mode);
  }
  report.emotion_set = emotions;
  report.trials = trials;

  // Stage confusion from the three-stage rows, one vote per utterance.
  std::vector<StageOutcome> outcomes;
  std::set<std::string> seen;
  for (const auto &r : trials)
    if (r.mode == "three_stage" && seen.insert(r.utterance).second)
      outcomes.push_back({r.gender_true, r.gender_decided, r.emotion_true,
                          r.emotion_decided});
  report.confusion = confusion_matrices(outcomes, emotions);

  for (const auto &mode_name : mode_names) {
    std::vector<TrialScore> mode_trials;
    for (const auto &r : trials)
      if (r.mode == mode_name)
        mode_trials.push_back(
            {r.lambda, r.is_target, r.emotion_true, r.gender_true, r.mode});
    ModeReport mr;
    mr.pooled = compute_eer(mode_trials);
    mr.det = det_curve(mode_trials);
    double sum = 0.0;
    for (const auto &emo : emotions) {
      std::vector<TrialScore> sub;
      for (const auto &t : mode_trials)
        if (t.emotion_true == emo) sub.push_back(t);
      EerResult er = compute_eer(sub);
      mr.per_emotion_eer.emplace_back(emo, er);
      sum += er.eer_percent;
    }
    mr.average_eer_percent = sum / double(emotions.size());
    report.modes.emplace_back(verify_mode_from_string(mode_name), mr);
  }

  write_report_files(report, report_dir, corpus_name);
  std::cout << render_report_text(report, corpus_name);
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"cascade-verify: three-stage speaker verification toolkit"};
  app.require_subcommand(1);

  std::vector<std::string> profiles, sets;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  auto add_common = [&](CLI::App *sub) {
    sub->add_option("--profile", profiles,
                    "configuration profile name or path (repeatable)");
    sub->add_option("--set", sets, "override: section.key=value (repeatable)");
    sub->add_option("--seed", seed, "top-level RNG seed");
    sub->add_option("--jobs", jobs, "worker threads (0 = all cores)");
  };

  auto *synth = app.add_subcommand("synth", "generate a synthetic corpus");
  std::string out_dir;
  synth->add_option("--out", out_dir, "output directory")->required();
  bool dry_run = false;
  synth->add_flag("--dry-run", dry_run,
                  "write only manifest.csv and spec.used (no audio)");
  add_common(synth);

  auto *train = app.add_subcommand("train", "train the model registry");
  std::string manifest_path, model_dir;
  train->add_option("--manifest", manifest_path, "manifest.csv path")
      ->required();
  train->add_option("--model-dir", model_dir, "registry output directory")
      ->required();
  add_common(train);

  auto *evaluate =
      app.add_subcommand("evaluate", "run the framework-comparison suite");
  std::string report_dir;
  evaluate->add_option("--manifest", manifest_path, "manifest.csv path")
      ->required();
  evaluate->add_option("--model-dir", model_dir, "trained registry directory")
      ->required();
  evaluate->add_option("--report-dir", report_dir, "report output directory")
      ->required();
  std::string modes_arg;
  evaluate->add_option("--modes", modes_arg,
                       "comma-separated mode list (overrides eval.modes)");
  add_common(evaluate);

  auto *verify_cmd =
      app.add_subcommand("verify", "verify one utterance against a claim");
  std::string wav_path, claimed, mode_name = "three_stage";
  std::string forced_gender, forced_emotion, threshold_str = "0";
  verify_cmd
      ->add_option("--model-dir", model_dir, "trained registry directory")
      ->required();
  verify_cmd->add_option("--wav", wav_path, "utterance WAV path")->required();
  verify_cmd->add_option("--claimed", claimed, "claimed speaker id")
      ->required();
  verify_cmd->add_option("--threshold", threshold_str,
                         "acceptance threshold (accept iff lambda >= it; "
                         "-inf/inf allowed)");
  verify_cmd->add_option("--mode", mode_name,
                         "three_stage|two_stage_gender|two_stage_emotion|"
                         "one_stage|forced");
  verify_cmd->add_option("--gender", forced_gender, "forced gender label");
  verify_cmd->add_option("--emotion", forced_emotion, "forced emotion label");
  add_common(verify_cmd);

  auto *report_cmd =
      app.add_subcommand("report", "re-render reports from a trials.csv");
  std::string trials_path, corpus_name_arg = "synthetic";
  report_cmd->add_option("--trials", trials_path, "trials.csv path")
      ->required();
  report_cmd->add_option("--report-dir", report_dir, "report output directory")
      ->required();
  report_cmd->add_option("--name", corpus_name_arg, "corpus display name");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      if (dry_run) sets.push_back("synth.write_audio=false");
      return cmd_synth(make_config(profiles, sets, seed, jobs), out_dir);
    }
    if (train->parsed())
      return cmd_train(make_config(profiles, sets, seed, jobs), manifest_path,
                       model_dir);
    if (evaluate->parsed()) {
      if (!modes_arg.empty()) sets.push_back("eval.modes=" + modes_arg);
      return cmd_evaluate(make_config(profiles, sets, seed, jobs),
                          manifest_path, model_dir, report_dir);
    }
    if (verify_cmd->parsed())
      return cmd_verify(make_config(profiles, sets, seed, jobs), model_dir,
                        wav_path, claimed, parse_double(threshold_str),
                        mode_name, forced_gender, forced_emotion);
    if (report_cmd->parsed())
      return cmd_report(trials_path, report_dir, corpus_name_arg);
  } catch (const UnknownClaimant &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
