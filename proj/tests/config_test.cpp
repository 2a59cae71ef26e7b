// tests/config_test.cpp

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

#include <filesystem>

#include "casv/config.hpp"

using namespace casv;
namespace fs = std::filesystem;

static std::string profile_path(const std::string &name) {
  return (fs::path(CASV_SOURCE_DIR) / "profiles" / (name + ".cfg")).string();
}

TEST_CASE("the checked-in defaults profile is a no-op") {
  RunConfig builtin;
  RunConfig loaded = load_run_config({profile_path("defaults")}, {});
  REQUIRE(loaded.echo() == builtin.echo());
}

TEST_CASE("checked-in profiles parse and resolve") {
  for (const char *name : {"micro", "benchmark", "paper-shaped"}) {
    RunConfig cfg = load_run_config({profile_path(name)}, {});
    REQUIRE(cfg.corpus_name == name);
    cfg.frontend.validate(cfg.synth.sample_rate_hz);
    cfg.train.validate();
    cfg.synth_spec().validate();
  }
  RunConfig micro = load_run_config({profile_path("micro")}, {});
  REQUIRE(micro.synth.n_speakers_per_gender == 4);
  REQUIRE(micro.synth.emotion_set ==
          std::vector<std::string>{"neutral", "anger"});

  RunConfig paper = load_run_config({profile_path("paper-shaped")}, {});
  REQUIRE(paper.synth.n_speakers_per_gender == 20);
  REQUIRE(paper.synth.n_repetitions == 9);
  REQUIRE(paper.synth_spec().resolved_claimants(Gender::kMale) == 17);
}

TEST_CASE("layering and overrides") {
  RunConfig cfg = load_run_config({profile_path("micro")},
                                  {"synth.n_repetitions=5", "seed=99"});
  REQUIRE(cfg.synth.n_repetitions == 5);
  REQUIRE(cfg.seed == 99);
  // The top-level seed flows into the synthesis spec.
  REQUIRE(cfg.synth_spec().rng_seed == 99);

  REQUIRE_THROWS_AS(parse_set_override("no_equals_sign"), ConfigInvalid);
  auto [k, v] = parse_set_override("train.max_iters = 7");
  REQUIRE(k == "train.max_iters");
  REQUIRE(v == "7");
}

TEST_CASE("echo round-trips through apply") {
  RunConfig cfg;
  cfg.apply("synth.noise_snr_db", "12.5");
  cfg.apply("cascade.eq5_cohort", "gender_emotion_models");
  cfg.apply("eval.modes", "three_stage,one_stage");
  cfg.apply("synth.emotion.anger", "1.3,1.2,6,1.4,0.9");
  std::string echoed = cfg.echo();

  // Re-applying every echoed key reproduces the same echo.
  auto dir = fs::temp_directory_path() / "casv_config_test";
  fs::create_directories(dir);
  auto path = (dir / "echo.cfg").string();
  write_text_file(path, echoed);
  RunConfig back = load_run_config({path}, {});
  REQUIRE(back.echo() == echoed);
  REQUIRE(back.cascade.eq5_cohort == Eq5Cohort::kGenderEmotionModels);
  REQUIRE(back.eval_modes ==
          std::vector<VerifyMode>{VerifyMode::kThreeStage,
                                  VerifyMode::kOneStage});
  REQUIRE(back.synth.emotion_overrides.at("anger").breath_delta_db == 6.0);
}

TEST_CASE("config error paths") {
  RunConfig cfg;
  REQUIRE_THROWS_AS(cfg.apply("no.such.key", "1"), ConfigInvalid);
  REQUIRE_THROWS_AS(cfg.apply("frontend.apply_cmn", "maybe"), ConfigInvalid);
  REQUIRE_THROWS_AS(cfg.apply("train.max_iters", "abc"), IoError);
  REQUIRE_THROWS_AS(cfg.apply("eval.modes", "teleport"), ConfigInvalid);
  REQUIRE_THROWS_AS(cfg.apply("synth.emotion.anger", "1,2"), ConfigInvalid);

  auto dir = fs::temp_directory_path() / "casv_config_test";
  fs::create_directories(dir);
  auto bad = (dir / "bad.cfg").string();
  write_text_file(bad, "this line has no equals\n");
  REQUIRE_THROWS_AS(read_config_file(bad), ConfigInvalid);

  // Comments and blank lines are fine.
  auto good = (dir / "good.cfg").string();
  write_text_file(good, "# comment\n\nseed = 5 # trailing comment\n");
  auto kvs = read_config_file(good);
  REQUIRE(kvs.size() == 1);
  REQUIRE(kvs[0].first == "seed");
  REQUIRE(kvs[0].second == "5");
}

TEST_CASE("profile resolution") {
  // Explicit path wins.
  REQUIRE(resolve_profile(profile_path("micro"), "") ==
          profile_path("micro"));
  // Name resolves through the built-in directory.
  std::string dir = (fs::path(CASV_SOURCE_DIR) / "profiles").string();
  REQUIRE(resolve_profile("benchmark", dir) == profile_path("benchmark"));
  REQUIRE_THROWS_AS(resolve_profile("no-such-profile", dir), ConfigInvalid);
}
