// casv/registry.hpp

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

#ifndef CASV_REGISTRY_HPP
#define CASV_REGISTRY_HPP

#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "casv/feature_cache.hpp"
#include "casv/hmm_train.hpp"
#include "casv/manifest.hpp"

namespace casv {

// In-memory features for (a split of) a corpus, keyed by manifest path.
using FeatureStore = std::map<std::string, FeatureSequence>;

// Extracts features for every manifest entry in the given split.
inline FeatureStore extract_corpus_features(const DatasetManifest &m,
                                            const FrontendConfig &cfg,
                                            Split split, int jobs = 1,
                                            const std::string &cache_dir = "") {
  std::vector<const ManifestEntry *> wanted;
  for (const auto &e : m.entries)
    if (e.split == split) wanted.push_back(&e);
  std::vector<FeatureSequence> slots(wanted.size());
  parallel_for(wanted.size(), jobs, [&](std::size_t i) {
    slots[i] =
        extract_features_cached(m.resolve_path(*wanted[i]), cfg, cache_dir);
  });
  FeatureStore store;
  for (std::size_t i = 0; i < wanted.size(); ++i)
    store[wanted[i]->path] = std::move(slots[i]);
  return store;
}

// ---------------------------------------------------------------------------
// ModelRegistry: the trained model hierarchy for all framework variants.
//
// Storage keys:
//   gender/<g>                      stage-1 models
//   emotion/<g>/<e>                 stage-2 models (also Eq. 5/6 cohorts)
//   emotion_pooled/<e>              gender-pooled emotion models (stage for
//                                   the gender-independent baseline)
//   speaker/<g>/<e>/<spk>           stage-3 claimant models
//   speaker_pooled/<spk>            claimant model over all emotions; a
//                                   speaker's data has one gender, so the
//                                   same model serves as the gender-pooled
//                                   speaker model (one model, two roles)
// ---------------------------------------------------------------------------

class ModelRegistry {
 public:
  std::vector<std::string> emotion_set;          // manifest order
  std::vector<std::string> claimant_order;       // manifest order
  std::map<std::string, Gender> claimant_gender;
  std::size_t feature_dim = 0;
  std::string frontend_fingerprint;

  std::map<std::string, Hmm> models;  // storage key -> model

  bool has(const std::string &key) const { return models.count(key) != 0; }

  const Hmm &model(const std::string &key) const {
    auto it = models.find(key);
    if (it == models.end())
      throw MissingModel("registry has no model '" + key + "'");
    return it->second;
  }

  bool is_claimant(const std::string &spk) const {
    return claimant_gender.count(spk) != 0;
  }

  Gender gender_of_claimant(const std::string &spk) const {
    auto it = claimant_gender.find(spk);
    if (it == claimant_gender.end())
      throw UnknownClaimant("'" + spk + "' is not an enrolled claimant");
    return it->second;
  }

  std::vector<std::string> claimants_of_gender(Gender g) const {
    std::vector<std::string> out;
    for (const auto &spk : claimant_order)
      if (claimant_gender.at(spk) == g) out.push_back(spk);
    return out;
  }

  const Hmm &gender_model(Gender g) const {
    return model("gender/" + to_string(g));
  }
  const Hmm &emotion_model(Gender g, const std::string &e) const {
    return model("emotion/" + to_string(g) + "/" + e);
  }
  const Hmm &pooled_emotion_model(const std::string &e) const {
    return model("emotion_pooled/" + e);
  }
  // Claimant model under a specific emotion. The gender argument names the
  // recognized gender; a claimant's models exist only under their enrolled
  // gender, so a wrong recognized gender resolves to the enrolled family
  // (the recognized labels still steer the cohort terms and the emotion
  // chosen upstream, which is where a stage-1 error does its damage).
  const Hmm &speaker_model(Gender g, const std::string &e,
                           const std::string &spk) const {
    Gender enrolled = gender_of_claimant(spk);
    (void)g;
    return model("speaker/" + to_string(enrolled) + "/" + e + "/" + spk);
  }
  // Emotion-pooled claimant model; doubles as the gender-pooled speaker
  // model since a single speaker's data carries exactly one gender.
  const Hmm &pooled_speaker_model(const std::string &spk) const {
    return model("speaker_pooled/" + spk);
  }
  const Hmm &gender_pooled_speaker_model(const std::string &spk) const {
    return pooled_speaker_model(spk);
  }
};

// ---------------------------------------------------------------------------
// Training. Each model trains on its manifest cell; cardinalities follow
// the protocol arithmetic (e.g. 20 speakers x 4 sentences x 9 repetitions x
// 6 emotions = 4320 per gender model on a paper-shaped corpus).
// ---------------------------------------------------------------------------

struct TrainingLog {
  std::vector<std::string> lines;
  std::map<std::string, std::vector<double>> traces;   // full precision
  std::map<std::string, std::size_t> cell_sizes;

  void record(const std::string &key,
              const std::vector<const ManifestEntry *> &entries,
              const TrainResult &r) {
    lines.push_back("model " + key + " utterances " +
                    std::to_string(entries.size()));
    for (const auto *e : entries) lines.push_back("  utt " + e->path);
    std::string trace = "  em_trace";
    for (double v : r.loglik_trace) trace += " " + format_double(v, 12);
    lines.push_back(trace);
    for (const auto &w : r.warnings) lines.push_back("  warning " + w);
    traces[key] = r.loglik_trace;
    cell_sizes[key] = entries.size();
  }

  std::string to_string() const {
    std::string out;
    for (const auto &l : lines) out += l + "\n";
    return out;
  }
};

namespace detail {

inline std::vector<const FeatureSequence *> gather(
    const FeatureStore &store,
    const std::vector<const ManifestEntry *> &entries) {
  std::vector<const FeatureSequence *> out;
  out.reserve(entries.size());
  for (const auto *e : entries) {
    auto it = store.find(e->path);
    if (it == store.end())
      throw MissingModel("no features extracted for " + e->path);
    out.push_back(&it->second);
  }
  return out;
}

inline TrainConfig seeded(const TrainConfig &cfg, std::uint64_t base_seed,
                          const std::string &key) {
  TrainConfig c = cfg;
  c.init_seed = derive_seed(base_seed, "train/" + key);
  return c;
}

}  // namespace detail

// Stage-1 models: one HMM per gender over every train utterance of that
// gender, across all emotions and speakers.
inline std::map<std::string, Hmm> train_gender_models(
    const DatasetManifest &m, const FeatureStore &features,
    const TrainConfig &cfg, std::uint64_t seed, TrainingLog *log = nullptr) {
  std::map<std::string, Hmm> out;
  for (auto g : {Gender::kMale, Gender::kFemale}) {
    std::vector<const ManifestEntry *> cell;
    for (const auto &e : m.entries)
      if (e.split == Split::kTrain && e.gender == g) cell.push_back(&e);
    if (cell.empty())
      throw InsufficientData("no training data for gender " + to_string(g));
    std::string key = "gender/" + to_string(g);
    TrainResult r = train_baum_welch(detail::gather(features, cell),
                                     detail::seeded(cfg, seed, key), key);
    if (log) log->record(key, cell, r);
    out[key] = std::move(r.model);
  }
  return out;
}

// Stage-2 models: one HMM per (gender, emotion) cell; optionally also the
// gender-pooled per-emotion models used by the gender-independent baseline.
inline std::map<std::string, Hmm> train_emotion_models(
    const DatasetManifest &m, const FeatureStore &features,
    const TrainConfig &cfg, std::uint64_t seed, TrainingLog *log = nullptr,
    bool include_gender_pooled = true) {
  std::map<std::string, Hmm> out;
  for (auto g : {Gender::kMale, Gender::kFemale})
    for (const auto &emo : m.emotion_set) {
      std::vector<const ManifestEntry *> cell;
      for (const auto &e : m.entries)
        if (e.split == Split::kTrain && e.gender == g && e.emotion == emo)
          cell.push_back(&e);
      if (cell.empty())
        throw InsufficientData("no training data for (" + to_string(g) +
                               ", " + emo + ")");
      std::string key = "emotion/" + to_string(g) + "/" + emo;
      TrainResult r = train_baum_welch(detail::gather(features, cell),
                                       detail::seeded(cfg, seed, key), key);
      if (log) log->record(key, cell, r);
      out[key] = std::move(r.model);
    }
  if (include_gender_pooled)
    for (const auto &emo : m.emotion_set) {
      std::vector<const ManifestEntry *> cell;
      for (const auto &e : m.entries)
        if (e.split == Split::kTrain && e.emotion == emo) cell.push_back(&e);
      std::string key = "emotion_pooled/" + emo;
      TrainResult r = train_baum_welch(detail::gather(features, cell),
                                       detail::seeded(cfg, seed, key), key);
      if (log) log->record(key, cell, r);
      out[key] = std::move(r.model);
    }
  return out;
}

// Stage-3 models for every claimant: one per emotion plus the pooled model
// over all emotions (which serves both pooled baselines).
inline std::map<std::string, Hmm> train_speaker_models(
    const DatasetManifest &m, const FeatureStore &features,
    const TrainConfig &cfg, std::uint64_t seed, TrainingLog *log = nullptr) {
  std::map<std::string, Hmm> out;
  std::map<std::string, Gender> gender_of;
  std::vector<std::string> order;
  for (const auto &e : m.entries)
    if (e.role == Role::kClaimant && !gender_of.count(e.speaker_id)) {
      gender_of[e.speaker_id] = e.gender;
      order.push_back(e.speaker_id);
    }
  if (order.empty()) throw InsufficientData("manifest has no claimants");

  for (const auto &spk : order) {
    Gender g = gender_of[spk];
    std::vector<const ManifestEntry *> all_train;
    for (const auto &emo : m.emotion_set) {
      std::vector<const ManifestEntry *> cell;
      for (const auto &e : m.entries)
        if (e.split == Split::kTrain && e.speaker_id == spk &&
            e.emotion == emo)
          cell.push_back(&e);
      if (cell.empty())
        throw InsufficientData("claimant " + spk + " has no '" + emo +
                               "' training data");
      all_train.insert(all_train.end(), cell.begin(), cell.end());
      std::string key = "speaker/" + to_string(g) + "/" + emo + "/" + spk;
      TrainResult r = train_baum_welch(detail::gather(features, cell),
                                       detail::seeded(cfg, seed, key), key);
      if (log) log->record(key, cell, r);
      out[key] = std::move(r.model);
    }
    std::string pkey = "speaker_pooled/" + spk;
    TrainResult r = train_baum_welch(detail::gather(features, all_train),
                                     detail::seeded(cfg, seed, pkey), pkey);
    if (log) log->record(pkey, all_train, r);
    out[pkey] = std::move(r.model);
  }
  return out;
}

struct BuildOptions {
  FrontendConfig frontend;
  TrainConfig train;
  std::uint64_t seed = 1;
  int jobs = 1;
  std::string cache_dir;
};

// Audit: every model any framework variant can ask for must exist.
inline std::vector<std::string> audit_registry(const ModelRegistry &reg,
                                               const DatasetManifest &m) {
  std::vector<std::string> missing;
  auto need = [&](const std::string &key) {
    if (!reg.has(key)) missing.push_back(key);
  };
  for (auto g : {Gender::kMale, Gender::kFemale})
    need("gender/" + to_string(g));
  for (auto g : {Gender::kMale, Gender::kFemale})
    for (const auto &e : m.emotion_set)
      need("emotion/" + to_string(g) + "/" + e);
  for (const auto &e : m.emotion_set) need("emotion_pooled/" + e);
  for (const auto &spk : reg.claimant_order) {
    Gender g = reg.claimant_gender.at(spk);
    for (const auto &e : m.emotion_set)
      need("speaker/" + to_string(g) + "/" + e + "/" + spk);
    need("speaker_pooled/" + spk);
  }
  return missing;
}

// Trains the full hierarchy. Models are independent once the feature store
// exists, so they train in parallel; each draws its own seed from
// (seed, storage key), which keeps the result identical at any jobs value.
inline ModelRegistry build_registry(const DatasetManifest &m,
                                    const FeatureStore &features,
                                    const BuildOptions &opts,
                                    TrainingLog *log = nullptr) {
  ModelRegistry reg;
  reg.emotion_set = m.emotion_set;
  reg.frontend_fingerprint = opts.frontend.fingerprint();
  for (const auto &e : m.entries)
    if (e.role == Role::kClaimant && !reg.claimant_gender.count(e.speaker_id)) {
      reg.claimant_gender[e.speaker_id] = e.gender;
      reg.claimant_order.push_back(e.speaker_id);
    }

  // Build the work list first so the jobs can run out of order while logs
  // and the registry keep a deterministic layout.
  struct Job {
    std::string key;
    std::vector<const ManifestEntry *> cell;
  };
  std::vector<Job> jobs_list;
  auto add_job = [&](const std::string &key, auto pred) {
    Job j;
    j.key = key;
    for (const auto &e : m.entries)
      if (e.split == Split::kTrain && pred(e)) j.cell.push_back(&e);
    if (j.cell.empty())
      throw InsufficientData("no training data for model '" + key + "'");
    jobs_list.push_back(std::move(j));
  };

  for (auto g : {Gender::kMale, Gender::kFemale})
    add_job("gender/" + to_string(g),
            [g](const ManifestEntry &e) { return e.gender == g; });
  for (auto g : {Gender::kMale, Gender::kFemale})
    for (const auto &emo : m.emotion_set)
      add_job("emotion/" + to_string(g) + "/" + emo,
              [g, &emo](const ManifestEntry &e) {
                return e.gender == g && e.emotion == emo;
              });
  for (const auto &emo : m.emotion_set)
    add_job("emotion_pooled/" + emo,
            [&emo](const ManifestEntry &e) { return e.emotion == emo; });
  for (const auto &spk : reg.claimant_order) {
    Gender g = reg.claimant_gender.at(spk);
    for (const auto &emo : m.emotion_set) {
      std::string key = "speaker/" + to_string(g) + "/" + emo + "/" + spk;
      bool any = false;
      for (const auto &e : m.entries)
        if (e.split == Split::kTrain && e.speaker_id == spk &&
            e.emotion == emo)
          any = true;
      if (!any)
        throw InsufficientData("claimant " + spk + " has no '" + emo +
                               "' training data");
      add_job(key, [&spk, &emo](const ManifestEntry &e) {
        return e.speaker_id == spk && e.emotion == emo;
      });
    }
    add_job("speaker_pooled/" + spk,
            [&spk](const ManifestEntry &e) { return e.speaker_id == spk; });
  }

  std::vector<TrainResult> results(jobs_list.size());
  parallel_for(jobs_list.size(), opts.jobs, [&](std::size_t i) {
    const Job &j = jobs_list[i];
    results[i] =
        train_baum_welch(detail::gather(features, j.cell),
                         detail::seeded(opts.train, opts.seed, j.key), j.key);
  });

  for (std::size_t i = 0; i < jobs_list.size(); ++i) {
    if (log) log->record(jobs_list[i].key, jobs_list[i].cell, results[i]);
    results[i].model.label = jobs_list[i].key;
    reg.models[jobs_list[i].key] = std::move(results[i].model);
  }
  reg.feature_dim = reg.models.begin()->second.feature_dim;

  auto missing = audit_registry(reg, m);
  if (!missing.empty())
    throw MissingModel("registry audit failed; first missing: " + missing[0]);
  return reg;
}

// ---------------------------------------------------------------------------
// Persistence: one text file per model under the storage-key path, plus a
// registry.index carrying metadata and per-file content hashes.
// ---------------------------------------------------------------------------

inline void save_registry(const ModelRegistry &reg, const std::string &dir) {
  namespace fs = std::filesystem;
  std::ostringstream index;
  index << "casv_registry v1\n";
  index << "feature_dim " << reg.feature_dim << "\n";
  index << "frontend_fingerprint " << reg.frontend_fingerprint << "\n";
  index << "emotion_set";
  for (const auto &e : reg.emotion_set) index << " " << e;
  index << "\n";
  for (const auto &spk : reg.claimant_order)
    index << "claimant " << spk << " "
          << to_string(reg.claimant_gender.at(spk)) << "\n";
  for (const auto &[key, m] : reg.models) {
    std::string rel = key + ".model";
    fs::path full = fs::path(dir) / rel;
    fs::create_directories(full.parent_path());
    save_hmm(full.string(), m);
    index << "model " << key << " " << rel << " "
          << std::to_string(hash_file(full.string())) << "\n";
  }
  write_text_file((fs::path(dir) / "registry.index").string(), index.str());
}

inline ModelRegistry load_registry(const std::string &dir) {
  namespace fs = std::filesystem;
  std::string index_path = (fs::path(dir) / "registry.index").string();
  std::istringstream in(read_text_file(index_path));
  std::string line;
  if (!std::getline(in, line) || trim(line) != "casv_registry v1")
    throw IntegrityError(index_path + ": bad magic line");

  ModelRegistry reg;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    auto t = split(line, ' ');
    if (t[0] == "feature_dim" && t.size() == 2) {
      reg.feature_dim = std::size_t(parse_long(t[1]));
    } else if (t[0] == "frontend_fingerprint" && t.size() == 2) {
      reg.frontend_fingerprint = t[1];
    } else if (t[0] == "emotion_set") {
      for (std::size_t i = 1; i < t.size(); ++i)
        reg.emotion_set.push_back(t[i]);
    } else if (t[0] == "claimant" && t.size() == 3) {
      reg.claimant_order.push_back(t[1]);
      reg.claimant_gender[t[1]] = gender_from_string(t[2]);
    } else if (t[0] == "model" && t.size() == 4) {
      std::string full = (fs::path(dir) / t[2]).string();
      if (!fs::exists(full))
        throw IntegrityError("missing model file: " + full);
      if (std::to_string(hash_file(full)) != t[3])
        throw IntegrityError("content hash mismatch for " + full);
      Hmm m = load_hmm(full);
      m.precompute();
      reg.models[t[1]] = std::move(m);
    } else {
      throw IntegrityError(index_path + ": unrecognized line '" + line + "'");
    }
  }
  if (reg.models.empty())
    throw IntegrityError(index_path + ": registry lists no models");
  return reg;
}

}  // namespace casv

#endif  // CASV_REGISTRY_HPP
