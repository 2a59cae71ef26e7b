// casv/manifest.hpp

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

#ifndef CASV_MANIFEST_HPP
#define CASV_MANIFEST_HPP

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "casv/common.hpp"
#include "casv/wav.hpp"

namespace casv {

enum class Gender { kMale, kFemale };
enum class Split { kTrain, kTest };
enum class Role { kClaimant, kImposter };

inline std::string to_string(Gender g) {
  return g == Gender::kMale ? "male" : "female";
}
inline std::string to_string(Split s) {
  return s == Split::kTrain ? "train" : "test";
}
inline std::string to_string(Role r) {
  return r == Role::kClaimant ? "claimant" : "imposter";
}

inline Gender gender_from_string(const std::string &s) {
  if (s == "male") return Gender::kMale;
  if (s == "female") return Gender::kFemale;
  throw IoError("unknown gender '" + s + "'");
}
inline Split split_from_string(const std::string &s) {
  if (s == "train") return Split::kTrain;
  if (s == "test") return Split::kTest;
  throw IoError("unknown split '" + s + "'");
}
inline Role role_from_string(const std::string &s) {
  if (s == "claimant") return Role::kClaimant;
  if (s == "imposter") return Role::kImposter;
  throw IoError("unknown role '" + s + "'");
}

inline Gender opposite(Gender g) {
  return g == Gender::kMale ? Gender::kFemale : Gender::kMale;
}

struct ManifestEntry {
  std::string path;  // relative to the manifest's directory
  std::string speaker_id;
  Gender gender = Gender::kMale;
  std::string emotion;
  int sentence_id = 0;
  int repetition = 0;
  Split split = Split::kTrain;
  Role role = Role::kClaimant;
};

// One corpus: utterance records plus the ordered emotion set (order of first
// appearance; all tie-breaking downstream follows it).
struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::vector<std::string> emotion_set;
  std::string root_dir;  // directory the entry paths are relative to

  std::string resolve_path(const ManifestEntry &e) const {
    if (root_dir.empty()) return e.path;
    return (std::filesystem::path(root_dir) / e.path).string();
  }

  int emotion_index(const std::string &emotion) const {
    for (std::size_t i = 0; i < emotion_set.size(); ++i)
      if (emotion_set[i] == emotion) return int(i);
    return -1;
  }

  void rebuild_emotion_set() {
    emotion_set.clear();
    for (const auto &e : entries)
      if (emotion_index(e.emotion) < 0) emotion_set.push_back(e.emotion);
  }

  std::vector<std::string> speakers(Gender g, Role r) const {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto &e : entries)
      if (e.gender == g && e.role == r && seen.insert(e.speaker_id).second)
        out.push_back(e.speaker_id);
    return out;
  }

  std::vector<std::string> claimants() const {
    std::vector<std::string> out = speakers(Gender::kMale, Role::kClaimant);
    auto f = speakers(Gender::kFemale, Role::kClaimant);
    out.insert(out.end(), f.begin(), f.end());
    return out;
  }
};

inline const char *kManifestHeader =
    "path,speaker_id,gender,emotion,sentence_id,repetition,split,role";

inline void write_manifest(const std::string &path,
                           const DatasetManifest &m) {
  std::ostringstream out;
  out << kManifestHeader << "\n";
  for (const auto &e : m.entries)
    out << e.path << "," << e.speaker_id << "," << to_string(e.gender) << ","
        << e.emotion << "," << e.sentence_id << "," << e.repetition << ","
        << to_string(e.split) << "," << to_string(e.role) << "\n";
  write_text_file(path, out.str());
}

inline DatasetManifest read_manifest(const std::string &path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line) || trim(line) != kManifestHeader)
    throw IoError(path + ": missing or unexpected manifest header");
  DatasetManifest m;
  m.root_dir = std::filesystem::path(path).parent_path().string();
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    auto f = split(line, ',');
    if (f.size() != 8)
      throw IoError(path + ":" + std::to_string(lineno) +
                    ": expected 8 fields, got " + std::to_string(f.size()));
    ManifestEntry e;
    e.path = f[0];
    e.speaker_id = f[1];
    e.gender = gender_from_string(f[2]);
    e.emotion = f[3];
    e.sentence_id = int(parse_long(f[4]));
    e.repetition = int(parse_long(f[5]));
    e.split = split_from_string(f[6]);
    e.role = role_from_string(f[7]);
    m.entries.push_back(std::move(e));
  }
  m.rebuild_emotion_set();
  return m;
}

// ---------------------------------------------------------------------------
// Validation. Report-based: an empty violation list means the manifest is
// usable for training and evaluation.
// ---------------------------------------------------------------------------

struct ValidationOptions {
  bool check_files = true;  // existence + header sanity + sample-rate match
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }

  std::string to_string() const {
    if (ok()) return "manifest OK\n";
    std::string s;
    for (const auto &v : violations) s += v + "\n";
    return s;
  }
};

inline ValidationReport validate_manifest(const DatasetManifest &m,
                                          const ValidationOptions &opts = {}) {
  ValidationReport rep;
  auto flag = [&](const std::string &v) { rep.violations.push_back(v); };

  if (m.entries.empty()) {
    flag("empty manifest");
    return rep;
  }

  // Speaker metadata must be consistent across entries.
  std::map<std::string, Gender> spk_gender;
  std::map<std::string, Role> spk_role;
  for (const auto &e : m.entries) {
    auto git = spk_gender.find(e.speaker_id);
    if (git == spk_gender.end())
      spk_gender[e.speaker_id] = e.gender;
    else if (git->second != e.gender)
      flag("inconsistent speaker metadata: " + e.speaker_id +
           " appears with two genders");
    auto rit = spk_role.find(e.speaker_id);
    if (rit == spk_role.end())
      spk_role[e.speaker_id] = e.role;
    else if (rit->second != e.role)
      flag("inconsistent speaker metadata: " + e.speaker_id +
           " appears with two roles");
  }

  // Text independence: per speaker, train and test sentence ids disjoint.
  std::map<std::string, std::set<int>> train_sent, test_sent;
  for (const auto &e : m.entries)
    (e.split == Split::kTrain ? train_sent : test_sent)[e.speaker_id].insert(
        e.sentence_id);
  for (const auto &[spk, sents] : train_sent) {
    auto it = test_sent.find(spk);
    if (it == test_sent.end()) continue;
    for (int s : sents)
      if (it->second.count(s))
        flag("text-dependence leak: speaker " + spk + " sentence " +
             std::to_string(s) + " appears in both train and test");
  }

  // Singleton classes make a train/test protocol meaningless.
  std::map<std::string, std::size_t> per_speaker;
  for (const auto &e : m.entries) per_speaker[e.speaker_id]++;
  for (const auto &[spk, n] : per_speaker)
    if (n < 2) flag("singleton class: speaker " + spk + " has only 1 entry");

  if (m.emotion_set.size() < 1) flag("no emotions present");

  // Duplicate paths would silently double-count training data.
  std::set<std::string> paths;
  for (const auto &e : m.entries)
    if (!paths.insert(e.path).second) flag("duplicate path: " + e.path);

  if (opts.check_files) {
    int sample_rate = 0;
    std::string rate_witness;
    for (const auto &e : m.entries) {
      std::string full = m.resolve_path(e);
      if (!std::filesystem::exists(full)) {
        flag("missing file: " + e.path);
        continue;
      }
      try {
        WavHeader h = read_wav_header(full);
        if (sample_rate == 0) {
          sample_rate = int(h.sample_rate);
          rate_witness = e.path;
        } else if (int(h.sample_rate) != sample_rate) {
          flag("sample-rate mismatch: " + e.path + " is " +
               std::to_string(h.sample_rate) + " Hz but " + rate_witness +
               " is " + std::to_string(sample_rate) + " Hz");
        }
      } catch (const Error &err) {
        flag(std::string("unreadable audio: ") + err.what());
      }
    }
  }
  return rep;
}

}  // namespace casv

#endif  // CASV_MANIFEST_HPP
