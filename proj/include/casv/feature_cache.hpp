// casv/feature_cache.hpp

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

#ifndef CASV_FEATURE_CACHE_HPP
#define CASV_FEATURE_CACHE_HPP

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>

#include "casv/common.hpp"
#include "casv/frontend.hpp"

namespace casv {

// Per-utterance binary feature record: magic "CVF1", little-endian u32 T and
// u32 D, then T*D little-endian IEEE doubles, row-major. Doubles are stored
// bit-exactly, so a cache hit reproduces the uncached pipeline output.

inline void write_feature_record(const std::string &path,
                                 const FeatureSequence &seq) {
  std::string out;
  out += "CVF1";
  auto put_u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
  };
  put_u32(static_cast<std::uint32_t>(seq.vectors.rows));
  put_u32(static_cast<std::uint32_t>(seq.vectors.cols));
  for (double v : seq.vectors.data) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) out.push_back(char((bits >> (8 * i)) & 0xff));
  }
  write_text_file(path, out);
}

inline FeatureSequence read_feature_record(const std::string &path) {
  std::string bytes = read_text_file(path);
  if (bytes.size() < 12 || bytes.compare(0, 4, "CVF1") != 0)
    throw IoError("not a CVF1 feature record: " + path);
  const auto *p = reinterpret_cast<const unsigned char *>(bytes.data());
  auto get_u32 = [&](std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(p[off + i]) << (8 * i);
    return v;
  };
  std::uint32_t T = get_u32(4), D = get_u32(8);
  std::size_t need = 12 + std::size_t(T) * D * 8;
  if (bytes.size() != need)
    throw IoError("truncated CVF1 record: " + path);
  FeatureSequence seq;
  seq.vectors = Matrix(T, D);
  for (std::size_t i = 0; i < std::size_t(T) * D; ++i) {
    std::uint64_t bits = 0;
    for (int j = 0; j < 8; ++j)
      bits |= std::uint64_t(p[12 + 8 * i + j]) << (8 * j);
    double v;
    std::memcpy(&v, &bits, 8);
    seq.vectors.data[i] = v;
  }
  return seq;
}

// Extracts features for a WAV file, going through the cache directory when
// one is given (CASCADE_VERIFY_CACHE from the CLI). Cache keys cover the
// utterance path and the full frontend fingerprint.
inline FeatureSequence extract_features_cached(const std::string &wav_path,
                                               const FrontendConfig &cfg,
                                               const std::string &cache_dir) {
  if (cache_dir.empty()) return extract_features(load_wav(wav_path), cfg);
  std::uint64_t key = fnv1a64(wav_path + "\n" + cfg.fingerprint());
  char name[32];
  std::snprintf(name, sizeof(name), "%016llx.cvf",
                static_cast<unsigned long long>(key));
  std::filesystem::path rec = std::filesystem::path(cache_dir) / name;
  if (std::filesystem::exists(rec)) return read_feature_record(rec.string());
  FeatureSequence seq = extract_features(load_wav(wav_path), cfg);
  std::filesystem::create_directories(cache_dir);
  write_feature_record(rec.string(), seq);
  return seq;
}

}  // namespace casv

#endif  // CASV_FEATURE_CACHE_HPP
