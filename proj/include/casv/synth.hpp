// casv/synth.hpp

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

#ifndef CASV_SYNTH_HPP
#define CASV_SYNTH_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "casv/common.hpp"
#include "casv/manifest.hpp"
#include "casv/wav.hpp"

namespace casv {

// How one emotion colours an utterance. 'neutral' is the identity tuple
// with zero instability, which keeps it the tightest (most separable)
// class for both identification and verification.
struct EmotionProfile {
  double f0_scale = 1.0;        // multiplies the speaker's fundamental
  double rate_scale = 1.0;      // multiplies articulation speed
  double breath_delta_db = 0.0; // extra aspiration noise
  double bandwidth_scale = 1.0; // widens/narrows formant resonances
  double instability = 0.0;     // per-utterance random spread
  double formant_scale = 1.0;   // vocal-tract tension: shifts all formants
  double pulse_width = 8.0;     // glottal pulse width; smaller = brighter
};

struct SynthSpec {
  int n_speakers_per_gender = 20;
  // Optional asymmetric overrides (0 = use n_speakers_per_gender); covers
  // corpora shaped like EPST's 3 male / 5 female split.
  int n_speakers_male = 0;
  int n_speakers_female = 0;
  std::vector<std::string> emotion_set = {"neutral",   "anger",  "sadness",
                                          "happiness", "disgust", "fear"};
  int n_sentences_train = 4;
  int n_sentences_test = 4;
  int n_repetitions = 9;
  double utterance_seconds = 1.5;
  int sample_rate_hz = 16000;

  // Separability knobs.
  double speaker_formant_spread_hz = 200.0;
  double emotion_f0_scale_lo = 0.84;
  double emotion_f0_scale_hi = 1.30;
  double emotion_rate_lo = 0.80;
  double emotion_rate_hi = 1.28;
  double noise_snr_db = 30.0;

  // Per-gender fundamental frequency.
  double male_f0_hz = 120.0;
  double female_f0_hz = 210.0;
  double speaker_f0_spread_hz = 18.0;

  // 0 means proportional to the 17-of-20 rule from the evaluation protocol.
  int claimants_per_gender = 0;

  std::uint64_t rng_seed = 1;
  bool write_audio = true;  // false: emit only manifest.csv and spec.used

  std::map<std::string, EmotionProfile> emotion_overrides;

  int speakers(Gender g) const {
    int n = g == Gender::kMale ? n_speakers_male : n_speakers_female;
    return n > 0 ? n : n_speakers_per_gender;
  }

  // Proportional version of the 17-claimants-of-20 protocol rule.
  int resolved_claimants(Gender g) const {
    int n = speakers(g);
    if (claimants_per_gender > 0) return std::min(claimants_per_gender, n);
    return std::max(1, (n * 17) / 20);
  }

  void validate() const {
    if (n_speakers_per_gender < 1 || n_sentences_train < 1 ||
        n_sentences_test < 1 || n_repetitions < 1)
      throw SpecInvalid("all corpus counts must be >= 1");
    if (n_speakers_male < 0 || n_speakers_female < 0)
      throw SpecInvalid("per-gender speaker overrides must be >= 0");
    if (sample_rate_hz < 8000)
      throw SpecInvalid("sample_rate_hz must be >= 8000");
    if (utterance_seconds <= 0.0)
      throw SpecInvalid("utterance_seconds must be positive");
    if (emotion_set.empty()) throw SpecInvalid("emotion_set is empty");
    std::set<std::string> seen;
    for (const auto &e : emotion_set)
      if (!seen.insert(e).second)
        throw SpecInvalid("duplicate emotion label '" + e + "'");
    if (speaker_formant_spread_hz < 0.0 || speaker_f0_spread_hz < 0.0)
      throw SpecInvalid("spread parameters must be non-negative");
    if (!(emotion_f0_scale_lo > 0.0) || !(emotion_rate_lo > 0.0) ||
        emotion_f0_scale_hi < emotion_f0_scale_lo ||
        emotion_rate_hi < emotion_rate_lo)
      throw SpecInvalid("emotion scale ranges must be positive and ordered");
  }

  std::string echo() const {
    std::ostringstream out;
    out << "casv_synth_spec v1\n";
    out << "n_speakers_per_gender " << n_speakers_per_gender << "\n";
    out << "n_speakers_male " << speakers(Gender::kMale) << "\n";
    out << "n_speakers_female " << speakers(Gender::kFemale) << "\n";
    out << "emotion_set";
    for (const auto &e : emotion_set) out << " " << e;
    out << "\n";
    out << "n_sentences_train " << n_sentences_train << "\n";
    out << "n_sentences_test " << n_sentences_test << "\n";
    out << "n_repetitions " << n_repetitions << "\n";
    out << "utterance_seconds " << format_double17(utterance_seconds) << "\n";
    out << "sample_rate_hz " << sample_rate_hz << "\n";
    out << "speaker_formant_spread_hz "
        << format_double17(speaker_formant_spread_hz) << "\n";
    out << "emotion_f0_scale_range " << format_double17(emotion_f0_scale_lo)
        << " " << format_double17(emotion_f0_scale_hi) << "\n";
    out << "emotion_rate_range " << format_double17(emotion_rate_lo) << " "
        << format_double17(emotion_rate_hi) << "\n";
    out << "noise_snr_db " << format_double17(noise_snr_db) << "\n";
    out << "male_f0_hz " << format_double17(male_f0_hz) << "\n";
    out << "female_f0_hz " << format_double17(female_f0_hz) << "\n";
    out << "speaker_f0_spread_hz " << format_double17(speaker_f0_spread_hz)
        << "\n";
    out << "claimants_male " << resolved_claimants(Gender::kMale) << "\n";
    out << "claimants_female " << resolved_claimants(Gender::kFemale) << "\n";
    out << "rng_seed " << rng_seed << "\n";
    out << "write_audio " << (write_audio ? 1 : 0) << "\n";
    for (const auto &[label, p] : emotion_overrides)
      out << "emotion_profile " << label << " " << format_double17(p.f0_scale)
          << " " << format_double17(p.rate_scale) << " "
          << format_double17(p.breath_delta_db) << " "
          << format_double17(p.bandwidth_scale) << " "
          << format_double17(p.instability) << " "
          << format_double17(p.formant_scale) << " "
          << format_double17(p.pulse_width) << "\n";
    return out.str();
  }
};

namespace detail {

// Fixed tuples for the six canonical emotion labels; anything else falls
// back to a deterministic spread across the configured ranges.
inline EmotionProfile builtin_emotion_profile(const std::string &label) {
  // Columns: f0, rate, breath dB, bandwidth, instability, formant scale,
  // pulse width. Classes are kept apart mainly through the spectral columns
  // (formant scale, pulse width, breathiness, bandwidth); instability adds
  // within-class spread, largest for anger and zero for neutral.
  static const std::map<std::string, EmotionProfile> table = {
      {"neutral", {1.00, 1.00, 0.0, 1.00, 0.00, 1.000, 8.0}},
      {"anger", {1.24, 1.25, 5.0, 1.25, 0.80, 1.055, 5.5}},
      {"sadness", {0.88, 0.82, 1.5, 1.10, 0.30, 0.950, 11.0}},
      {"happiness", {1.17, 1.13, 1.0, 0.94, 0.28, 1.035, 6.5}},
      {"disgust", {0.94, 0.90, 3.0, 1.18, 0.35, 0.975, 9.5}},
      {"fear", {1.21, 1.20, 2.0, 1.04, 0.32, 1.015, 7.2}},
  };
  auto it = table.find(label);
  if (it != table.end()) return it->second;
  EmotionProfile none;
  none.instability = -1.0;  // marker: not found
  return none;
}

}  // namespace detail

inline EmotionProfile emotion_profile(const SynthSpec &spec,
                                      const std::string &label,
                                      int index_in_set) {
  auto ov = spec.emotion_overrides.find(label);
  if (ov != spec.emotion_overrides.end()) return ov->second;
  EmotionProfile p = detail::builtin_emotion_profile(label);
  if (p.instability >= 0.0) return p;
  // Unknown label: spread across the configured ranges by position.
  int m = int(spec.emotion_set.size());
  double a = m > 1 ? double(index_in_set) / double(m - 1) : 0.0;
  p.f0_scale =
      spec.emotion_f0_scale_lo +
      a * (spec.emotion_f0_scale_hi - spec.emotion_f0_scale_lo);
  p.rate_scale =
      spec.emotion_rate_lo + a * (spec.emotion_rate_hi - spec.emotion_rate_lo);
  p.breath_delta_db = 5.0 * a;
  p.bandwidth_scale = 1.0 + 0.3 * a;
  p.instability = index_in_set == 0 ? 0.0 : 0.25 + 0.35 * a;
  p.formant_scale = 0.93 + 0.16 * a;
  p.pulse_width = 12.0 - 7.0 * a;
  if (label == "neutral") p = EmotionProfile{};
  return p;
}

namespace detail {

struct SpeakerVoice {
  double f0_hz = 0.0;
  double formants_hz[3] = {0.0, 0.0, 0.0};
};

struct SentenceSegment {
  double formant_mul[3] = {1.0, 1.0, 1.0};
  double dur_weight = 1.0;
  double amplitude = 1.0;
};

inline SpeakerVoice make_voice(const SynthSpec &spec, Gender g, int index) {
  std::mt19937_64 rng(derive_seed(
      spec.rng_seed, "speaker/" + to_string(g) + "/" + std::to_string(index)));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SpeakerVoice v;
  double base_f0 = g == Gender::kMale ? spec.male_f0_hz : spec.female_f0_hz;
  v.f0_hz = base_f0 + u(rng) * spec.speaker_f0_spread_hz;
  const double male_formants[3] = {500.0, 1450.0, 2450.0};
  const double female_formants[3] = {590.0, 1700.0, 2850.0};
  const double *base = g == Gender::kMale ? male_formants : female_formants;
  for (int i = 0; i < 3; ++i)
    v.formants_hz[i] = base[i] + u(rng) * spec.speaker_formant_spread_hz;
  return v;
}

inline std::vector<SentenceSegment> make_sentence(const SynthSpec &spec,
                                                  int sentence_id) {
  std::mt19937_64 rng(
      derive_seed(spec.rng_seed, "sentence/" + std::to_string(sentence_id)));
  std::uniform_int_distribution<int> nseg(5, 8);
  // Sentence-level formant movement stays mild next to the per-speaker
  // offsets; test sentences are unseen, so this range bounds the
  // train-to-test shift a speaker model must absorb.
  std::uniform_real_distribution<double> mul(0.90, 1.12);
  std::uniform_real_distribution<double> dur(0.6, 1.4);
  std::uniform_real_distribution<double> amp(0.65, 1.0);
  int K = nseg(rng);
  std::vector<SentenceSegment> segs(K);
  for (auto &s : segs) {
    for (int i = 0; i < 3; ++i) s.formant_mul[i] = mul(rng);
    s.dur_weight = dur(rng);
    s.amplitude = amp(rng);
  }
  return segs;
}

// Two-pole Klatt-style resonator with per-sample retuning.
struct Resonator {
  double y1 = 0.0, y2 = 0.0;
  double a = 0.0, b = 0.0, c = 0.0;

  void tune(double freq_hz, double bw_hz, int sr) {
    double r = std::exp(-M_PI * bw_hz / sr);
    c = -r * r;
    b = 2.0 * r * std::cos(kTwoPi * freq_hz / sr);
    a = 1.0 - b - c;
  }
  double step(double x) {
    double y = a * x + b * y1 + c * y2;
    y2 = y1;
    y1 = y;
    return y;
  }
};

// One utterance by source-filter synthesis: a glottal pulse train at the
// speaker/emotion F0, cascaded through three formant resonators whose
// centre frequencies carry speaker identity and whose track follows the
// sentence's segment targets at the emotion's articulation rate.
inline Waveform synthesize_utterance(const SynthSpec &spec, Gender gender,
                                     const SpeakerVoice &voice,
                                     const std::vector<SentenceSegment> &segs,
                                     const EmotionProfile &emo,
                                     const std::string &utt_key) {
  std::mt19937_64 rng(derive_seed(spec.rng_seed, "utt/" + utt_key));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const int sr = spec.sample_rate_hz;
  const std::size_t n = std::size_t(std::lround(spec.utterance_seconds * sr));

  // Per-utterance wander: a baseline voice jitter every class shares (this
  // sets the within-speaker spread the models must absorb) plus extra
  // wander scaled by emotional instability.
  double f0_utt = voice.f0_hz * emo.f0_scale *
                  (1.0 + u(rng) * (0.020 + 0.05 * emo.instability));
  double utt_formant_jitter[3];
  for (double &j : utt_formant_jitter)
    j = 1.0 + 0.012 * gauss(rng) * (1.0 + 0.8 * emo.instability);
  double vibrato_hz = 4.0 + 2.0 * std::fabs(u(rng));
  double vibrato_depth = 0.012 + 0.03 * emo.instability * std::fabs(u(rng));
  double vibrato_phase = u(rng) * M_PI;
  double breath_amp =
      0.015 * std::pow(10.0, emo.breath_delta_db / 20.0) *
      (1.0 + 0.5 * emo.instability * std::fabs(u(rng)));

  // Segment schedule at the emotion's rate; cycles through the sentence.
  const double base_seg_seconds = 0.16;
  struct Piece {
    std::size_t start;
    double f[3];
    double amp;
  };
  std::vector<Piece> pieces;
  std::size_t cursor = 0;
  int seg_i = 0;
  while (cursor < n) {
    const SentenceSegment &s = segs[seg_i % segs.size()];
    Piece p;
    p.start = cursor;
    for (int i = 0; i < 3; ++i) {
      double jitter = 1.0 + 0.04 * emo.instability * gauss(rng);
      p.f[i] = voice.formants_hz[i] * s.formant_mul[i] * emo.formant_scale *
               utt_formant_jitter[i] * jitter;
      p.f[i] = std::clamp(p.f[i], 120.0, sr / 2.0 - 400.0);
    }
    p.amp = s.amplitude * (1.0 + 0.12 * emo.instability * u(rng));
    pieces.push_back(p);
    double dur = base_seg_seconds * s.dur_weight / emo.rate_scale;
    cursor += std::max<std::size_t>(std::size_t(dur * sr), 160);
    ++seg_i;
  }

  auto piece_at = [&](std::size_t t) {
    std::size_t lo = 0;
    for (std::size_t i = 0; i < pieces.size(); ++i)
      if (pieces[i].start <= t) lo = i;
    return lo;
  };

  // Excitation: shaped pulses at the (vibrato-modulated) pitch period plus
  // aspiration noise. The pulse width sets the glottal spectral tilt, one
  // of the emotion cues.
  std::vector<double> excitation(n, 0.0);
  const int pulse_len = 48;
  double pulse_width = std::max(2.0, emo.pulse_width);
  double tpos = 0.0;
  while (tpos < double(n)) {
    std::size_t t0 = std::size_t(tpos);
    double vib =
        1.0 + vibrato_depth *
                  std::sin(kTwoPi * vibrato_hz * tpos / sr + vibrato_phase);
    double jitter = 1.0 + 0.008 * gauss(rng) * (1.0 + emo.instability);
    double f0 = std::max(50.0, f0_utt * vib * jitter);
    for (int i = 0; i < pulse_len && t0 + i < n; ++i) {
      double x = double(i) / pulse_width;
      excitation[t0 + i] += x * std::exp(1.0 - x);
    }
    tpos += double(sr) / f0;
  }
  for (std::size_t t = 0; t < n; ++t) excitation[t] += breath_amp * gauss(rng);

  // Formant tracks with 20 ms linear transitions at piece boundaries.
  const double bw_base[3] = {90.0, 110.0, 140.0};
  const std::size_t blend = std::size_t(0.02 * sr);
  Resonator res[3];
  std::vector<double> out(n, 0.0);
  const int retune_every = 16;
  double cur_f[3] = {pieces[0].f[0], pieces[0].f[1], pieces[0].f[2]};
  for (std::size_t t = 0; t < n; ++t) {
    std::size_t pi = piece_at(t);
    const Piece &p = pieces[pi];
    double alpha = 1.0;
    if (pi + 1 < pieces.size()) {
      std::size_t next_start = pieces[pi + 1].start;
      if (next_start - t < blend && next_start > t)
        alpha = double(next_start - t) / double(blend);
    }
    if (t % retune_every == 0) {
      for (int i = 0; i < 3; ++i) {
        double target =
            alpha < 1.0 && pi + 1 < pieces.size()
                ? alpha * p.f[i] + (1.0 - alpha) * pieces[pi + 1].f[i]
                : p.f[i];
        cur_f[i] = target;
        res[i].tune(cur_f[i], bw_base[i] * emo.bandwidth_scale, sr);
      }
    }
    double x = excitation[t] * p.amp;
    for (auto &r : res) x = r.step(x);
    out[t] = x;
  }

  // Fade-in/out and peak normalization.
  std::size_t fade = std::size_t(0.02 * sr);
  for (std::size_t t = 0; t < fade && t < n; ++t) {
    double g = double(t) / double(fade);
    out[t] *= g;
    out[n - 1 - t] *= g;
  }
  double peak = 1e-12;
  for (double v : out) peak = std::max(peak, std::fabs(v));
  double norm = 0.35 / peak;
  for (double &v : out) v *= norm;

  // Additive channel noise at the configured SNR; an SNR of -inf (or below
  // -90 dB) replaces the signal entirely, which drives downstream accuracy
  // to chance.
  bool pure_noise =
      !std::isfinite(spec.noise_snr_db) || spec.noise_snr_db <= -90.0;
  double rms = 0.0;
  for (double v : out) rms += v * v;
  rms = std::sqrt(rms / double(n));
  double noise_amp =
      pure_noise ? 0.1 : rms * std::pow(10.0, -spec.noise_snr_db / 20.0);
  for (double &v : out) {
    double nz = noise_amp * gauss(rng);
    v = pure_noise ? nz : v + nz;
    v = std::clamp(v, -0.999, 0.999);
  }

  Waveform w;
  w.sample_rate_hz = sr;
  w.samples = std::move(out);
  return w;
}

}  // namespace detail

// Deterministically generates the corpus (WAV tree + manifest.csv +
// spec.used echo) under out_dir and returns the manifest. Parallel workers
// derive their RNG streams from (seed, utterance key), so the output is
// byte-identical at any jobs setting.
inline DatasetManifest generate_corpus(const SynthSpec &spec,
                                       const std::string &out_dir,
                                       int jobs = 1) {
  spec.validate();
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
  if (!fs::exists(out_dir)) throw IoError("cannot create " + out_dir);

  int n_sent = spec.n_sentences_train + spec.n_sentences_test;

  int width =
      std::max(spec.speakers(Gender::kMale), spec.speakers(Gender::kFemale)) >=
              100
          ? 3
          : 2;
  auto speaker_name = [&](Gender g, int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%c%0*d", g == Gender::kMale ? 'm' : 'f',
                  width, i + 1);
    return std::string(buf);
  };

  DatasetManifest manifest;
  manifest.root_dir = out_dir;
  manifest.emotion_set = spec.emotion_set;
  for (auto g : {Gender::kMale, Gender::kFemale})
    for (int s = 0; s < spec.speakers(g); ++s) {
      std::string spk = speaker_name(g, s);
      Role role = s < spec.resolved_claimants(g) ? Role::kClaimant
                                                 : Role::kImposter;
      for (std::size_t e = 0; e < spec.emotion_set.size(); ++e)
        for (int sent = 0; sent < n_sent; ++sent)
          for (int rep = 0; rep < spec.n_repetitions; ++rep) {
            ManifestEntry me;
            me.path = "corpus/" + to_string(g) + "/" + spk + "/" +
                      spec.emotion_set[e] + "/s" + std::to_string(sent) +
                      "_r" + std::to_string(rep) + ".wav";
            me.speaker_id = spk;
            me.gender = g;
            me.emotion = spec.emotion_set[e];
            me.sentence_id = sent;
            me.repetition = rep;
            me.split =
                sent < spec.n_sentences_train ? Split::kTrain : Split::kTest;
            me.role = role;
            manifest.entries.push_back(std::move(me));
          }
    }

  if (spec.write_audio) {
    // Shared deterministic inputs.
    std::map<std::string, detail::SpeakerVoice> voices;
    for (auto g : {Gender::kMale, Gender::kFemale})
      for (int s = 0; s < spec.speakers(g); ++s)
        voices[speaker_name(g, s)] = detail::make_voice(spec, g, s);
    std::vector<std::vector<detail::SentenceSegment>> sentences;
    for (int sent = 0; sent < n_sent; ++sent)
      sentences.push_back(detail::make_sentence(spec, sent));
    std::vector<EmotionProfile> profiles;
    for (std::size_t e = 0; e < spec.emotion_set.size(); ++e)
      profiles.push_back(emotion_profile(spec, spec.emotion_set[e], int(e)));

    // Create the directory tree up front; workers only write files.
    for (const auto &me : manifest.entries)
      fs::create_directories(fs::path(out_dir) /
                             fs::path(me.path).parent_path());

    parallel_for(manifest.entries.size(), jobs, [&](std::size_t i) {
      const ManifestEntry &me = manifest.entries[i];
      int emo_idx = 0;
      for (std::size_t e = 0; e < spec.emotion_set.size(); ++e)
        if (spec.emotion_set[e] == me.emotion) emo_idx = int(e);
      std::string key = to_string(me.gender) + "/" + me.speaker_id + "/" +
                        me.emotion + "/s" + std::to_string(me.sentence_id) +
                        "/r" + std::to_string(me.repetition);
      Waveform w = detail::synthesize_utterance(
          spec, me.gender, voices.at(me.speaker_id),
          sentences[me.sentence_id], profiles[emo_idx], key);
      write_wav(manifest.resolve_path(me), w);
    });
  }

  write_manifest((fs::path(out_dir) / "manifest.csv").string(), manifest);
  write_text_file((fs::path(out_dir) / "spec.used").string(), spec.echo());
  return manifest;
}

// ---------------------------------------------------------------------------
// Corpus summary: counts per (gender, emotion, split, role) plus the derived
// training-set cardinalities the protocol arithmetic depends on.
// ---------------------------------------------------------------------------

struct CorpusSummary {
  std::map<std::string, std::size_t> cell_counts;  // "gender|emotion|split|role"
  std::map<std::string, std::size_t> train_per_gender;
  std::map<std::string, std::size_t> train_per_gender_emotion;  // "g|e"
  std::size_t test_total = 0;
  std::size_t train_total = 0;
  std::map<std::string, std::size_t> speakers_per_gender;
  double total_seconds = 0.0;  // from WAV headers of files that exist

  std::string to_string() const {
    std::ostringstream out;
    out << "train utterances total: " << train_total << "\n";
    out << "test utterances total: " << test_total << "\n";
    for (const auto &[g, n] : train_per_gender)
      out << "train utterances (" << g << "): " << n << "\n";
    for (const auto &[ge, n] : train_per_gender_emotion)
      out << "train utterances (" << ge << "): " << n << "\n";
    for (const auto &[g, n] : speakers_per_gender)
      out << "speakers (" << g << "): " << n << "\n";
    out << "cells (gender|emotion|split|role):\n";
    for (const auto &[k, n] : cell_counts)
      out << "  " << k << ": " << n << "\n";
    out << "total audio seconds (existing files): "
        << format_double(total_seconds, 6) << "\n";
    return out.str();
  }
};

inline CorpusSummary describe_corpus(const DatasetManifest &m) {
  CorpusSummary s;
  std::map<std::string, std::set<std::string>> spk;
  for (const auto &e : m.entries) {
    std::string g = to_string(e.gender);
    s.cell_counts[g + "|" + e.emotion + "|" + to_string(e.split) + "|" +
                  to_string(e.role)]++;
    if (e.split == Split::kTrain) {
      s.train_total++;
      s.train_per_gender[g]++;
      s.train_per_gender_emotion[g + "|" + e.emotion]++;
    } else {
      s.test_total++;
    }
    spk[g].insert(e.speaker_id);
    std::string full = m.resolve_path(e);
    if (std::filesystem::exists(full)) {
      try {
        WavHeader h = read_wav_header(full);
        s.total_seconds += double(h.data_size / 2) / double(h.sample_rate);
      } catch (const Error &) {
        // Unreadable files are a validation concern, not a counting one.
      }
    }
  }
  for (const auto &[g, ids] : spk) s.speakers_per_gender[g] = ids.size();
  return s;
}

}  // namespace casv

#endif  // CASV_SYNTH_HPP
