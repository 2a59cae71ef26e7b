// casv/frontend.hpp

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

#ifndef CASV_FRONTEND_HPP
#define CASV_FRONTEND_HPP

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "casv/common.hpp"
#include "casv/logmath.hpp"
#include "casv/wav.hpp"

namespace casv {

enum class WindowKind { kHamming, kHann, kRect };

inline std::string to_string(WindowKind w) {
  switch (w) {
    case WindowKind::kHamming: return "hamming";
    case WindowKind::kHann: return "hann";
    case WindowKind::kRect: return "rect";
  }
  return "?";
}

inline WindowKind window_from_string(const std::string &s) {
  if (s == "hamming") return WindowKind::kHamming;
  if (s == "hann") return WindowKind::kHann;
  if (s == "rect") return WindowKind::kRect;
  throw ConfigInvalid("unknown window '" + s + "'");
}

// MFCC extraction parameters. Defaults: 16 ms frames with 9 ms overlap,
// Hamming window, 256-point FFT, 26 mel filters, 13 cepstra including c0.
struct FrontendConfig {
  double preemphasis_alpha = 0.97;
  double frame_ms = 16.0;
  double overlap_ms = 9.0;
  WindowKind window = WindowKind::kHamming;
  int n_fft = 256;
  int n_mel_filters = 26;
  int n_ceps = 13;
  double fmin_hz = 0.0;
  double fmax_hz = 8000.0;
  double log_floor = 1e-10;  // floor on mel energies before log
  bool apply_cmn = false;
  bool add_deltas = false;
  bool add_delta_deltas = false;

  int frame_len_samples(int sample_rate_hz) const {
    return static_cast<int>(std::lround(frame_ms * sample_rate_hz / 1000.0));
  }
  int hop_samples(int sample_rate_hz) const {
    return static_cast<int>(
        std::lround((frame_ms - overlap_ms) * sample_rate_hz / 1000.0));
  }

  int feature_dim() const {
    int d = n_ceps;
    if (add_deltas) d += n_ceps;
    if (add_delta_deltas) d += n_ceps;
    return d;
  }

  void validate(int sample_rate_hz) const {
    if (preemphasis_alpha < 0.0 || preemphasis_alpha >= 1.0)
      throw ConfigInvalid("preemphasis_alpha must be in [0,1)");
    if (!(frame_ms > overlap_ms) || overlap_ms < 0.0)
      throw ConfigInvalid("need frame_ms > overlap_ms >= 0");
    if (n_ceps < 1 || n_ceps > n_mel_filters)
      throw ConfigInvalid("need 1 <= n_ceps <= n_mel_filters");
    if (!(fmin_hz < fmax_hz) || fmax_hz > sample_rate_hz / 2.0)
      throw ConfigInvalid("need fmin_hz < fmax_hz <= sample_rate/2");
    if (n_fft < frame_len_samples(sample_rate_hz))
      throw ConfigInvalid("n_fft smaller than the frame length");
    if (n_fft < 2 || (n_fft & (n_fft - 1)) != 0)
      throw ConfigInvalid("n_fft must be a power of two");
    if (add_delta_deltas && !add_deltas)
      throw ConfigInvalid("delta-deltas require deltas");
    if (log_floor <= 0.0) throw ConfigInvalid("log_floor must be positive");
  }

  // Participates in feature-cache keys: any change invalidates cached
  // features for an utterance.
  std::string fingerprint() const {
    std::string s;
    s += format_double17(preemphasis_alpha) + "|";
    s += format_double17(frame_ms) + "|" + format_double17(overlap_ms) + "|";
    s += to_string(window) + "|" + std::to_string(n_fft) + "|";
    s += std::to_string(n_mel_filters) + "|" + std::to_string(n_ceps) + "|";
    s += format_double17(fmin_hz) + "|" + format_double17(fmax_hz) + "|";
    s += format_double17(log_floor) + "|";
    s += std::string(apply_cmn ? "c1" : "c0") + (add_deltas ? "d1" : "d0") +
         (add_delta_deltas ? "dd1" : "dd0");
    return s;
  }
};

// Overlapping windowed frames cut from one waveform.
struct FrameSet {
  Matrix frames;  // n_frames x frame_len_samples
  int frame_len_samples = 0;
  int hop_samples = 0;
  int sample_rate_hz = 0;
};

struct FrameMeta {
  int frame_len_samples = 0;
  int hop_samples = 0;
  int sample_rate_hz = 0;
};

// The observation sequence O = o_1 ... o_T as a T x D matrix.
struct FeatureSequence {
  Matrix vectors;
  FrameMeta meta;

  std::size_t num_frames() const { return vectors.rows; }
  std::size_t dim() const { return vectors.cols; }
};

// y[0] = x[0], y[t] = x[t] - alpha * x[t-1].
inline Waveform pre_emphasize(const Waveform &w, double alpha) {
  Waveform out;
  out.sample_rate_hz = w.sample_rate_hz;
  out.samples.resize(w.samples.size());
  if (w.samples.empty()) return out;
  out.samples[0] = w.samples[0];
  for (std::size_t t = 1; t < w.samples.size(); ++t)
    out.samples[t] = w.samples[t] - alpha * w.samples[t - 1];
  return out;
}

inline std::vector<double> make_window(WindowKind kind, int n) {
  std::vector<double> win(n, 1.0);
  if (n <= 1) return win;
  for (int i = 0; i < n; ++i) {
    double phase = kTwoPi * i / (n - 1);
    switch (kind) {
      case WindowKind::kHamming:
        win[i] = 0.54 - 0.46 * std::cos(phase);
        break;
      case WindowKind::kHann:
        win[i] = 0.5 - 0.5 * std::cos(phase);
        break;
      case WindowKind::kRect:
        break;
    }
  }
  return win;
}

// Slices w into frames of cfg.frame_ms with hop (frame_ms - overlap_ms) and
// applies the window. Frame count is floor((N - L) / hop) + 1.
inline FrameSet frame_signal(const Waveform &w, const FrontendConfig &cfg) {
  cfg.validate(w.sample_rate_hz);
  int len = cfg.frame_len_samples(w.sample_rate_hz);
  int hop = cfg.hop_samples(w.sample_rate_hz);
  std::size_t n = w.samples.size();
  if (n < static_cast<std::size_t>(len))
    throw SignalTooShort("signal of " + std::to_string(n) +
                         " samples is shorter than one frame (" +
                         std::to_string(len) + ")");
  std::size_t n_frames = (n - len) / hop + 1;
  std::vector<double> win = make_window(cfg.window, len);

  FrameSet fs;
  fs.frame_len_samples = len;
  fs.hop_samples = hop;
  fs.sample_rate_hz = w.sample_rate_hz;
  fs.frames = Matrix(n_frames, len);
  for (std::size_t f = 0; f < n_frames; ++f) {
    const double *src = w.samples.data() + f * hop;
    double *dst = fs.frames.row(f);
    for (int i = 0; i < len; ++i) dst[i] = src[i] * win[i];
  }
  return fs;
}

// ---------------------------------------------------------------------------
// Spectral machinery: iterative radix-2 FFT (n_fft is validated to be a
// power of two), HTK-style mel filterbank, orthonormal DCT-II.
// ---------------------------------------------------------------------------

inline void fft_radix2(std::vector<std::complex<double>> &a) {
  std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    double ang = -kTwoPi / double(len);
    std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = a[i + k];
        std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

// Magnitude-squared spectrum of one frame, zero padded to n_fft;
// returns n_fft/2 + 1 bins.
inline std::vector<double> power_spectrum(const double *frame, int frame_len,
                                          int n_fft) {
  std::vector<std::complex<double>> buf(n_fft, {0.0, 0.0});
  for (int i = 0; i < frame_len; ++i) buf[i] = {frame[i], 0.0};
  fft_radix2(buf);
  std::vector<double> ps(n_fft / 2 + 1);
  for (int k = 0; k <= n_fft / 2; ++k) ps[k] = std::norm(buf[k]);
  return ps;
}

inline double hz_to_mel(double hz) {
  return 2595.0 * std::log10(1.0 + hz / 700.0);
}

inline double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

// Triangular filters with centers equally spaced on the mel scale,
// evaluated at FFT-bin frequencies. Rows are filters.
struct MelFilterbank {
  Matrix weights;                      // n_filters x (n_fft/2 + 1)
  std::vector<double> center_freq_hz;  // n_filters
};

inline MelFilterbank make_mel_filterbank(int n_filters, int n_fft,
                                         int sample_rate_hz, double fmin_hz,
                                         double fmax_hz) {
  int n_bins = n_fft / 2 + 1;
  double mel_lo = hz_to_mel(fmin_hz);
  double mel_hi = hz_to_mel(fmax_hz);
  std::vector<double> edges(n_filters + 2);
  for (int i = 0; i < n_filters + 2; ++i)
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (n_filters + 1));

  MelFilterbank fb;
  fb.weights = Matrix(n_filters, n_bins);
  fb.center_freq_hz.resize(n_filters);
  for (int f = 0; f < n_filters; ++f) {
    double lo = edges[f], mid = edges[f + 1], hi = edges[f + 2];
    fb.center_freq_hz[f] = mid;
    double row_sum = 0.0;
    for (int k = 0; k < n_bins; ++k) {
      double hz = double(sample_rate_hz) * k / n_fft;
      double wgt = 0.0;
      if (hz > lo && hz < mid)
        wgt = (hz - lo) / (mid - lo);
      else if (hz >= mid && hz < hi)
        wgt = (hi - hz) / (hi - mid);
      fb.weights.at(f, k) = wgt;
      row_sum += wgt;
    }
    if (row_sum <= 0.0)
      throw ConfigInvalid("mel filter " + std::to_string(f) +
                          " covers no FFT bin (empty filterbank band)");
  }
  return fb;
}

// Orthonormal DCT-II basis, n_ceps x n_in. Rows are orthonormal, so the
// n_in x n_in version satisfies M * M^T = I.
inline Matrix make_dct_matrix(int n_ceps, int n_in) {
  Matrix m(n_ceps, n_in);
  double norm0 = std::sqrt(1.0 / n_in);
  double norm = std::sqrt(2.0 / n_in);
  for (int k = 0; k < n_ceps; ++k)
    for (int n = 0; n < n_in; ++n)
      m.at(k, n) = (k == 0 ? norm0 : norm) *
                   std::cos(M_PI * k * (2.0 * n + 1.0) / (2.0 * n_in));
  return m;
}

namespace detail {

// Regression deltas over a +/-2 frame window with edge replication.
inline Matrix compute_deltas(const Matrix &x) {
  const int kWin = 2;
  double denom = 0.0;
  for (int d = 1; d <= kWin; ++d) denom += 2.0 * d * d;
  Matrix out(x.rows, x.cols);
  auto clamp_row = [&](long t) {
    if (t < 0) return std::size_t(0);
    if (t >= long(x.rows)) return x.rows - 1;
    return std::size_t(t);
  };
  for (std::size_t t = 0; t < x.rows; ++t)
    for (std::size_t c = 0; c < x.cols; ++c) {
      double num = 0.0;
      for (int d = 1; d <= kWin; ++d)
        num += d * (x.at(clamp_row(long(t) + d), c) -
                    x.at(clamp_row(long(t) - d), c));
      out.at(t, c) = num / denom;
    }
  return out;
}

}  // namespace detail

// Full MFCC pipeline over a FrameSet: power spectrum, mel energies, floored
// natural log, orthonormal DCT-II keeping coefficients 0..n_ceps-1, then
// optional per-utterance cepstral mean normalization and delta appending.
inline FeatureSequence mfcc(const FrameSet &frames, const FrontendConfig &cfg) {
  if (cfg.n_fft < frames.frame_len_samples)
    throw ConfigInvalid("n_fft smaller than the frame length");
  MelFilterbank fb =
      make_mel_filterbank(cfg.n_mel_filters, cfg.n_fft, frames.sample_rate_hz,
                          cfg.fmin_hz, cfg.fmax_hz);
  Matrix dct = make_dct_matrix(cfg.n_ceps, cfg.n_mel_filters);

  std::size_t T = frames.frames.rows;
  Matrix ceps(T, cfg.n_ceps);
  std::vector<double> logmel(cfg.n_mel_filters);
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<double> ps = power_spectrum(
        frames.frames.row(t), frames.frame_len_samples, cfg.n_fft);
    for (int f = 0; f < cfg.n_mel_filters; ++f) {
      double e = 0.0;
      const double *wrow = fb.weights.row(f);
      for (std::size_t k = 0; k < ps.size(); ++k) e += wrow[k] * ps[k];
      logmel[f] = std::log(e < cfg.log_floor ? cfg.log_floor : e);
    }
    for (int k = 0; k < cfg.n_ceps; ++k) {
      double acc = 0.0;
      const double *drow = dct.row(k);
      for (int f = 0; f < cfg.n_mel_filters; ++f) acc += drow[f] * logmel[f];
      ceps.at(t, k) = acc;
    }
  }

  if (cfg.apply_cmn && T > 0) {
    for (int k = 0; k < cfg.n_ceps; ++k) {
      double mean = 0.0;
      for (std::size_t t = 0; t < T; ++t) mean += ceps.at(t, k);
      mean /= double(T);
      for (std::size_t t = 0; t < T; ++t) ceps.at(t, k) -= mean;
    }
  }

  Matrix out = ceps;
  if (cfg.add_deltas) {
    Matrix d1 = detail::compute_deltas(ceps);
    Matrix d2;
    if (cfg.add_delta_deltas) d2 = detail::compute_deltas(d1);
    Matrix joined(T, cfg.feature_dim());
    for (std::size_t t = 0; t < T; ++t) {
      for (int k = 0; k < cfg.n_ceps; ++k) {
        joined.at(t, k) = ceps.at(t, k);
        joined.at(t, cfg.n_ceps + k) = d1.at(t, k);
        if (cfg.add_delta_deltas)
          joined.at(t, 2 * cfg.n_ceps + k) = d2.at(t, k);
      }
    }
    out = joined;
  }

  FeatureSequence seq;
  seq.vectors = std::move(out);
  seq.meta = {frames.frame_len_samples, frames.hop_samples,
              frames.sample_rate_hz};
  return seq;
}

// Waveform-to-features convenience used everywhere downstream.
inline FeatureSequence extract_features(const Waveform &w,
                                        const FrontendConfig &cfg) {
  cfg.validate(w.sample_rate_hz);
  Waveform pe = pre_emphasize(w, cfg.preemphasis_alpha);
  return mfcc(frame_signal(pe, cfg), cfg);
}

}  // namespace casv

#endif  // CASV_FRONTEND_HPP
