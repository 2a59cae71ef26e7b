// casv/wav.hpp

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

#ifndef CASV_WAV_HPP
#define CASV_WAV_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "casv/common.hpp"

namespace casv {

// Raw speech signal. Samples are in [-1, 1]; after loading 16-bit PCM every
// sample is k/32768 for an integer k.
struct Waveform {
  std::vector<double> samples;
  int sample_rate_hz = 0;

  std::size_t size() const { return samples.size(); }
  double duration_seconds() const {
    return sample_rate_hz > 0 ? double(samples.size()) / sample_rate_hz : 0.0;
  }
};

namespace detail {

inline std::uint32_t read_u32le(const unsigned char *p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 |
         std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}

inline std::uint16_t read_u16le(const unsigned char *p) {
  return std::uint16_t(p[0]) | std::uint16_t(p[1]) << 8;
}

inline void put_u32le(std::string &out, std::uint32_t v) {
  out.push_back(char(v & 0xff));
  out.push_back(char((v >> 8) & 0xff));
  out.push_back(char((v >> 16) & 0xff));
  out.push_back(char((v >> 24) & 0xff));
}

inline void put_u16le(std::string &out, std::uint16_t v) {
  out.push_back(char(v & 0xff));
  out.push_back(char((v >> 8) & 0xff));
}

}  // namespace detail

// Parsed "fmt " chunk, exposed separately so header-level checks (sample
// rate validation in manifests) can avoid decoding sample data.
struct WavHeader {
  std::uint16_t format_tag = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits_per_sample = 0;
  std::size_t data_offset = 0;     // byte offset of PCM payload
  std::size_t data_size = 0;       // payload size in bytes
};

inline WavHeader parse_wav_header(const std::string &bytes,
                                  const std::string &name) {
  const auto *p = reinterpret_cast<const unsigned char *>(bytes.data());
  if (bytes.size() < 12 || std::memcmp(p, "RIFF", 4) != 0 ||
      std::memcmp(p + 8, "WAVE", 4) != 0)
    throw MalformedWav(name + ": not a RIFF/WAVE file");

  WavHeader h;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    std::uint32_t chunk_size = detail::read_u32le(p + pos + 4);
    const bool is_fmt = std::memcmp(p + pos, "fmt ", 4) == 0;
    const bool is_data = std::memcmp(p + pos, "data", 4) == 0;
    std::size_t body = pos + 8;
    if (is_fmt) {
      if (body + 16 > bytes.size())
        throw MalformedWav(name + ": truncated fmt chunk");
      h.format_tag = detail::read_u16le(p + body);
      h.channels = detail::read_u16le(p + body + 2);
      h.sample_rate = detail::read_u32le(p + body + 4);
      h.bits_per_sample = detail::read_u16le(p + body + 14);
      have_fmt = true;
    } else if (is_data) {
      h.data_offset = body;
      h.data_size = chunk_size;
      if (body + chunk_size > bytes.size())
        throw MalformedWav(name + ": data chunk extends past end of file");
    }
    // Chunks are word-aligned.
    pos = body + chunk_size + (chunk_size & 1);
  }
  if (!have_fmt) throw MalformedWav(name + ": missing fmt chunk");
  if (h.data_offset == 0) throw MalformedWav(name + ": missing data chunk");
  if (h.sample_rate == 0) throw MalformedWav(name + ": zero sample rate");

  if (h.format_tag != 1)
    throw UnsupportedFormat(name + ": compressed or non-PCM codec (tag " +
                            std::to_string(h.format_tag) + ")");
  if (h.channels != 1)
    throw UnsupportedFormat(name + ": " + std::to_string(h.channels) +
                            " channels; only mono is supported");
  if (h.bits_per_sample != 16)
    throw UnsupportedFormat(name + ": " + std::to_string(h.bits_per_sample) +
                            "-bit samples; only 16-bit PCM is supported");
  return h;
}

// Reads just the header of a WAV file; used for manifest validation.
inline WavHeader read_wav_header(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char buf[512];
  in.read(buf, sizeof(buf));
  std::string head(buf, static_cast<std::size_t>(in.gcount()));
  // Header parsing needs the data chunk bounds; re-read whole file only if
  // the data chunk was not found in the first block.
  try {
    return parse_wav_header(head, path);
  } catch (const MalformedWav &) {
    return parse_wav_header(read_text_file(path), path);
  }
}

// Loads a mono 16-bit PCM RIFF/WAVE file. Samples scale to [-1, 1] by
// dividing by 32768.
inline Waveform load_wav(const std::string &path) {
  std::string bytes = read_text_file(path);
  WavHeader h = parse_wav_header(bytes, path);
  if (h.data_size % 2 != 0)
    throw MalformedWav(path + ": odd PCM payload size");

  Waveform w;
  w.sample_rate_hz = static_cast<int>(h.sample_rate);
  std::size_t n = h.data_size / 2;
  w.samples.resize(n);
  const auto *p =
      reinterpret_cast<const unsigned char *>(bytes.data()) + h.data_offset;
  for (std::size_t i = 0; i < n; ++i) {
    auto u = detail::read_u16le(p + 2 * i);
    auto s = static_cast<std::int16_t>(u);
    w.samples[i] = double(s) / 32768.0;
  }
  return w;
}

// Writes mono 16-bit PCM; values are clipped to [-1, 1) and quantized with
// round-to-nearest.
inline void write_wav(const std::string &path, const Waveform &w) {
  std::string pcm;
  pcm.reserve(w.samples.size() * 2);
  for (double v : w.samples) {
    double x = std::clamp(v, -1.0, 32767.0 / 32768.0);
    auto s = static_cast<std::int16_t>(std::lrint(x * 32768.0));
    detail::put_u16le(pcm, static_cast<std::uint16_t>(s));
  }

  std::string out;
  std::uint32_t data_size = static_cast<std::uint32_t>(pcm.size());
  std::uint32_t sr = static_cast<std::uint32_t>(w.sample_rate_hz);
  out += "RIFF";
  detail::put_u32le(out, 36 + data_size);
  out += "WAVE";
  out += "fmt ";
  detail::put_u32le(out, 16);
  detail::put_u16le(out, 1);   // PCM
  detail::put_u16le(out, 1);   // mono
  detail::put_u32le(out, sr);
  detail::put_u32le(out, sr * 2);  // byte rate
  detail::put_u16le(out, 2);       // block align
  detail::put_u16le(out, 16);      // bits per sample
  out += "data";
  detail::put_u32le(out, data_size);
  out += pcm;
  write_text_file(path, out);
}

}  // namespace casv

#endif  // CASV_WAV_HPP
