// casv/common.hpp

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

#ifndef CASV_COMMON_HPP
#define CASV_COMMON_HPP

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace casv {

// ---------------------------------------------------------------------------
// Error taxonomy. Each operation documents which of these it can throw.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string &msg) : std::runtime_error(msg) {}
};

#define CASV_DEFINE_ERROR(NAME)                                   \
  class NAME : public Error {                                     \
   public:                                                        \
    explicit NAME(const std::string &msg) : Error(#NAME ": " + msg) {} \
  }

CASV_DEFINE_ERROR(IoError);
CASV_DEFINE_ERROR(MalformedWav);
CASV_DEFINE_ERROR(UnsupportedFormat);
CASV_DEFINE_ERROR(SignalTooShort);
CASV_DEFINE_ERROR(ConfigInvalid);
CASV_DEFINE_ERROR(DimensionMismatch);
CASV_DEFINE_ERROR(InsufficientData);
CASV_DEFINE_ERROR(MissingModel);
CASV_DEFINE_ERROR(UnknownClaimant);
CASV_DEFINE_ERROR(IntegrityError);
CASV_DEFINE_ERROR(DegenerateTrialSet);
CASV_DEFINE_ERROR(SpecInvalid);
CASV_DEFINE_ERROR(NumericalError);

#undef CASV_DEFINE_ERROR

// ---------------------------------------------------------------------------
// Dense row-major matrix of doubles. Feature sequences are T x D matrices;
// everything in the toolkit that looks like a table of reals uses this.
// ---------------------------------------------------------------------------

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // rows * cols, row-major

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double &at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double *row(std::size_t r) { return data.data() + r * cols; }
  const double *row(std::size_t r) const { return data.data() + r * cols; }

  bool operator==(const Matrix &o) const {
    return rows == o.rows && cols == o.cols && data == o.data;
  }
};

// ---------------------------------------------------------------------------
// Hashing. FNV-1a for file integrity records, SplitMix64 for deriving
// independent RNG streams from (seed, key) pairs.
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a64(const void *bytes, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto *p = static_cast<const unsigned char *>(bytes);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a64(const std::string &s) {
  return fnv1a64(s.data(), s.size());
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives a child stream seed from a base seed and a textual key. Used so
// that work items synthesized or trained in parallel draw from streams that
// do not depend on scheduling order.
inline std::uint64_t derive_seed(std::uint64_t base, const std::string &key) {
  return splitmix64(base ^ fnv1a64(key));
}

// ---------------------------------------------------------------------------
// Text helpers.
// ---------------------------------------------------------------------------

// 17 significant digits round-trip an IEEE double exactly.
inline std::string format_double17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string format_double(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
  return buf;
}

// strtod-based parse; accepts "inf"/"-inf" (streams do not).
inline double parse_double(const std::string &tok) {
  const char *begin = tok.c_str();
  char *end = nullptr;
  double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw IoError("bad float token '" + tok + "'");
  return v;
}

inline long parse_long(const std::string &tok) {
  const char *begin = tok.c_str();
  char *end = nullptr;
  long v = std::strtol(begin, &end, 10);
  if (end == begin || *end != '\0')
    throw IoError("bad integer token '" + tok + "'");
  return v;
}

inline std::vector<std::string> split(const std::string &line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string trim(const std::string &s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::string read_text_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("short write to " + path);
}

inline std::uint64_t hash_file(const std::string &path) {
  return fnv1a64(read_text_file(path));
}

// ---------------------------------------------------------------------------
// Parallel map over an index range. Results must be written into
// preallocated, per-index slots by fn, which keeps reductions order
// independent of scheduling. jobs <= 1 runs inline.
// ---------------------------------------------------------------------------

inline void parallel_for(std::size_t n, int jobs,
                         const std::function<void(std::size_t)> &fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::size_t nthreads = std::min<std::size_t>(jobs, n);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(nthreads);
  for (std::size_t t = 0; t < nthreads; ++t) {
    pool.emplace_back([&, t]() {
      try {
        for (std::size_t i = t; i < n; i += nthreads) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto &th : pool) th.join();
  for (auto &e : errors)
    if (e) std::rethrow_exception(e);
}

inline int default_jobs() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

}  // namespace casv

#endif  // CASV_COMMON_HPP
