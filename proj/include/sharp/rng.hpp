// Copyright 2026 The SHARP Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SHARP_RNG_HPP_
#define SHARP_RNG_HPP_

#include <cstdint>
#include <random>
#include <vector>

namespace sharp {

// SplitMix64 finalizer. Stateless mixing step used to derive independent
// stream keys from (run_seed, salt...) tuples.
std::uint64_t mix64(std::uint64_t x);

// Keyed derivation of a stream seed. Every random stream in the lab is
// obtained this way from the single run seed; no ambient entropy anywhere.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                          std::uint64_t b = 0, std::uint64_t c = 0);

// Uniform draw source. All stochastic choices flow through u01() so that a
// recorded trace of doubles replays a rollout bit-exactly.
class DrawSource {
 public:
  virtual ~DrawSource() = default;
  virtual double u01() = 0;

  // floor(u01() * bound); bound >= 1. Replayable from the double trace.
  int index_below(int bound);
};

// mt19937_64-backed stream with a 53-bit mantissa uniform. The engine and
// the bit-to-double conversion are both pinned by the standard, so draws
// are identical across platforms.
class Rng final : public DrawSource {
 public:
  explicit Rng(std::uint64_t key) : engine_(key), key_(key) {}
  double u01() override;
  std::uint64_t next_u64() { return engine_(); }
  std::uint64_t key() const { return key_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t key_;
};

// Wraps a stream and appends every draw to a trace.
class RecordingSource final : public DrawSource {
 public:
  RecordingSource(std::uint64_t key, std::vector<double>* trace)
      : rng_(key), trace_(trace) {}
  double u01() override {
    double u = rng_.u01();
    trace_->push_back(u);
    return u;
  }

 private:
  Rng rng_;
  std::vector<double>* trace_;
};

// Replays a recorded trace; throws if the consumer outruns the recording.
class PlaybackSource final : public DrawSource {
 public:
  explicit PlaybackSource(const std::vector<double>& trace)
      : trace_(&trace) {}
  double u01() override;
  std::size_t consumed() const { return pos_; }

 private:
  const std::vector<double>* trace_;
  std::size_t pos_ = 0;
};

}  // namespace sharp

#endif  // SHARP_RNG_HPP_
