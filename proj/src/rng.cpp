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

#include "sharp/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace sharp {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) {
  std::uint64_t k = mix64(seed);
  k = mix64(k ^ a);
  k = mix64(k ^ b);
  k = mix64(k ^ c);
  return k;
}

int DrawSource::index_below(int bound) {
  if (bound < 1) throw std::invalid_argument("index_below: bound must be >= 1");
  int idx = static_cast<int>(u01() * static_cast<double>(bound));
  return idx < bound ? idx : bound - 1;
}

double Rng::u01() {
  // 53 uniform mantissa bits in [0, 1).
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double PlaybackSource::u01() {
  if (pos_ >= trace_->size())
    throw std::out_of_range("rng trace exhausted during replay");
  return (*trace_)[pos_++];
}

}  // namespace sharp
