// Copyright 2026 The riskstrat Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "riskstrat/rng.hpp"

#include <cmath>

#include "riskstrat/error.hpp"

namespace riskstrat {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_input: return "invalid_input";
    case ErrorCode::io: return "io";
    case ErrorCode::no_contrast: return "no_contrast";
    case ErrorCode::non_convergence: return "non_convergence";
    case ErrorCode::insufficient_data: return "insufficient_data";
    case ErrorCode::degenerate: return "degenerate";
  }
  return "unknown";
}

std::uint64_t derive_key(std::initializer_list<std::uint64_t> words) noexcept {
  std::uint64_t h = 0x6a09e667f3bcc908ULL;
  for (auto w : words) h = mix64(h ^ mix64(w + 0x632be59bd9b4e019ULL));
  return h;
}

std::uint64_t KeyedStream::below(std::uint64_t n) noexcept {
  // Rejection keeps the draw exactly uniform.
  const std::uint64_t limit = max() - max() % n;
  std::uint64_t v = next_u64();
  while (v >= limit) v = next_u64();
  return v % n;
}

double KeyedStream::exponential(double rate) noexcept {
  if (!(rate > 0.0)) return std::numeric_limits<double>::infinity();
  return -std::log(uniform()) / rate;
}

}  // namespace riskstrat
