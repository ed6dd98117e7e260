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

#ifndef SHARP_GAME_IO_HPP_
#define SHARP_GAME_IO_HPP_

#include <iosfwd>
#include <string>

#include "sharp/game.hpp"

namespace sharp {

// Game file format: header line "n=<count>", then one line per coalition
// "<bitmask-decimal> <value>" (bit m set = agent m present). Every one of
// the 2^n coalitions must appear exactly once. Throws ParseError with the
// offending line number on malformed or incomplete input.
CooperativeGame read_game(std::istream& in);
CooperativeGame read_game_file(const std::string& path);

void write_game(const CooperativeGame& game, std::ostream& out);
void write_game_file(const CooperativeGame& game, const std::string& path);

}  // namespace sharp

#endif  // SHARP_GAME_IO_HPP_
