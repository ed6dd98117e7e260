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

#include "sharp/game_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "sharp/errors.hpp"

namespace sharp {

CooperativeGame read_game(std::istream& in) {
  std::string line;
  long line_no = 0;

  if (!std::getline(in, line)) throw ParseError("empty game file", 1);
  ++line_no;
  if (line.rfind("n=", 0) != 0)
    throw ParseError("expected header 'n=<count>'", line_no);
  int n = 0;
  try {
    std::size_t pos = 0;
    n = std::stoi(line.substr(2), &pos);
    if (pos != line.size() - 2) throw std::invalid_argument("trailing junk");
  } catch (const std::exception&) {
    throw ParseError("bad agent count in header", line_no);
  }
  if (n < 1 || n > kMaxExactAgents)
    throw ParseError("agent count must be in [1, " +
                         std::to_string(kMaxExactAgents) + "]",
                     line_no);

  const std::size_t total = std::size_t{1} << n;
  std::vector<double> values(total);
  std::vector<bool> seen(total, false);
  std::size_t filled = 0;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    unsigned long mask = 0;
    double value = 0.0;
    if (!(row >> mask >> value))
      throw ParseError("expected '<bitmask> <value>'", line_no);
    std::string extra;
    if (row >> extra) throw ParseError("trailing fields", line_no);
    if (mask >= total)
      throw ParseError("coalition bitmask out of range for n=" +
                           std::to_string(n),
                       line_no);
    if (!std::isfinite(value))
      throw ParseError("coalition value must be finite", line_no);
    if (seen[mask])
      throw ParseError("duplicate coalition " + std::to_string(mask), line_no);
    seen[mask] = true;
    values[mask] = value;
    ++filled;
  }

  if (filled != total) {
    for (std::size_t mask = 0; mask < total; ++mask) {
      if (!seen[mask])
        throw ParseError("missing coalition " + std::to_string(mask),
                         line_no + 1);
    }
  }
  return CooperativeGame::from_table(n, std::move(values));
}

CooperativeGame read_game_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open game file: " + path, 0);
  return read_game(in);
}

void write_game(const CooperativeGame& game, std::ostream& out) {
  const int n = game.n_agents();
  out << "n=" << n << "\n";
  const std::uint32_t total = 1u << n;
  char buf[40];
  for (std::uint32_t mask = 0; mask < total; ++mask) {
    std::snprintf(buf, sizeof buf, "%.17g",
                  game.value(Coalition::from_mask(mask)));
    out << mask << " " << buf << "\n";
  }
}

void write_game_file(const CooperativeGame& game, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open output file: " + path, 0);
  write_game(game, out);
}

}  // namespace sharp
