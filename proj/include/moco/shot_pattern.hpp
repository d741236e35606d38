#pragma once

#include <nlohmann/json_fwd.hpp>
#include <vector>

#include "moco/errors.hpp"

namespace moco {

// Assignment of acquired phase-encode rows to shots. Shot ids are 1..S;
// shot_of_row[r] == 0 means row r is not acquired. Shots partition the
// acquired rows, every shot owns at least one row, and the DC row (H/2)
// belongs to shot 2.
struct ShotPattern {
  int H = 0;
  int S = 0;
  int R = 1;
  int acs = 0;
  std::vector<int> shot_of_row;

  int dc_row() const { return H / 2; }
  int num_acquired() const;
  std::vector<int> acquired_rows() const;
  std::vector<int> rows_of_shot(int s) const;

  nlohmann::json to_json() const;
  static ShotPattern from_json(const nlohmann::json& j);
};

// Builds the multi-shot undersampling pattern: acquired rows are every R-th
// row (grid phased so the DC row is on it) plus a contiguous ACS block of
// `acs` rows around DC. Rows sorted by |k_y| are banded into shots: the
// lowest-|k_y| band goes to shot 2, the next bands round-robin over the
// mid shots (1, 3, 4, ... for S >= 4), and the outermost rows are split
// between the last two shots. With S = 6 this reproduces the usual energy
// ordering on natural images: shot 2 carries the most spectral energy,
// shots 5 and 6 almost none.
ShotPattern make_shot_pattern(int H, int S, int R, int acs);

}  // namespace moco
