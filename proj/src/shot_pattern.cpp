#include "moco/shot_pattern.hpp"

#include <algorithm>
#include <cstdlib>
#include <nlohmann/json.hpp>

namespace moco {

int ShotPattern::num_acquired() const {
  int n = 0;
  for (int s : shot_of_row) n += (s != 0);
  return n;
}

std::vector<int> ShotPattern::acquired_rows() const {
  std::vector<int> rows;
  for (int r = 0; r < H; ++r)
    if (shot_of_row[r] != 0) rows.push_back(r);
  return rows;
}

std::vector<int> ShotPattern::rows_of_shot(int s) const {
  std::vector<int> rows;
  for (int r = 0; r < H; ++r)
    if (shot_of_row[r] == s) rows.push_back(r);
  return rows;
}

nlohmann::json ShotPattern::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < H; ++r)
    if (shot_of_row[r] != 0) rows.push_back({r, shot_of_row[r]});
  return {{"H", H}, {"S", S}, {"R", R}, {"acs", acs}, {"rows", rows}};
}

ShotPattern ShotPattern::from_json(const nlohmann::json& j) {
  ShotPattern p;
  p.H = j.at("H").get<int>();
  p.S = j.at("S").get<int>();
  p.R = j.at("R").get<int>();
  p.acs = j.at("acs").get<int>();
  if (p.H < 2 || p.S < 2) throw FormatError("shot pattern: bad H or S");
  p.shot_of_row.assign(static_cast<std::size_t>(p.H), 0);
  for (const auto& e : j.at("rows")) {
    const int r = e.at(0).get<int>();
    const int s = e.at(1).get<int>();
    if (r < 0 || r >= p.H || s < 1 || s > p.S) throw FormatError("shot pattern: bad row entry");
    if (p.shot_of_row[r] != 0) throw FormatError("shot pattern: duplicate row");
    p.shot_of_row[r] = s;
  }
  for (int s = 1; s <= p.S; ++s)
    if (p.rows_of_shot(s).empty()) throw FormatError("shot pattern: empty shot");
  return p;
}

ShotPattern make_shot_pattern(int H, int S, int R, int acs) {
  if (H < 2) throw ParameterError("make_shot_pattern: H must be >= 2");
  if (S < 2) throw ParameterError("make_shot_pattern: S must be >= 2");
  if (R < 1) throw ParameterError("make_shot_pattern: R must be >= 1");
  if (acs < 0) throw ParameterError("make_shot_pattern: acs must be >= 0");
  if (acs > H) throw ParameterError("make_shot_pattern: acs exceeds H");

  const int dc = H / 2;
  std::vector<bool> acquired(static_cast<std::size_t>(H), false);
  // Undersampling grid phased through the DC row.
  for (int r = dc % R; r < H; r += R) acquired[static_cast<std::size_t>(r)] = true;
  // Contiguous ACS block around DC.
  const int acs_lo = dc - acs / 2;
  for (int r = std::max(0, acs_lo); r < std::min(H, acs_lo + acs); ++r)
    acquired[static_cast<std::size_t>(r)] = true;

  std::vector<int> rows;
  for (int r = 0; r < H; ++r)
    if (acquired[static_cast<std::size_t>(r)]) rows.push_back(r);
  const int n = static_cast<int>(rows.size());
  if (S > n) throw ConfigError("make_shot_pattern: more shots than acquired rows");

  // Sort by |k_y| (ties broken toward negative k_y for determinism).
  std::sort(rows.begin(), rows.end(), [dc](int a, int b) {
    const int ka = std::abs(a - dc), kb = std::abs(b - dc);
    return ka != kb ? ka < kb : a < b;
  });

  // Band order: shot 2 takes the low-frequency block, mid shots round-robin,
  // the last two shots split the periphery.
  std::vector<int> mid, top;
  if (S == 2) {
    mid = {1};
  } else if (S == 3) {
    mid = {1};
    top = {3};
  } else {
    mid = {1};
    for (int s = 3; s <= S - 2; ++s) mid.push_back(s);
    top = {S - 1, S};
  }

  // Per-shot quotas; the remainder goes to the low-frequency end first, in
  // the order (2, mid..., top...).
  std::vector<int> quota_order = {2};
  quota_order.insert(quota_order.end(), mid.begin(), mid.end());
  quota_order.insert(quota_order.end(), top.begin(), top.end());
  std::vector<int> quota(static_cast<std::size_t>(S) + 1, n / S);
  for (int i = 0; i < n % S; ++i) quota[static_cast<std::size_t>(quota_order[static_cast<std::size_t>(i)])]++;

  ShotPattern p;
  p.H = H;
  p.S = S;
  p.R = R;
  p.acs = acs;
  p.shot_of_row.assign(static_cast<std::size_t>(H), 0);

  std::size_t idx = 0;
  auto take = [&](int shot, int count) {
    for (int k = 0; k < count && idx < rows.size(); ++k)
      p.shot_of_row[static_cast<std::size_t>(rows[idx++])] = shot;
  };
  auto round_robin = [&](const std::vector<int>& shots) {
    int total = 0;
    for (int s : shots) total += quota[static_cast<std::size_t>(s)];
    for (int k = 0; k < total && idx < rows.size(); ++k)
      p.shot_of_row[static_cast<std::size_t>(rows[idx++])] =
          shots[static_cast<std::size_t>(k) % shots.size()];
  };

  take(2, quota[2]);
  round_robin(mid);
  if (!top.empty()) round_robin(top);

  return p;
}

}  // namespace moco
