#include "coevgan/grid.hpp"

#include <algorithm>

namespace coevgan::grid {

Neighborhood neighborhood_of(const GridConfig& g, CellId c) {
  g.validate();
  if (c.row < 0 || c.row >= g.rows || c.col < 0 || c.col >= g.cols)
    throw ConfigError("cell " + c.str() + " outside grid");

  const auto wrap = [](int v, int n) { return ((v % n) + n) % n; };
  const CellId candidates[5] = {
      c,
      {wrap(c.row - 1, g.rows), c.col},  // north
      {wrap(c.row + 1, g.rows), c.col},  // south
      {c.row, wrap(c.col - 1, g.cols)},  // west
      {c.row, wrap(c.col + 1, g.cols)},  // east
  };

  Neighborhood nb;
  nb.center = c;
  for (const CellId& cand : candidates) {
    if (std::find(nb.members.begin(), nb.members.end(), cand) == nb.members.end())
      nb.members.push_back(cand);
  }
  return nb;
}

}  // namespace coevgan::grid
