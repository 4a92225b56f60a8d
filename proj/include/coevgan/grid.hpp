#ifndef COEVGAN_GRID_HPP
#define COEVGAN_GRID_HPP

#include <compare>
#include <string>
#include <vector>

#include "coevgan/errors.hpp"

namespace coevgan::grid {

struct GridConfig {
  int rows = 1;
  int cols = 1;

  int cell_count() const { return rows * cols; }
  void validate() const {
    if (rows < 1 || cols < 1) throw ConfigError("grid dimensions must be >= 1");
  }
};

struct CellId {
  int row = 0;
  int col = 0;

  auto operator<=>(const CellId&) const = default;
  std::string str() const {
    return "(" + std::to_string(row) + "," + std::to_string(col) + ")";
  }
};

inline int cell_index(const GridConfig& g, CellId c) { return c.row * g.cols + c.col; }

// Center first, then N, S, W, E after toroidal wrap; duplicates collapsed so a
// model never appears twice in one subpopulation.
struct Neighborhood {
  CellId center;
  std::vector<CellId> members;

  int size() const { return static_cast<int>(members.size()); }
};

Neighborhood neighborhood_of(const GridConfig& g, CellId c);

}  // namespace coevgan::grid

#endif  // COEVGAN_GRID_HPP
