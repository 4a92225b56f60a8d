#ifndef COEVGAN_BOARD_HPP
#define COEVGAN_BOARD_HPP

#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "coevgan/grid.hpp"
#include "coevgan/nn.hpp"

namespace coevgan::grid {

// Latest published (generator, discriminator) pair per cell. One writer per
// slot (the owning cell), any number of readers. A publish swaps a shared
// pointer under a per-slot lock held only for the pointer assignment, so a
// reader can never observe a torn pair and never delays a publish for more
// than a pointer copy.
class SnapshotBoard {
 public:
  explicit SnapshotBoard(GridConfig grid);

  GridConfig grid() const { return grid_; }

  // Pre: snapshots carry origin == c and a version above the previous one.
  void publish(CellId c, nn::ModelSnapshot gen, nn::ModelSnapshot disc);

  bool has_published(CellId c) const;

  // Deep copies; later mutation by the caller cannot touch the board.
  std::pair<nn::ModelSnapshot, nn::ModelSnapshot> read(CellId c) const;

  // Subpopulation pair for a neighborhood, ordered like nb.members.
  std::pair<std::vector<nn::ModelSnapshot>, std::vector<nn::ModelSnapshot>>
  gather(const Neighborhood& nb) const;

 private:
  using Pair = std::pair<nn::ModelSnapshot, nn::ModelSnapshot>;
  struct Slot {
    mutable std::mutex mutex;
    std::shared_ptr<const Pair> latest;
  };

  std::shared_ptr<const Pair> load(CellId c) const;

  GridConfig grid_;
  std::vector<std::unique_ptr<Slot>> slots_;
};

}  // namespace coevgan::grid

#endif  // COEVGAN_BOARD_HPP
