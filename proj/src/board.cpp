#include "coevgan/board.hpp"

#include "coevgan/errors.hpp"

namespace coevgan::grid {

SnapshotBoard::SnapshotBoard(GridConfig grid) : grid_(grid) {
  grid_.validate();
  slots_.reserve(static_cast<std::size_t>(grid_.cell_count()));
  for (int i = 0; i < grid_.cell_count(); ++i)
    slots_.push_back(std::make_unique<Slot>());
}

void SnapshotBoard::publish(CellId c, nn::ModelSnapshot gen, nn::ModelSnapshot disc) {
  if (gen.origin != c || disc.origin != c)
    throw TrainingError("publish: snapshot origin does not match cell " + c.str());
  auto next = std::make_shared<const Pair>(std::move(gen), std::move(disc));
  Slot& slot = *slots_[static_cast<std::size_t>(cell_index(grid_, c))];
  std::lock_guard lock(slot.mutex);
  if (slot.latest && next->first.version <= slot.latest->first.version)
    throw TrainingError("publish: version did not increase at cell " + c.str());
  slot.latest = std::move(next);
}

std::shared_ptr<const SnapshotBoard::Pair> SnapshotBoard::load(CellId c) const {
  const Slot& slot = *slots_[static_cast<std::size_t>(cell_index(grid_, c))];
  std::lock_guard lock(slot.mutex);
  return slot.latest;
}

bool SnapshotBoard::has_published(CellId c) const { return load(c) != nullptr; }

std::pair<nn::ModelSnapshot, nn::ModelSnapshot> SnapshotBoard::read(CellId c) const {
  auto p = load(c);
  if (!p) throw TrainingError("read: cell " + c.str() + " has not published");
  return *p;  // deep copy outside the lock
}

std::pair<std::vector<nn::ModelSnapshot>, std::vector<nn::ModelSnapshot>>
SnapshotBoard::gather(const Neighborhood& nb) const {
  std::pair<std::vector<nn::ModelSnapshot>, std::vector<nn::ModelSnapshot>> out;
  out.first.reserve(nb.members.size());
  out.second.reserve(nb.members.size());
  for (const CellId& m : nb.members) {
    auto pair = read(m);
    out.first.push_back(std::move(pair.first));
    out.second.push_back(std::move(pair.second));
  }
  return out;
}

}  // namespace coevgan::grid
