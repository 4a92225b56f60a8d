#ifndef COEVGAN_ENGINE_HPP
#define COEVGAN_ENGINE_HPP

#include <cstdint>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "coevgan/board.hpp"
#include "coevgan/dataset.hpp"
#include "coevgan/grid.hpp"
#include "coevgan/nn.hpp"
#include "coevgan/rng.hpp"

namespace coevgan::engine {

enum class FitnessMode { Average, Min };
enum class OptimizerKind { Adam, Sgd };
enum class ExecMode { Async, Sequential };

struct CoevConfig {
  int tournament_size = 2;
  double mutation_probability = 0.5;
  double mutation_rate = 1e-4;
  int population_size_per_cell = 1;
  double initial_learning_rate = 2e-4;
  FitnessMode fitness_mode = FitnessMode::Average;
  OptimizerKind optimizer = OptimizerKind::Adam;

  void validate() const;
};

struct NetSpec {
  std::vector<nn::LayerSpec> generator;
  std::vector<nn::LayerSpec> discriminator;

  int latent_dim() const { return generator.front().input_size; }
  int data_dim() const { return generator.back().output_size; }
};

// One role's gathered snapshots with their fitness values, center first.
struct Subpopulation {
  std::vector<nn::ModelSnapshot> snapshots;
  std::vector<std::optional<double>> fitness;

  int size() const { return static_cast<int>(snapshots.size()); }
};

// Pairwise evaluations on one shared mini-batch and latent sample.
// gen_loss(i,j): generator-side BCE of pair (g_i, d_j); lower favors g_i.
// disc_loss(i,j): d_j's own two-term BCE against g_i's fakes; lower favors d_j.
struct FitnessRecord {
  Matrix gen_loss;
  Matrix disc_loss;
};

FitnessRecord evaluate_all_pairs(const Subpopulation& gens,
                                 const Subpopulation& discs,
                                 const Matrix& real_batch, const Matrix& latent);

// Average (default) or Min aggregation across adversaries; lower is better.
std::pair<std::vector<double>, std::vector<double>> fitness_from_record(
    const FitnessRecord& rec, FitnessMode mode);

// Draws tau distinct indices uniformly, returns the fittest (ties: lowest
// index). tau above the population size is clamped.
int tournament_select(std::span<const double> fitness, int tau, Rng& rng);

// With probability beta: lr * exp(N(0,1) * rate), clamped to [1e-8, 1].
double mutate_learning_rate(double lr, double beta, double rate, Rng& rng);

struct TelemetryRow {
  grid::CellId cell;
  int generation = 0;
  double gen_fitness = 0.0;
  double disc_fitness = 0.0;
  double learning_rate = 0.0;
};

class TelemetrySink {
 public:
  void add(const TelemetryRow& row);
  // rows ordered by (cell row-major, generation)
  std::vector<TelemetryRow> sorted_rows() const;

 private:
  mutable std::mutex mutex_;
  std::vector<TelemetryRow> rows_;
};

// Per-cell mutable training state across generations.
struct CellRuntime {
  grid::CellId cell;
  grid::Neighborhood neighborhood;
  data::DatasetPartition partition;
  Rng rng{0};
  double learning_rate = 0.0;
  std::uint64_t version = 0;

  // optimizer state of the cell's own center pair; reset when a foreign
  // snapshot takes the center
  nn::AdamState gen_opt;
  nn::AdamState disc_opt;

  long gen_sgd_steps = 0;
  long disc_sgd_steps = 0;
};

struct EngineSetup {
  grid::GridConfig grid;
  const Matrix* master = nullptr;  // training pool, immutable during the run
  data::BudgetPlan plan;
  CoevConfig coev;
  NetSpec nets;
  std::uint64_t run_seed = 0;
  ExecMode mode = ExecMode::Sequential;
};

struct CellOutcome {
  grid::CellId cell;
  nn::ModelSnapshot generator;
  nn::ModelSnapshot discriminator;
  long gen_sgd_steps = 0;
  long disc_sgd_steps = 0;
  double final_learning_rate = 0.0;
};

struct EngineResult {
  grid::GridConfig grid;
  data::BudgetPlan plan;
  std::shared_ptr<grid::SnapshotBoard> board;  // final published state
  std::vector<CellOutcome> cells;              // row-major
  std::vector<TelemetryRow> telemetry;
};

// The partition a given cell draws for a given run seed; the same derivation
// the engine uses, exposed so downstream stages can reconstruct it.
data::DatasetPartition cell_partition(std::uint64_t run_seed,
                                      const data::BudgetPlan& plan,
                                      grid::CellId id);

// One full generation at one cell: gather, evaluate, tournament-select the
// center, SGD-train every model over all partition mini-batches, re-evaluate,
// replace worst with best, publish the best pair as the new center.
void train_cell_generation(CellRuntime& cell, grid::SnapshotBoard& board,
                           const Matrix& master, const CoevConfig& coev,
                           int batch_size, int generation,
                           TelemetrySink* telemetry);

// Every cell runs plan.generations generations; Async trains one thread per
// cell against live neighbor state, Sequential iterates cells row-major and is
// a pure function of (setup, seeds).
EngineResult run(const EngineSetup& setup);

}  // namespace coevgan::engine

#endif  // COEVGAN_ENGINE_HPP
