#ifndef COEVGAN_DATASET_HPP
#define COEVGAN_DATASET_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "coevgan/grid.hpp"
#include "coevgan/nn.hpp"
#include "coevgan/rng.hpp"

namespace coevgan::data {

enum class TargetKind { GaussianRing, GaussianGrid };

// Synthetic target distribution: `modes` isotropic Gaussians placed on a ring
// of given radius or on a square lattice of given pitch.
struct TargetSpec {
  TargetKind kind = TargetKind::GaussianRing;
  int modes = 8;
  int dimension = 2;
  double mode_std = 0.05;
  double radius_or_pitch = 2.0;
  int total_samples = 10000;

  void validate() const;
};

std::vector<Eigen::VectorXd> mode_centers(const TargetSpec& spec);

// total_samples x dimension; each sample picks a uniform random mode, then
// adds N(0, mode_std^2 I).
Matrix generate_target(const TargetSpec& spec, std::uint64_t seed);

// A cell's private subsample of the master dataset: round(portion * n) index
// draws, i.i.d. uniform WITH replacement, so duplicates are expected.
struct DatasetPartition {
  std::vector<std::uint32_t> indices;
  double portion = 1.0;
  grid::CellId owner;
  std::uint64_t rng_seed = 0;
};

DatasetPartition sample_partition(int master_size, double portion,
                                  std::uint64_t seed);

// Batch-budget equalization: fewer data means more generations for the same
// total number of mini-batch steps.
struct BudgetPlan {
  int dataset_size = 0;
  int batch_size = 0;
  double portion = 1.0;
  int batches_per_generation = 0;
  int generations = 0;
  long total_batches = 0;  // batches_per_generation * generations
};

BudgetPlan plan_budget(int dataset_size, int batch_size, double portion,
                       long total_batch_budget);

// Partition indices shuffled by epoch_seed, chunked to batch_size; the
// trailing remainder is dropped so every batch has identical size.
std::vector<std::vector<std::uint32_t>> minibatches(
    const DatasetPartition& partition, int batch_size, std::uint64_t epoch_seed);

Matrix take_rows(const Matrix& master, std::span<const std::uint32_t> indices);

// Little-endian binary matrix: "GCDS", u32 rows, u32 cols, row-major f64.
void save_matrix(const Matrix& m, const std::string& path);
Matrix load_matrix(const std::string& path);

}  // namespace coevgan::data

#endif  // COEVGAN_DATASET_HPP
