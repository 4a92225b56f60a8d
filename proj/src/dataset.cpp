#include "coevgan/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

static_assert(std::endian::native == std::endian::little,
              "GCDS serialization assumes a little-endian host");

#include "coevgan/errors.hpp"

namespace coevgan::data {

void TargetSpec::validate() const {
  if (modes < 1) throw ConfigError("target: modes must be >= 1");
  if (dimension < 1 || dimension > 8)
    throw ConfigError("target: dimension must be in [1, 8]");
  if (mode_std <= 0.0) throw ConfigError("target: mode_std must be > 0");
  if (radius_or_pitch < 0.0) throw ConfigError("target: radius/pitch must be >= 0");
  if (total_samples < 1) throw ConfigError("target: total_samples must be >= 1");
}

std::vector<Eigen::VectorXd> mode_centers(const TargetSpec& spec) {
  spec.validate();
  std::vector<Eigen::VectorXd> centers;
  centers.reserve(spec.modes);
  if (spec.kind == TargetKind::GaussianRing) {
    for (int k = 0; k < spec.modes; ++k) {
      const double theta = 2.0 * std::numbers::pi * k / spec.modes;
      Eigen::VectorXd c = Eigen::VectorXd::Zero(spec.dimension);
      c(0) = spec.radius_or_pitch * std::cos(theta);
      if (spec.dimension > 1) c(1) = spec.radius_or_pitch * std::sin(theta);
      centers.push_back(std::move(c));
    }
  } else {
    const int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(spec.modes))));
    const double half = (side - 1) / 2.0;
    for (int k = 0; k < spec.modes; ++k) {
      const int i = k / side;
      const int j = k % side;
      Eigen::VectorXd c = Eigen::VectorXd::Zero(spec.dimension);
      c(0) = (i - half) * spec.radius_or_pitch;
      if (spec.dimension > 1) c(1) = (j - half) * spec.radius_or_pitch;
      centers.push_back(std::move(c));
    }
  }
  return centers;
}

Matrix generate_target(const TargetSpec& spec, std::uint64_t seed) {
  const std::vector<Eigen::VectorXd> centers = mode_centers(spec);
  Rng rng(seed);
  Matrix out(spec.total_samples, spec.dimension);
  for (int i = 0; i < spec.total_samples; ++i) {
    const auto& c = centers[rng.index(spec.modes)];
    for (int j = 0; j < spec.dimension; ++j)
      out(i, j) = c(j) + spec.mode_std * rng.normal();
  }
  return out;
}

DatasetPartition sample_partition(int master_size, double portion,
                                  std::uint64_t seed) {
  if (master_size < 1) throw ConfigError("sample_partition: empty master dataset");
  if (!(portion > 0.0) || portion > 1.0)
    throw ConfigError("sample_partition: portion must be in (0, 1]");
  DatasetPartition p;
  p.portion = portion;
  p.rng_seed = seed;
  const long count = std::lround(portion * static_cast<double>(master_size));
  Rng rng(seed);
  p.indices.reserve(static_cast<std::size_t>(count));
  for (long i = 0; i < count; ++i)
    p.indices.push_back(static_cast<std::uint32_t>(rng.below(static_cast<std::uint64_t>(master_size))));
  return p;
}

BudgetPlan plan_budget(int dataset_size, int batch_size, double portion,
                       long total_batch_budget) {
  if (dataset_size < 1 || batch_size < 1 || total_batch_budget < 1)
    throw ConfigError("plan_budget: sizes and budget must be positive");
  if (!(portion > 0.0) || portion > 1.0)
    throw ConfigError("plan_budget: portion must be in (0, 1]");
  BudgetPlan plan;
  plan.dataset_size = dataset_size;
  plan.batch_size = batch_size;
  plan.portion = portion;
  const long partition_size = std::lround(portion * static_cast<double>(dataset_size));
  plan.batches_per_generation = static_cast<int>(partition_size / batch_size);
  if (plan.batches_per_generation < 1)
    throw ConfigError("plan_budget: batch size exceeds the data portion; zero batches per generation");
  plan.generations = static_cast<int>(
      (total_batch_budget + plan.batches_per_generation - 1) / plan.batches_per_generation);
  plan.total_batches = static_cast<long>(plan.batches_per_generation) * plan.generations;
  return plan;
}

std::vector<std::vector<std::uint32_t>> minibatches(
    const DatasetPartition& partition, int batch_size, std::uint64_t epoch_seed) {
  if (batch_size < 1) throw ConfigError("minibatches: batch_size must be >= 1");
  std::vector<std::uint32_t> idx = partition.indices;
  Rng rng(epoch_seed);
  for (std::size_t i = idx.size(); i > 1; --i)
    std::swap(idx[i - 1], idx[rng.below(i)]);
  const std::size_t n_batches = idx.size() / static_cast<std::size_t>(batch_size);
  std::vector<std::vector<std::uint32_t>> batches(n_batches);
  for (std::size_t b = 0; b < n_batches; ++b)
    batches[b].assign(idx.begin() + b * batch_size, idx.begin() + (b + 1) * batch_size);
  return batches;
}

Matrix take_rows(const Matrix& master, std::span<const std::uint32_t> indices) {
  Matrix out(static_cast<Eigen::Index>(indices.size()), master.cols());
  for (std::size_t i = 0; i < indices.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = master.row(indices[i]);
  return out;
}

namespace {
constexpr char kMagic[4] = {'G', 'C', 'D', 'S'};

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}
}  // namespace

void save_matrix(const Matrix& m, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("save_matrix: cannot open " + path);
  os.write(kMagic, 4);
  put_u32(os, static_cast<std::uint32_t>(m.rows()));
  put_u32(os, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      static_assert(sizeof(double) == 8);
      os.write(reinterpret_cast<const char*>(&v), 8);
    }
  if (!os) throw ConfigError("save_matrix: write failed for " + path);
}

Matrix load_matrix(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("load_matrix: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw ConfigError("load_matrix: bad magic in " + path);
  const std::uint32_t rows = get_u32(is);
  const std::uint32_t cols = get_u32(is);
  Matrix m(rows, cols);
  for (std::uint32_t i = 0; i < rows; ++i)
    for (std::uint32_t j = 0; j < cols; ++j) {
      double v;
      is.read(reinterpret_cast<char*>(&v), 8);
      m(i, j) = v;
    }
  if (!is) throw ConfigError("load_matrix: truncated file " + path);
  return m;
}

}  // namespace coevgan::data
