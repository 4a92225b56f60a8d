#include "coevgan/engine.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "coevgan/errors.hpp"

namespace coevgan::engine {

namespace {

constexpr std::uint64_t kPartitionSalt = 0x70617274;  // seed tags per stream
constexpr std::uint64_t kCellRngSalt = 0x63656c6c;
constexpr std::uint64_t kInitSalt = 0x696e6974;

Matrix draw_latent(int rows, int cols, Rng& rng) {
  Matrix z(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) z(i, j) = rng.normal();
  return z;
}

double clamped_log(double p) {
  const double c = std::clamp(p, nn::kProbEps, 1.0 - nn::kProbEps);
  return std::log(c);
}

int argmin_lowest(std::span<const double> v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v[i] < v[best]) best = i;
  return best;
}

int argmax_lowest(std::span<const double> v) {
  int worst = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v[i] > v[worst]) worst = i;
  return worst;
}

}  // namespace

void CoevConfig::validate() const {
  if (tournament_size < 1) throw ConfigError("coev: tournament size must be >= 1");
  if (mutation_probability < 0.0 || mutation_probability > 1.0)
    throw ConfigError("coev: mutation probability must be in [0, 1]");
  if (mutation_rate < 0.0) throw ConfigError("coev: mutation rate must be >= 0");
  if (population_size_per_cell != 1)
    throw ConfigError("coev: population size per cell is fixed to 1");
  if (initial_learning_rate <= 0.0)
    throw ConfigError("coev: initial learning rate must be > 0");
}

FitnessRecord evaluate_all_pairs(const Subpopulation& gens,
                                 const Subpopulation& discs,
                                 const Matrix& real_batch, const Matrix& latent) {
  const int ng = gens.size();
  const int nd = discs.size();
  if (ng == 0 || nd == 0) throw ConfigError("evaluate_all_pairs: empty subpopulation");

  FitnessRecord rec;
  rec.gen_loss.resize(ng, nd);
  rec.disc_loss.resize(ng, nd);

  std::vector<Matrix> fakes(ng);
  for (int i = 0; i < ng; ++i)
    fakes[i] = nn::forward(gens.snapshots[i].params, latent);

  for (int j = 0; j < nd; ++j) {
    const nn::ModelParams& d = discs.snapshots[j].params;
    const Matrix p_real = nn::forward(d, real_batch);
    double real_term = 0.0;
    for (Eigen::Index r = 0; r < p_real.rows(); ++r)
      real_term -= clamped_log(p_real(r, 0)) / static_cast<double>(p_real.rows());

    for (int i = 0; i < ng; ++i) {
      const Matrix p_fake = nn::forward(d, fakes[i]);
      double log_one_minus = 0.0;
      for (Eigen::Index r = 0; r < p_fake.rows(); ++r)
        log_one_minus += std::log(1.0 - std::clamp(p_fake(r, 0), nn::kProbEps,
                                                   1.0 - nn::kProbEps));
      log_one_minus /= static_cast<double>(p_fake.rows());
      rec.gen_loss(i, j) = 0.5 * log_one_minus;
      rec.disc_loss(i, j) = real_term - log_one_minus;
      if (!std::isfinite(rec.gen_loss(i, j)) || !std::isfinite(rec.disc_loss(i, j)))
        throw TrainingError("evaluate_all_pairs: non-finite loss at pair (" +
                            std::to_string(i) + "," + std::to_string(j) + ")");
    }
  }
  return rec;
}

std::pair<std::vector<double>, std::vector<double>> fitness_from_record(
    const FitnessRecord& rec, FitnessMode mode) {
  const int ng = static_cast<int>(rec.gen_loss.rows());
  const int nd = static_cast<int>(rec.gen_loss.cols());
  if (ng == 0 || nd == 0) throw ConfigError("fitness_from_record: empty record");
  std::vector<double> gen(ng), disc(nd);
  for (int i = 0; i < ng; ++i)
    gen[i] = mode == FitnessMode::Average ? rec.gen_loss.row(i).mean()
                                          : rec.gen_loss.row(i).minCoeff();
  for (int j = 0; j < nd; ++j)
    disc[j] = mode == FitnessMode::Average ? rec.disc_loss.col(j).mean()
                                           : rec.disc_loss.col(j).minCoeff();
  return {std::move(gen), std::move(disc)};
}

int tournament_select(std::span<const double> fitness, int tau, Rng& rng) {
  const int n = static_cast<int>(fitness.size());
  if (n == 0) throw ConfigError("tournament_select: empty population");
  if (tau < 1) throw ConfigError("tournament_select: tau must be >= 1");
  tau = std::min(tau, n);

  // partial Fisher-Yates: first tau entries are distinct uniform picks
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  for (int i = 0; i < tau; ++i)
    std::swap(idx[i], idx[i + rng.index(n - i)]);

  int winner = idx[0];
  for (int i = 1; i < tau; ++i) {
    const int c = idx[i];
    if (fitness[c] < fitness[winner] ||
        (fitness[c] == fitness[winner] && c < winner))
      winner = c;
  }
  return winner;
}

double mutate_learning_rate(double lr, double beta, double rate, Rng& rng) {
  if (lr <= 0.0) throw ConfigError("mutate_learning_rate: lr must be > 0");
  if (rng.uniform() < beta) lr *= std::exp(rng.normal() * rate);
  return std::clamp(lr, 1e-8, 1.0);
}

void TelemetrySink::add(const TelemetryRow& row) {
  std::lock_guard lock(mutex_);
  rows_.push_back(row);
}

std::vector<TelemetryRow> TelemetrySink::sorted_rows() const {
  std::vector<TelemetryRow> rows;
  {
    std::lock_guard lock(mutex_);
    rows = rows_;
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const TelemetryRow& a, const TelemetryRow& b) {
                     if (a.cell != b.cell) return a.cell < b.cell;
                     return a.generation < b.generation;
                   });
  return rows;
}

namespace {

// Working copy of one role's subpopulation during a generation. Optimizer
// state travels with its model through swaps; `own` marks the lineage of this
// cell's previous center so its state can persist across generations.
struct WorkingPop {
  std::vector<nn::ModelSnapshot> snaps;
  std::vector<nn::AdamState> opt;
  std::vector<char> own;

  void swap_slots(int a, int b) {
    if (a == b) return;
    std::swap(snaps[a], snaps[b]);
    std::swap(opt[a], opt[b]);
    std::swap(own[a], own[b]);
  }
};

WorkingPop make_working(std::vector<nn::ModelSnapshot> snaps, nn::AdamState own_state) {
  WorkingPop pop;
  pop.snaps = std::move(snaps);
  pop.opt.resize(pop.snaps.size());
  pop.own.assign(pop.snaps.size(), 0);
  pop.opt[0] = std::move(own_state);  // slot 0 is this cell's own center
  pop.own[0] = 1;
  return pop;
}

void update_model(nn::ModelSnapshot& snap, const nn::Gradient& grad, double lr,
                  nn::AdamState& state, OptimizerKind opt) {
  if (opt == OptimizerKind::Adam)
    snap.params = nn::adam_step(snap.params, grad, lr, state);
  else
    snap.params = nn::sgd_step(snap.params, grad, lr);
}

Subpopulation as_subpop(const std::vector<nn::ModelSnapshot>& snaps) {
  Subpopulation s;
  s.snapshots = snaps;
  s.fitness.assign(snaps.size(), std::nullopt);
  return s;
}

}  // namespace

data::DatasetPartition cell_partition(std::uint64_t run_seed,
                                      const data::BudgetPlan& plan,
                                      grid::CellId id) {
  data::DatasetPartition p = data::sample_partition(
      plan.dataset_size, plan.portion,
      derive_seed(run_seed, static_cast<std::uint64_t>(id.row),
                  static_cast<std::uint64_t>(id.col), kPartitionSalt));
  p.owner = id;
  return p;
}

void train_cell_generation(CellRuntime& cell, grid::SnapshotBoard& board,
                           const Matrix& master, const CoevConfig& coev,
                           int batch_size, int generation,
                           TelemetrySink* telemetry) {
  try {
    auto [gen_snaps, disc_snaps] = board.gather(cell.neighborhood);
    const int s = static_cast<int>(gen_snaps.size());
    const int latent_dim = gen_snaps[0].params.input_width();

    WorkingPop gens = make_working(std::move(gen_snaps), std::move(cell.gen_opt));
    WorkingPop discs = make_working(std::move(disc_snaps), std::move(cell.disc_opt));

    const auto batches =
        data::minibatches(cell.partition, batch_size, cell.rng.next_u64());
    if (batches.empty())
      throw TrainingError("partition smaller than one mini-batch");

    // fitness on one random mini-batch with one fixed latent sample
    {
      const auto& b = batches[cell.rng.index(static_cast<int>(batches.size()))];
      const Matrix real = data::take_rows(master, b);
      const Matrix latent = draw_latent(batch_size, latent_dim, cell.rng);
      const FitnessRecord rec =
          evaluate_all_pairs(as_subpop(gens.snaps), as_subpop(discs.snaps), real, latent);
      const auto [gf, df] = fitness_from_record(rec, coev.fitness_mode);
      gens.swap_slots(0, tournament_select(gf, coev.tournament_size, cell.rng));
      discs.swap_slots(0, tournament_select(df, coev.tournament_size, cell.rng));
    }

    for (const auto& batch : batches) {
      cell.learning_rate = mutate_learning_rate(
          cell.learning_rate, coev.mutation_probability, coev.mutation_rate, cell.rng);

      // every generator against one shared random discriminator
      const int d_pick = cell.rng.index(s);
      const Matrix latent = draw_latent(batch_size, latent_dim, cell.rng);
      for (int i = 0; i < s; ++i) {
        const nn::Gradient g =
            nn::generator_grad(gens.snaps[i].params, discs.snaps[d_pick].params, latent);
        update_model(gens.snaps[i], g, cell.learning_rate, gens.opt[i], coev.optimizer);
        ++cell.gen_sgd_steps;
      }

      // every discriminator against one shared random generator's fakes
      const int g_pick = cell.rng.index(s);
      const Matrix latent2 = draw_latent(batch_size, latent_dim, cell.rng);
      const Matrix fakes = nn::forward(gens.snaps[g_pick].params, latent2);
      const Matrix real = data::take_rows(master, batch);
      for (int j = 0; j < s; ++j) {
        const nn::Gradient g = nn::discriminator_grad(discs.snaps[j].params, real, fakes);
        update_model(discs.snaps[j], g, cell.learning_rate, discs.opt[j], coev.optimizer);
        ++cell.disc_sgd_steps;
      }
    }

    // re-evaluate on the last trained mini-batch with a fresh latent sample
    const Matrix real = data::take_rows(master, batches.back());
    const Matrix latent = draw_latent(batch_size, latent_dim, cell.rng);
    const FitnessRecord rec =
        evaluate_all_pairs(as_subpop(gens.snaps), as_subpop(discs.snaps), real, latent);
    const auto [gf, df] = fitness_from_record(rec, coev.fitness_mode);

    const int best_g = argmin_lowest(gf);
    const int best_d = argmin_lowest(df);
    // replace worst with best, then move best to the center
    {
      const int worst_g = argmax_lowest(gf);
      gens.snaps[worst_g] = gens.snaps[best_g];
      gens.opt[worst_g] = gens.opt[best_g];
      gens.own[worst_g] = gens.own[best_g];
      gens.swap_slots(0, best_g);
      const int worst_d = argmax_lowest(df);
      discs.snaps[worst_d] = discs.snaps[best_d];
      discs.opt[worst_d] = discs.opt[best_d];
      discs.own[worst_d] = discs.own[best_d];
      discs.swap_slots(0, best_d);
    }

    cell.version += 1;
    nn::ModelSnapshot pub_gen = gens.snaps[0];
    pub_gen.role = nn::Role::Generator;
    pub_gen.origin = cell.cell;
    pub_gen.version = cell.version;
    pub_gen.learning_rate = cell.learning_rate;
    nn::ModelSnapshot pub_disc = discs.snaps[0];
    pub_disc.role = nn::Role::Discriminator;
    pub_disc.origin = cell.cell;
    pub_disc.version = cell.version;
    pub_disc.learning_rate = cell.learning_rate;
    board.publish(cell.cell, std::move(pub_gen), std::move(pub_disc));

    // a snapshot carries parameters and learning rate only, so a foreign
    // center starts the next generation with fresh optimizer state
    cell.gen_opt = gens.own[0] ? std::move(gens.opt[0]) : nn::AdamState{};
    cell.disc_opt = discs.own[0] ? std::move(discs.opt[0]) : nn::AdamState{};

    if (telemetry)
      telemetry->add({cell.cell, generation, gf[best_g], df[best_d], cell.learning_rate});
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw TrainingError("cell " + cell.cell.str() + " generation " +
                        std::to_string(generation) + ": " + e.what());
  }
}

EngineResult run(const EngineSetup& setup) {
  setup.grid.validate();
  setup.coev.validate();
  if (!setup.master) throw ConfigError("run: no master dataset");
  if (setup.master->rows() != setup.plan.dataset_size)
    throw ConfigError("run: master dataset rows do not match the budget plan");
  if (setup.nets.data_dim() != setup.master->cols())
    throw ConfigError("run: generator output width does not match data dimension");

  auto board = std::make_shared<grid::SnapshotBoard>(setup.grid);
  TelemetrySink telemetry;

  std::vector<CellRuntime> cells;
  cells.reserve(static_cast<std::size_t>(setup.grid.cell_count()));
  for (int r = 0; r < setup.grid.rows; ++r) {
    for (int c = 0; c < setup.grid.cols; ++c) {
      const grid::CellId id{r, c};
      CellRuntime rt;
      rt.cell = id;
      rt.neighborhood = grid::neighborhood_of(setup.grid, id);
      rt.partition = cell_partition(setup.run_seed, setup.plan, id);
      rt.rng = Rng(derive_seed(setup.run_seed, static_cast<std::uint64_t>(r),
                               static_cast<std::uint64_t>(c), kCellRngSalt));
      rt.learning_rate = setup.coev.initial_learning_rate;

      Rng init_rng(derive_seed(setup.run_seed, static_cast<std::uint64_t>(r),
                               static_cast<std::uint64_t>(c), kInitSalt));
      nn::ModelSnapshot g{nn::init_params(setup.nets.generator, init_rng),
                          nn::Role::Generator, rt.learning_rate, id, 0};
      nn::ModelSnapshot d{nn::init_params(setup.nets.discriminator, init_rng),
                          nn::Role::Discriminator, rt.learning_rate, id, 0};
      board->publish(id, std::move(g), std::move(d));
      cells.push_back(std::move(rt));
    }
  }

  const int generations = setup.plan.generations;
  if (setup.mode == ExecMode::Sequential) {
    for (int gen = 0; gen < generations; ++gen)
      for (CellRuntime& cell : cells)
        train_cell_generation(cell, *board, *setup.master, setup.coev,
                              setup.plan.batch_size, gen, &telemetry);
  } else {
    std::vector<std::exception_ptr> failures(cells.size());
    {
      std::vector<std::jthread> workers;
      workers.reserve(cells.size());
      for (std::size_t k = 0; k < cells.size(); ++k) {
        workers.emplace_back([&, k] {
          try {
            for (int gen = 0; gen < generations; ++gen)
              train_cell_generation(cells[k], *board, *setup.master, setup.coev,
                                    setup.plan.batch_size, gen, &telemetry);
          } catch (...) {
            failures[k] = std::current_exception();
          }
        });
      }
    }
    for (const auto& f : failures)
      if (f) std::rethrow_exception(f);
  }

  EngineResult result;
  result.grid = setup.grid;
  result.plan = setup.plan;
  result.board = board;
  result.telemetry = telemetry.sorted_rows();
  for (const CellRuntime& cell : cells) {
    const long expected = static_cast<long>(setup.plan.batches_per_generation) *
                          generations * cell.neighborhood.size();
    if (cell.gen_sgd_steps != expected || cell.disc_sgd_steps != expected)
      throw TrainingError("cell " + cell.cell.str() +
                          ": SGD step count does not match the budget plan");
    auto [g, d] = board->read(cell.cell);
    result.cells.push_back({cell.cell, std::move(g), std::move(d),
                            cell.gen_sgd_steps, cell.disc_sgd_steps,
                            cell.learning_rate});
  }
  return result;
}

}  // namespace coevgan::engine
