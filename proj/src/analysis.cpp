#include "coevgan/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "coevgan/errors.hpp"
#include "coevgan/scoring.hpp"

namespace coevgan::analysis {

namespace {

constexpr std::uint64_t kCellScoreSalt = 0x73636f72;
constexpr std::uint64_t kMixtureSalt = 0x6d697874;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

long to_long(const std::string& s, const std::string& key) {
  long v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw ConfigError("bad integer for " + key + ": '" + s + "'");
  return v;
}

std::uint64_t to_u64(const std::string& s, const std::string& key) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw ConfigError("bad integer for " + key + ": '" + s + "'");
  return v;
}

double to_double(const std::string& s, const std::string& key) {
  double v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw ConfigError("bad number for " + key + ": '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string activation_name(nn::Activation a) {
  switch (a) {
    case nn::Activation::Tanh: return "tanh";
    case nn::Activation::Sigmoid: return "sigmoid";
    case nn::Activation::Identity: return "identity";
  }
  return "";
}

nn::Activation activation_from(const std::string& s, const std::string& key) {
  if (s == "tanh") return nn::Activation::Tanh;
  if (s == "sigmoid") return nn::Activation::Sigmoid;
  if (s == "identity") return nn::Activation::Identity;
  throw ConfigError("bad activation for " + key + ": '" + s + "'");
}

}  // namespace

std::string fmt_double(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw NumericalError("fmt_double failed");
  return std::string(buf, p);
}

double parse_double(const std::string& s) { return to_double(s, "value"); }

void RunConfig::validate() const {
  target.validate();
  grid.validate();
  coev.validate();
  if (batch_size < 1) throw ConfigError("data.batch_size must be >= 1");
  if (!(portion > 0.0) || portion > 1.0) throw ConfigError("data.portion must be in (0, 1]");
  if (total_batch_budget < 1) throw ConfigError("data.budget must be >= 1");
  if (latent_dim < 1 || hidden_layers < 0 || hidden_units < 1)
    throw ConfigError("net sizes must be positive");
  if (mixture_ea.generations < 0) throw ConfigError("mixture.generations must be >= 0");
  if (mixture_ea.mutation_scale <= 0.0) throw ConfigError("mixture.mutation_scale must be > 0");
  if (mixture_ea.eval_sample_count < 2) throw ConfigError("mixture.eval_samples must be >= 2");
  if (reference_samples < 2) throw ConfigError("mixture.reference_samples must be >= 2");
}

engine::NetSpec RunConfig::net_spec() const {
  std::vector<int> g_widths{latent_dim};
  std::vector<int> d_widths{target.dimension};
  for (int i = 0; i < hidden_layers; ++i) {
    g_widths.push_back(hidden_units);
    d_widths.push_back(hidden_units);
  }
  g_widths.push_back(target.dimension);
  d_widths.push_back(1);
  engine::NetSpec nets;
  nets.generator = nn::mlp_layers(g_widths, hidden_activation, generator_output);
  nets.discriminator = nn::mlp_layers(d_widths, hidden_activation, nn::Activation::Sigmoid);
  return nets;
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));

    if (key == "target.kind") {
      if (val == "ring") cfg.target.kind = data::TargetKind::GaussianRing;
      else if (val == "grid") cfg.target.kind = data::TargetKind::GaussianGrid;
      else throw ConfigError("target.kind must be ring or grid");
    } else if (key == "target.modes") cfg.target.modes = static_cast<int>(to_long(val, key));
    else if (key == "target.dimension") cfg.target.dimension = static_cast<int>(to_long(val, key));
    else if (key == "target.mode_std") cfg.target.mode_std = to_double(val, key);
    else if (key == "target.radius_or_pitch") cfg.target.radius_or_pitch = to_double(val, key);
    else if (key == "target.samples") cfg.target.total_samples = static_cast<int>(to_long(val, key));
    else if (key == "data.batch_size") cfg.batch_size = static_cast<int>(to_long(val, key));
    else if (key == "data.portion") cfg.portion = to_double(val, key);
    else if (key == "data.budget") cfg.total_batch_budget = to_long(val, key);
    else if (key == "data.external_path") cfg.external_data_path = val;
    else if (key == "grid.rows") cfg.grid.rows = static_cast<int>(to_long(val, key));
    else if (key == "grid.cols") cfg.grid.cols = static_cast<int>(to_long(val, key));
    else if (key == "coev.tournament_size") cfg.coev.tournament_size = static_cast<int>(to_long(val, key));
    else if (key == "coev.mutation_probability") cfg.coev.mutation_probability = to_double(val, key);
    else if (key == "coev.mutation_rate") cfg.coev.mutation_rate = to_double(val, key);
    else if (key == "coev.initial_learning_rate") cfg.coev.initial_learning_rate = to_double(val, key);
    else if (key == "coev.fitness_mode") {
      if (val == "average") cfg.coev.fitness_mode = engine::FitnessMode::Average;
      else if (val == "min") cfg.coev.fitness_mode = engine::FitnessMode::Min;
      else throw ConfigError("coev.fitness_mode must be average or min");
    } else if (key == "coev.optimizer") {
      if (val == "adam") cfg.coev.optimizer = engine::OptimizerKind::Adam;
      else if (val == "sgd") cfg.coev.optimizer = engine::OptimizerKind::Sgd;
      else throw ConfigError("coev.optimizer must be adam or sgd");
    } else if (key == "net.latent_dim") cfg.latent_dim = static_cast<int>(to_long(val, key));
    else if (key == "net.hidden_layers") cfg.hidden_layers = static_cast<int>(to_long(val, key));
    else if (key == "net.hidden_units") cfg.hidden_units = static_cast<int>(to_long(val, key));
    else if (key == "net.activation") cfg.hidden_activation = activation_from(val, key);
    else if (key == "net.generator_output") cfg.generator_output = activation_from(val, key);
    else if (key == "mixture.generations") cfg.mixture_ea.generations = static_cast<int>(to_long(val, key));
    else if (key == "mixture.mutation_scale") cfg.mixture_ea.mutation_scale = to_double(val, key);
    else if (key == "mixture.eval_samples") cfg.mixture_ea.eval_sample_count = static_cast<int>(to_long(val, key));
    else if (key == "mixture.reference") {
      if (val == "holdout") cfg.reference_source = ReferenceSource::Holdout;
      else if (val == "partition") cfg.reference_source = ReferenceSource::Partition;
      else throw ConfigError("mixture.reference must be holdout or partition");
    } else if (key == "mixture.reference_samples") cfg.reference_samples = static_cast<int>(to_long(val, key));
    else if (key == "run.master_seed") cfg.master_seed = to_u64(val, key);
    else if (key == "run.seed") cfg.run_seed = to_u64(val, key);
    else if (key == "run.mode") {
      if (val == "async") cfg.mode = engine::ExecMode::Async;
      else if (val == "seq") cfg.mode = engine::ExecMode::Sequential;
      else throw ConfigError("run.mode must be async or seq");
    } else {
      throw ConfigError("unknown config key: " + key);
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config_text(buf.str());
}

std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream os;
  os << "target.kind = "
     << (cfg.target.kind == data::TargetKind::GaussianRing ? "ring" : "grid") << "\n";
  os << "target.modes = " << cfg.target.modes << "\n";
  os << "target.dimension = " << cfg.target.dimension << "\n";
  os << "target.mode_std = " << fmt_double(cfg.target.mode_std) << "\n";
  os << "target.radius_or_pitch = " << fmt_double(cfg.target.radius_or_pitch) << "\n";
  os << "target.samples = " << cfg.target.total_samples << "\n";
  os << "data.batch_size = " << cfg.batch_size << "\n";
  os << "data.portion = " << fmt_double(cfg.portion) << "\n";
  os << "data.budget = " << cfg.total_batch_budget << "\n";
  if (!cfg.external_data_path.empty())
    os << "data.external_path = " << cfg.external_data_path << "\n";
  os << "grid.rows = " << cfg.grid.rows << "\n";
  os << "grid.cols = " << cfg.grid.cols << "\n";
  os << "coev.tournament_size = " << cfg.coev.tournament_size << "\n";
  os << "coev.mutation_probability = " << fmt_double(cfg.coev.mutation_probability) << "\n";
  os << "coev.mutation_rate = " << fmt_double(cfg.coev.mutation_rate) << "\n";
  os << "coev.initial_learning_rate = " << fmt_double(cfg.coev.initial_learning_rate) << "\n";
  os << "coev.fitness_mode = "
     << (cfg.coev.fitness_mode == engine::FitnessMode::Average ? "average" : "min") << "\n";
  os << "coev.optimizer = "
     << (cfg.coev.optimizer == engine::OptimizerKind::Adam ? "adam" : "sgd") << "\n";
  os << "net.latent_dim = " << cfg.latent_dim << "\n";
  os << "net.hidden_layers = " << cfg.hidden_layers << "\n";
  os << "net.hidden_units = " << cfg.hidden_units << "\n";
  os << "net.activation = " << activation_name(cfg.hidden_activation) << "\n";
  os << "net.generator_output = " << activation_name(cfg.generator_output) << "\n";
  os << "mixture.generations = " << cfg.mixture_ea.generations << "\n";
  os << "mixture.mutation_scale = " << fmt_double(cfg.mixture_ea.mutation_scale) << "\n";
  os << "mixture.eval_samples = " << cfg.mixture_ea.eval_sample_count << "\n";
  os << "mixture.reference = "
     << (cfg.reference_source == ReferenceSource::Holdout ? "holdout" : "partition") << "\n";
  os << "mixture.reference_samples = " << cfg.reference_samples << "\n";
  os << "run.master_seed = " << cfg.master_seed << "\n";
  os << "run.seed = " << cfg.run_seed << "\n";
  os << "run.mode = " << (cfg.mode == engine::ExecMode::Async ? "async" : "seq") << "\n";
  return os.str();
}

std::string config_hash(const RunConfig& cfg) {
  const std::string text = serialize_config(cfg);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), h, 16);
  return std::string(16 - (p - buf), '0') + std::string(buf, p);
}

namespace {

struct Dataset {
  Matrix pool;
  Matrix reference;
};

Dataset build_dataset(const RunConfig& cfg) {
  Dataset ds;
  if (!cfg.external_data_path.empty()) {
    const Matrix m = data::load_matrix(cfg.external_data_path);
    if (m.cols() != cfg.target.dimension)
      throw ConfigError("external dataset dimension does not match target.dimension");
    if (m.rows() <= cfg.reference_samples)
      throw ConfigError("external dataset smaller than the reference holdout");
    ds.pool = m.topRows(m.rows() - cfg.reference_samples);
    ds.reference = m.bottomRows(cfg.reference_samples);
    return ds;
  }
  data::TargetSpec spec = cfg.target;
  spec.total_samples = cfg.target.total_samples + cfg.reference_samples;
  const Matrix m = data::generate_target(spec, cfg.master_seed);
  ds.pool = m.topRows(cfg.target.total_samples);
  ds.reference = m.bottomRows(cfg.reference_samples);
  return ds;
}

}  // namespace

std::string variant_name(const grid::GridConfig& g) {
  if (g.rows == 1 && g.cols == 1) return "SingleGAN";
  return "Grid-" + std::to_string(g.rows) + "x" + std::to_string(g.cols);
}

RunResult run_experiment(const RunConfig& cfg) {
  cfg.validate();
  const Dataset ds = build_dataset(cfg);

  engine::EngineSetup setup;
  setup.grid = cfg.grid;
  setup.master = &ds.pool;
  setup.plan = data::plan_budget(static_cast<int>(ds.pool.rows()), cfg.batch_size,
                                 cfg.portion, cfg.total_batch_budget);
  setup.coev = cfg.coev;
  setup.nets = cfg.net_spec();
  setup.run_seed = cfg.run_seed;
  setup.mode = cfg.mode;
  const engine::EngineResult trained = engine::run(setup);

  RunResult result;
  result.grid = cfg.grid;
  result.plan = setup.plan;
  result.telemetry = trained.telemetry;

  std::vector<mixture::CellEnsemble> ensembles;
  for (const engine::CellOutcome& cell : trained.cells) {
    const grid::CellId id = cell.cell;
    result.center_generators.push_back(cell.generator);

    // the center generator alone against the reference
    const std::vector<nn::ModelSnapshot> solo{cell.generator};
    Rng score_rng(derive_seed(cfg.run_seed, static_cast<std::uint64_t>(id.row),
                              static_cast<std::uint64_t>(id.col), kCellScoreSalt));
    const Matrix solo_samples = mixture::sample_ensemble(
        solo, mixture::uniform_weights(1), cfg.mixture_ea.eval_sample_count, score_rng);
    const double best_score = scoring::frechet(ds.reference, solo_samples).value;

    // neighborhood ensemble, uniform incumbent evolved by the ES-(1+1)
    const auto nb = grid::neighborhood_of(cfg.grid, id);
    const auto [nb_gens, nb_discs] = trained.board->gather(nb);
    const Matrix& reference =
        cfg.reference_source == ReferenceSource::Holdout
            ? ds.reference
            : ds.pool;  // replaced below for per-cell partitions
    Matrix partition_reference;
    const Matrix* ref = &reference;
    if (cfg.reference_source == ReferenceSource::Partition) {
      const data::DatasetPartition part = engine::cell_partition(cfg.run_seed, setup.plan, id);
      partition_reference = data::take_rows(ds.pool, part.indices);
      ref = &partition_reference;
    }
    Rng es_rng(derive_seed(cfg.run_seed, static_cast<std::uint64_t>(id.row),
                           static_cast<std::uint64_t>(id.col), kMixtureSalt));
    const mixture::EvolveOutcome evolved = mixture::evolve_mixture(
        nb_gens, mixture::uniform_weights(static_cast<int>(nb_gens.size())), *ref,
        cfg.mixture_ea, es_rng);

    result.cells.push_back({id, best_score, evolved.weights, evolved.score.value,
                            evolved.initial_score.value});
    ensembles.push_back({id, evolved.weights, evolved.score});
  }

  const mixture::CellEnsemble& best = mixture::select_best_neighborhood(ensembles);
  result.best_cell = best.cell;
  result.grid_best_score = result.cells[0].best_score;
  result.grid_best_ensemble_score = result.cells[0].evolved_score;
  double sum_best = 0.0, sum_ens = 0.0;
  for (const CellResult& c : result.cells) {
    result.grid_best_score = std::min(result.grid_best_score, c.best_score);
    result.grid_best_ensemble_score =
        std::min(result.grid_best_ensemble_score, c.evolved_score);
    sum_best += c.best_score;
    sum_ens += c.evolved_score;
  }
  result.grid_mean_score = sum_best / static_cast<double>(result.cells.size());
  result.grid_mean_ensemble_score = sum_ens / static_cast<double>(result.cells.size());
  return result;
}

RunResult run_experiment(const RunConfig& cfg, const std::string& out_dir,
                         const std::string& variant, int repeat) {
  RunResult result = run_experiment(cfg);
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  write_scores_csv(out_dir + "/scores.csv", score_rows(result, variant, cfg.portion, repeat));

  {
    std::ofstream os(out_dir + "/weights.csv", std::ios::binary);
    os << "cell_row,cell_col,evolved_score,weights\n";
    for (const CellResult& c : result.cells) {
      os << c.cell.row << ',' << c.cell.col << ',' << fmt_double(c.evolved_score) << ',';
      for (int i = 0; i < c.weights.size(); ++i) {
        if (i) os << ';';
        os << fmt_double(c.weights.weights[i]);
      }
      os << '\n';
    }
  }
  {
    std::ofstream os(out_dir + "/telemetry.csv", std::ios::binary);
    os << "cell_row,cell_col,generation,gen_fitness,disc_fitness,learning_rate\n";
    for (const engine::TelemetryRow& row : result.telemetry) {
      os << row.cell.row << ',' << row.cell.col << ',' << row.generation << ','
         << fmt_double(row.gen_fitness) << ',' << fmt_double(row.disc_fitness) << ','
         << fmt_double(row.learning_rate) << '\n';
    }
  }
  {
    std::ofstream os(out_dir + "/manifest.txt", std::ios::binary);
    os << "config_hash: " << config_hash(cfg) << "\n";
    os << "master_seed: " << cfg.master_seed << "\n";
    os << "run_seed: " << cfg.run_seed << "\n";
    os << "variant: " << variant << "\n";
    os << "repeat: " << repeat << "\n";
    os << "portion: " << fmt_double(cfg.portion) << "\n";
    os << "grid: " << cfg.grid.rows << "x" << cfg.grid.cols << "\n";
    os << "generations: " << result.plan.generations << "\n";
    os << "batches_per_generation: " << result.plan.batches_per_generation << "\n";
    os << "total_batches: " << result.plan.total_batches << "\n";
  }
  result.telemetry_path = out_dir + "/telemetry.csv";
  return result;
}

std::vector<ScoreRow> score_rows(const RunResult& r, const std::string& variant,
                                 double portion, int repeat) {
  std::vector<ScoreRow> rows;
  rows.reserve(r.cells.size());
  for (const CellResult& c : r.cells)
    rows.push_back({variant, portion, repeat, c.cell.row, c.cell.col, c.best_score,
                    c.uniform_score, c.evolved_score});
  return rows;
}

void write_scores_csv(const std::string& path, std::span<const ScoreRow> rows) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open " + path + " for writing");
  os << "variant,portion,repeat,cell_row,cell_col,best_score,"
        "uniform_ensemble_score,evolved_ensemble_score\n";
  for (const ScoreRow& r : rows) {
    os << r.variant << ',' << fmt_double(r.portion) << ',' << r.repeat << ','
       << r.cell_row << ',' << r.cell_col << ',' << fmt_double(r.best_score) << ','
       << fmt_double(r.uniform_ensemble_score) << ','
       << fmt_double(r.evolved_ensemble_score) << '\n';
  }
}

std::vector<ScoreRow> parse_scores_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open " + path);
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("empty scores file " + path);
  std::vector<ScoreRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 8) throw ConfigError("bad scores row: " + line);
    ScoreRow r;
    r.variant = f[0];
    r.portion = to_double(f[1], "portion");
    r.repeat = static_cast<int>(to_long(f[2], "repeat"));
    r.cell_row = static_cast<int>(to_long(f[3], "cell_row"));
    r.cell_col = static_cast<int>(to_long(f[4], "cell_col"));
    r.best_score = to_double(f[5], "best_score");
    r.uniform_ensemble_score = to_double(f[6], "uniform_ensemble_score");
    r.evolved_ensemble_score = to_double(f[7], "evolved_ensemble_score");
    rows.push_back(std::move(r));
  }
  return rows;
}

BootstrapOutcome bootstrap_ensembles(std::span<const nn::ModelSnapshot> pool,
                                     int grid_size, int n_repeats,
                                     const Matrix& reference,
                                     const mixture::MixtureEAConfig& cfg, Rng& rng) {
  constexpr int kNeighborhood = 5;
  if (grid_size < 1) throw ConfigError("bootstrap_ensembles: grid size must be >= 1");
  if (static_cast<int>(pool.size()) < kNeighborhood)
    throw ConfigError("bootstrap_ensembles: need at least 5 independent generators");
  BootstrapOutcome out;
  std::vector<int> idx(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) idx[i] = static_cast<int>(i);
  for (int rep = 0; rep < n_repeats; ++rep) {
    for (int i = 0; i < kNeighborhood; ++i)
      std::swap(idx[i], idx[i + rng.index(static_cast<int>(idx.size()) - i)]);
    std::vector<nn::ModelSnapshot> picks;
    picks.reserve(kNeighborhood);
    for (int i = 0; i < kNeighborhood; ++i) picks.push_back(pool[idx[i]]);
    const mixture::EvolveOutcome evolved = mixture::evolve_mixture(
        picks, mixture::uniform_weights(kNeighborhood), reference, cfg, rng);
    out.uniform_scores.push_back(evolved.initial_score.value);
    out.evolved_scores.push_back(evolved.score.value);
  }
  return out;
}

double improvement_delta(std::span<const double> base_scores,
                         std::span<const double> ensemble_scores) {
  if (base_scores.empty() || ensemble_scores.empty())
    throw ConfigError("improvement_delta: empty score list");
  double base_mean = 0.0, ens_mean = 0.0;
  for (double v : base_scores) base_mean += v;
  base_mean /= static_cast<double>(base_scores.size());
  for (double v : ensemble_scores) ens_mean += v;
  ens_mean /= static_cast<double>(ensemble_scores.size());
  if (base_mean <= 0.0)
    throw ConfigError("improvement_delta: undefined for non-positive base mean");
  return (base_mean - ens_mean) / base_mean * 100.0;
}

namespace {

double binomial(int n, int k) {
  double c = 1.0;
  for (int i = 0; i < k; ++i) c = c * (n - i) / (i + 1);
  return c;
}

// exact two-sided permutation p-value: enumerate every assignment of n1 pool
// positions to the first sample and count rank sums at least as extreme
double exact_permutation_p(const std::vector<double>& ranks, int n1, double u1) {
  const int n = static_cast<int>(ranks.size());
  const int n2 = n - n1;
  const double mu = static_cast<double>(n1) * n2 / 2.0;
  const double observed = std::abs(u1 - mu);
  const double base = static_cast<double>(n1) * (n1 + 1) / 2.0;

  long extreme = 0, total = 0;
  std::vector<int> pick(static_cast<std::size_t>(n1));
  for (int i = 0; i < n1; ++i) pick[static_cast<std::size_t>(i)] = i;
  while (true) {
    double r1 = 0.0;
    for (int i : pick) r1 += ranks[static_cast<std::size_t>(i)];
    ++total;
    if (std::abs(r1 - base - mu) >= observed - 1e-12) ++extreme;

    // next combination in lexicographic order
    int k = n1 - 1;
    while (k >= 0 && pick[static_cast<std::size_t>(k)] == n - n1 + k) --k;
    if (k < 0) break;
    ++pick[static_cast<std::size_t>(k)];
    for (int i = k + 1; i < n1; ++i)
      pick[static_cast<std::size_t>(i)] = pick[static_cast<std::size_t>(i - 1)] + 1;
  }
  return static_cast<double>(extreme) / static_cast<double>(total);
}

}  // namespace

WilcoxonResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b) {
  const int n1 = static_cast<int>(a.size());
  const int n2 = static_cast<int>(b.size());
  if (n1 < 3 || n2 < 3) throw ConfigError("wilcoxon_rank_sum: need at least 3 per sample");
  const int n = n1 + n2;

  std::vector<std::pair<double, int>> pooled;  // (value, sample id)
  pooled.reserve(static_cast<std::size_t>(n));
  for (double v : a) pooled.emplace_back(v, 0);
  for (double v : b) pooled.emplace_back(v, 1);
  std::sort(pooled.begin(), pooled.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });

  // average ranks across ties; collect tie group sizes for the correction
  std::vector<double> ranks(pooled.size());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < pooled.size();) {
    std::size_t j = i;
    while (j < pooled.size() && pooled[j].first == pooled[i].first) ++j;
    const double t = static_cast<double>(j - i);
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[k] = avg_rank;
    if (t > 1.0) tie_term += t * t * t - t;
    i = j;
  }

  double r1 = 0.0;
  for (std::size_t i = 0; i < pooled.size(); ++i)
    if (pooled[i].second == 0) r1 += ranks[i];
  const double u1 = r1 - static_cast<double>(n1) * (n1 + 1) / 2.0;

  WilcoxonResult out;
  out.u_statistic = u1;

  if (binomial(n, std::min(n1, n2)) <= 3e6) {
    out.p_value = exact_permutation_p(ranks, n1, u1);
    return out;
  }

  const double mu = static_cast<double>(n1) * n2 / 2.0;
  const double var = static_cast<double>(n1) * n2 / 12.0 *
                     ((n + 1) - tie_term / (static_cast<double>(n) * (n - 1)));
  if (var <= 0.0) {
    out.p_value = 1.0;  // every value identical
    return out;
  }
  const double shifted = std::max(0.0, std::abs(u1 - mu) - 0.5);  // continuity
  const double z = shifted / std::sqrt(var);
  out.p_value = std::min(1.0, std::erfc(z / std::numbers::sqrt2));
  return out;
}

void emit_heatmap(const Matrix& per_cell_scores, const std::string& path_base) {
  const Eigen::Index rows = per_cell_scores.rows();
  const Eigen::Index cols = per_cell_scores.cols();
  if (rows == 0 || cols == 0) throw ConfigError("emit_heatmap: empty score grid");

  {
    std::ofstream os(path_base + ".csv", std::ios::binary);
    if (!os) throw ConfigError("emit_heatmap: cannot write " + path_base + ".csv");
    for (Eigen::Index r = 0; r < rows; ++r) {
      if (r) os << '\n';
      for (Eigen::Index c = 0; c < cols; ++c) {
        if (c) os << ',';
        os << fmt_double(per_cell_scores(r, c));
      }
    }
  }

  const double lo = per_cell_scores.minCoeff();
  const double hi = per_cell_scores.maxCoeff();
  std::ofstream os(path_base + ".ppm", std::ios::binary);
  if (!os) throw ConfigError("emit_heatmap: cannot write " + path_base + ".ppm");
  os << "P6\n" << cols << ' ' << rows << "\n255\n";
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const double v = per_cell_scores(r, c);
      const double t = hi > lo ? (v - lo) / (hi - lo) : 0.0;  // 0 = best score
      const auto lum = static_cast<unsigned char>(std::lround(255.0 * (1.0 - t)));
      const unsigned char px[3] = {lum, lum, lum};
      os.write(reinterpret_cast<const char*>(px), 3);
    }
  }
  if (!os) throw ConfigError("emit_heatmap: write failed for " + path_base + ".ppm");
}

std::vector<SummaryRow> summarize_runs(std::span<const RunScore> scores) {
  if (scores.empty()) throw ConfigError("summarize_runs: no scores");
  std::map<std::pair<std::string, double>, std::vector<double>> groups;
  for (const RunScore& s : scores)
    groups[{s.variant, s.portion}].push_back(s.value);

  std::vector<SummaryRow> rows;
  for (const auto& [key, values] : groups) {
    SummaryRow row;
    row.variant = key.first;
    row.portion = key.second;
    row.repeats = static_cast<int>(values.size());
    double sum = 0.0;
    row.min = values[0];
    for (double v : values) {
      sum += v;
      row.min = std::min(row.min, v);
    }
    row.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1 && row.mean != 0.0) {
      double ss = 0.0;
      for (double v : values) ss += (v - row.mean) * (v - row.mean);
      const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
      row.std_pct = sd / row.mean * 100.0;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_summary_csv(const std::string& path, std::span<const SummaryRow> rows) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open " + path + " for writing");
  os << "variant,portion,repeats,mean,std_pct,min\n";
  for (const SummaryRow& r : rows)
    os << r.variant << ',' << fmt_double(r.portion) << ',' << r.repeats << ','
       << fmt_double(r.mean) << ',' << fmt_double(r.std_pct) << ',' << fmt_double(r.min)
       << '\n';
}

double median(std::vector<double> v) {
  if (v.empty()) throw ConfigError("median: empty");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<double> CompareOutput::values(const std::string& variant, double portion,
                                          bool mean_aggregation) const {
  std::vector<double> out;
  for (const RunScore& s : mean_aggregation ? mean_in_grid : best_in_grid)
    if (s.variant == variant && s.portion == portion) out.push_back(s.value);
  return out;
}

namespace {

constexpr std::uint64_t kSingleSalt = 0x31783143;
constexpr std::uint64_t kGridSalt = 0x67726964;
constexpr std::uint64_t kBootSalt = 0x626f6f74;

std::uint64_t portion_bits(double portion) {
  std::uint64_t bits;
  static_assert(sizeof(bits) == sizeof(portion));
  std::memcpy(&bits, &portion, sizeof(bits));
  return bits;
}

}  // namespace

CompareOutput compare_experiment(const RunConfig& base, const CompareOptions& opts,
                                 const std::string& out_dir) {
  base.validate();
  opts.grid.validate();
  if (opts.repeats < 1) throw ConfigError("compare: repeats must be >= 1");
  if (opts.portions.empty()) throw ConfigError("compare: no portions given");

  CompareOutput out;
  const std::string grid_variant = variant_name(opts.grid);

  for (const double portion : opts.portions) {
    // independently trained single GANs
    std::vector<nn::ModelSnapshot> pool;
    for (int rep = 0; rep < opts.repeats; ++rep) {
      RunConfig cfg = base;
      cfg.grid = {1, 1};
      cfg.portion = portion;
      cfg.run_seed = derive_seed(base.run_seed, kSingleSalt, portion_bits(portion),
                                 static_cast<std::uint64_t>(rep));
      const RunResult r = run_experiment(cfg);
      const auto rows = score_rows(r, "SingleGAN", portion, rep);
      out.rows.insert(out.rows.end(), rows.begin(), rows.end());
      out.best_in_grid.push_back({"SingleGAN", portion, rep, r.grid_best_score});
      out.mean_in_grid.push_back({"SingleGAN", portion, rep, r.grid_mean_score});
      pool.push_back(r.center_generators[0]);
    }

    // virtual neighborhoods bootstrapped from that pool
    {
      RunConfig cfg = base;
      cfg.portion = portion;
      const Dataset ds = build_dataset(cfg);
      Rng rng(derive_seed(base.run_seed, kBootSalt, portion_bits(portion), 0));
      const BootstrapOutcome boot =
          bootstrap_ensembles(pool, opts.grid.rows, opts.repeats, ds.reference,
                              cfg.mixture_ea, rng);
      for (int rep = 0; rep < opts.repeats; ++rep) {
        out.best_in_grid.push_back(
            {"SingleGAN-Ensemble", portion, rep, boot.evolved_scores[rep]});
        out.mean_in_grid.push_back(
            {"SingleGAN-Ensemble", portion, rep, boot.evolved_scores[rep]});
      }
    }

    // grid-trained runs with evolved neighborhood ensembles
    for (int rep = 0; rep < opts.repeats; ++rep) {
      RunConfig cfg = base;
      cfg.grid = opts.grid;
      cfg.portion = portion;
      cfg.run_seed = derive_seed(base.run_seed, kGridSalt, portion_bits(portion),
                                 static_cast<std::uint64_t>(rep));
      const RunResult r = run_experiment(cfg);
      const auto rows = score_rows(r, grid_variant, portion, rep);
      out.rows.insert(out.rows.end(), rows.begin(), rows.end());
      out.best_in_grid.push_back({grid_variant, portion, rep, r.grid_best_score});
      out.best_in_grid.push_back(
          {grid_variant + "-Ensemble", portion, rep, r.grid_best_ensemble_score});
      out.mean_in_grid.push_back({grid_variant, portion, rep, r.grid_mean_score});
      out.mean_in_grid.push_back(
          {grid_variant + "-Ensemble", portion, rep, r.grid_mean_ensemble_score});
    }

    // ensembling improvement per variant at this portion
    out.deltas.push_back({"SingleGAN", portion,
                          improvement_delta(out.values("SingleGAN", portion),
                                            out.values("SingleGAN-Ensemble", portion))});
    out.deltas.push_back(
        {grid_variant, portion,
         improvement_delta(out.values(grid_variant, portion),
                           out.values(grid_variant + "-Ensemble", portion))});
  }

  out.summary_best = summarize_runs(out.best_in_grid);
  out.summary_mean = summarize_runs(out.mean_in_grid);

  // pairwise significance, same portion across variants and same variant
  // across portions
  if (opts.repeats >= 3) {
    const std::vector<std::string> variants = {
        "SingleGAN", "SingleGAN-Ensemble", grid_variant, grid_variant + "-Ensemble"};
    for (const double portion : opts.portions)
      for (std::size_t i = 0; i < variants.size(); ++i)
        for (std::size_t j = i + 1; j < variants.size(); ++j) {
          const auto a = out.values(variants[i], portion);
          const auto b = out.values(variants[j], portion);
          const WilcoxonResult w = wilcoxon_rank_sum(a, b);
          out.tests.push_back({variants[i], variants[j], portion, portion,
                               w.u_statistic, w.p_value});
        }
    for (const std::string& v : variants)
      for (std::size_t i = 0; i < opts.portions.size(); ++i)
        for (std::size_t j = i + 1; j < opts.portions.size(); ++j) {
          const auto a = out.values(v, opts.portions[i]);
          const auto b = out.values(v, opts.portions[j]);
          const WilcoxonResult w = wilcoxon_rank_sum(a, b);
          out.tests.push_back(
              {v, v, opts.portions[i], opts.portions[j], w.u_statistic, w.p_value});
        }
  }

  if (!out_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    write_scores_csv(out_dir + "/scores.csv", out.rows);
    write_summary_csv(out_dir + "/summary_best.csv", out.summary_best);
    write_summary_csv(out_dir + "/summary_mean.csv", out.summary_mean);
    {
      std::ofstream os(out_dir + "/deltas.csv", std::ios::binary);
      os << "variant,portion,delta_pct\n";
      for (const DeltaRow& d : out.deltas)
        os << d.variant << ',' << fmt_double(d.portion) << ','
           << fmt_double(d.delta_pct) << '\n';
    }
    {
      std::ofstream os(out_dir + "/wilcoxon.csv", std::ios::binary);
      os << "variant_a,variant_b,portion_a,portion_b,u_statistic,p_value\n";
      for (const PairTestRow& t : out.tests)
        os << t.variant_a << ',' << t.variant_b << ',' << fmt_double(t.portion_a)
           << ',' << fmt_double(t.portion_b) << ',' << fmt_double(t.u_statistic)
           << ',' << fmt_double(t.p_value) << '\n';
    }
  }
  return out;
}

}  // namespace coevgan::analysis
