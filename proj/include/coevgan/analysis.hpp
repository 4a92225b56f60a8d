#ifndef COEVGAN_ANALYSIS_HPP
#define COEVGAN_ANALYSIS_HPP

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "coevgan/dataset.hpp"
#include "coevgan/engine.hpp"
#include "coevgan/mixture.hpp"

namespace coevgan::analysis {

// Shortest round-trip decimal representation (so parse(fmt(x)) == x).
std::string fmt_double(double v);
double parse_double(const std::string& s);

enum class ReferenceSource { Holdout, Partition };

// Everything one experiment needs, readable from a flat `section.key = value`
// text file with `#` comments.
struct RunConfig {
  data::TargetSpec target;
  grid::GridConfig grid{3, 3};
  engine::CoevConfig coev;
  mixture::MixtureEAConfig mixture_ea;

  int batch_size = 100;
  double portion = 1.0;
  long total_batch_budget = 2400;
  std::string external_data_path;  // optional GCDS file replacing the synthetic target

  int latent_dim = 64;
  int hidden_layers = 2;
  int hidden_units = 256;
  nn::Activation hidden_activation = nn::Activation::Tanh;
  nn::Activation generator_output = nn::Activation::Identity;

  ReferenceSource reference_source = ReferenceSource::Holdout;
  int reference_samples = 2000;

  std::uint64_t master_seed = 1;
  std::uint64_t run_seed = 1;
  engine::ExecMode mode = engine::ExecMode::Async;

  void validate() const;
  engine::NetSpec net_spec() const;
};

RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);
std::string serialize_config(const RunConfig& cfg);  // canonical key order
std::string config_hash(const RunConfig& cfg);       // FNV-1a 64, hex

struct CellResult {
  grid::CellId cell;
  double best_score = 0.0;  // center generator alone vs the reference
  mixture::MixtureWeights weights;
  double evolved_score = 0.0;
  double uniform_score = 0.0;
};

struct RunResult {
  std::vector<CellResult> cells;  // row-major
  grid::GridConfig grid;
  data::BudgetPlan plan;
  grid::CellId best_cell;            // by evolved ensemble score
  double grid_best_score = 0.0;      // min over cells of best_score
  double grid_mean_score = 0.0;
  double grid_best_ensemble_score = 0.0;  // min over cells of evolved_score
  double grid_mean_ensemble_score = 0.0;
  std::vector<engine::TelemetryRow> telemetry;
  std::vector<nn::ModelSnapshot> center_generators;  // row-major, for bootstrap pools
  std::string telemetry_path;
};

// Full pipeline: dataset, grid coevolution, per-cell mixture evolution.
RunResult run_experiment(const RunConfig& cfg);

// Same, persisting scores.csv / weights.csv / telemetry.csv / manifest.txt
// under out_dir.
RunResult run_experiment(const RunConfig& cfg, const std::string& out_dir,
                         const std::string& variant, int repeat);

std::string variant_name(const grid::GridConfig& g);  // SingleGAN or Grid-RxC

// One row of the scores table.
struct ScoreRow {
  std::string variant;
  double portion = 1.0;
  int repeat = 0;
  int cell_row = 0;
  int cell_col = 0;
  double best_score = 0.0;
  double uniform_ensemble_score = 0.0;
  double evolved_ensemble_score = 0.0;

  bool operator==(const ScoreRow&) const = default;
};

std::vector<ScoreRow> score_rows(const RunResult& r, const std::string& variant,
                                 double portion, int repeat);
void write_scores_csv(const std::string& path, std::span<const ScoreRow> rows);
std::vector<ScoreRow> parse_scores_csv(const std::string& path);

// Virtual neighborhoods drawn from independently trained generators: each
// repeat picks 5 without replacement and evolves mixture weights for them.
struct BootstrapOutcome {
  std::vector<double> uniform_scores;
  std::vector<double> evolved_scores;
};

BootstrapOutcome bootstrap_ensembles(std::span<const nn::ModelSnapshot> pool,
                                     int grid_size, int n_repeats,
                                     const Matrix& reference,
                                     const mixture::MixtureEAConfig& cfg, Rng& rng);

// (mean(base) - mean(ensemble)) / mean(base) * 100
double improvement_delta(std::span<const double> base_scores,
                         std::span<const double> ensemble_scores);

struct WilcoxonResult {
  double u_statistic = 0.0;  // U of the first sample
  double p_value = 1.0;      // two-sided
};

// Exact two-sided Mann-Whitney for small tie-free samples, normal
// approximation with tie and continuity correction otherwise.
WilcoxonResult wilcoxon_rank_sum(std::span<const double> a,
                                 std::span<const double> b);

// Writes base+".csv" (comma-joined rows) and base+".ppm" (P6 grayscale, one
// pixel per cell, lowest score lightest).
void emit_heatmap(const Matrix& per_cell_scores, const std::string& path_base);

struct RunScore {
  std::string variant;
  double portion = 1.0;
  int repeat = 0;
  double value = 0.0;
};

struct SummaryRow {
  std::string variant;
  double portion = 1.0;
  int repeats = 0;
  double mean = 0.0;
  double std_pct = 0.0;  // sample std as a percentage of the mean
  double min = 0.0;
};

// Per (variant, portion): mean, std% and min across repeats.
std::vector<SummaryRow> summarize_runs(std::span<const RunScore> scores);
void write_summary_csv(const std::string& path, std::span<const SummaryRow> rows);

double median(std::vector<double> v);

// The comparative study: single-GAN baseline, bootstrap ensembles of the
// single-GAN pool, and grid runs with evolved ensembles, per data portion,
// all sharing one master dataset and batch budget.
struct CompareOptions {
  std::vector<double> portions{0.25, 0.5, 0.75, 1.0};
  int repeats = 5;
  grid::GridConfig grid{3, 3};
};

struct DeltaRow {
  std::string variant;
  double portion = 1.0;
  double delta_pct = 0.0;
};

struct PairTestRow {
  std::string variant_a;
  std::string variant_b;
  double portion_a = 1.0;
  double portion_b = 1.0;
  double u_statistic = 0.0;
  double p_value = 1.0;
};

struct CompareOutput {
  std::vector<ScoreRow> rows;           // per-cell rows across all runs
  std::vector<RunScore> best_in_grid;   // one value per (variant, portion, repeat)
  std::vector<RunScore> mean_in_grid;
  std::vector<SummaryRow> summary_best;
  std::vector<SummaryRow> summary_mean;
  std::vector<DeltaRow> deltas;
  std::vector<PairTestRow> tests;

  std::vector<double> values(const std::string& variant, double portion,
                             bool mean_aggregation = false) const;
};

// out_dir empty skips persistence; otherwise writes scores.csv,
// summary_best.csv, summary_mean.csv, deltas.csv and wilcoxon.csv there.
CompareOutput compare_experiment(const RunConfig& base, const CompareOptions& opts,
                                 const std::string& out_dir);

}  // namespace coevgan::analysis

#endif  // COEVGAN_ANALYSIS_HPP
