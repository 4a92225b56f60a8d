#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coevgan/analysis.hpp"
#include "coevgan/errors.hpp"

namespace {

using namespace coevgan;

grid::GridConfig parse_grid(const std::string& s) {
  const auto x = s.find('x');
  if (x == std::string::npos)
    throw ConfigError("grid must look like ROWSxCOLS, e.g. 3x3");
  grid::GridConfig g;
  g.rows = std::stoi(s.substr(0, x));
  g.cols = std::stoi(s.substr(x + 1));
  g.validate();
  return g;
}

std::vector<double> parse_portions(const std::string& s) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto pos = s.find(',', start);
    const std::string tok =
        pos == std::string::npos ? s.substr(start) : s.substr(start, pos - start);
    if (!tok.empty()) out.push_back(analysis::parse_double(tok));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  if (out.empty()) throw ConfigError("no portions given");
  return out;
}

struct CommonFlags {
  std::string config_path;
  std::optional<double> portion;
  std::optional<std::string> grid;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::string out_dir = "out";
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "run configuration file");
  cmd->add_option("--portion", f.portion, "data portion in (0, 1]");
  cmd->add_option("--grid", f.grid, "grid size, e.g. 3x3");
  cmd->add_option("--seed", f.seed, "run seed");
  cmd->add_option("--mode", f.mode, "async or seq");
  cmd->add_option("--out", f.out_dir, "output directory");
}

analysis::RunConfig load_config(const CommonFlags& f) {
  analysis::RunConfig cfg = f.config_path.empty()
                                ? analysis::RunConfig{}
                                : analysis::parse_config_file(f.config_path);
  if (f.portion) cfg.portion = *f.portion;
  if (f.grid) cfg.grid = parse_grid(*f.grid);
  if (f.seed) cfg.run_seed = *f.seed;
  if (f.mode) {
    if (*f.mode == "async") cfg.mode = engine::ExecMode::Async;
    else if (*f.mode == "seq") cfg.mode = engine::ExecMode::Sequential;
    else throw ConfigError("--mode must be async or seq");
  }
  cfg.validate();
  return cfg;
}

int cmd_run(const CommonFlags& flags, int repeat) {
  const analysis::RunConfig cfg = load_config(flags);
  const std::string variant = analysis::variant_name(cfg.grid);
  const analysis::RunResult r =
      analysis::run_experiment(cfg, flags.out_dir, variant, repeat);
  std::cout << variant << " portion " << analysis::fmt_double(cfg.portion) << ": "
            << r.plan.generations << " generations x "
            << r.plan.batches_per_generation << " batches\n";
  std::cout << "best generator score:   " << analysis::fmt_double(r.grid_best_score)
            << "\n";
  std::cout << "best ensemble score:    "
            << analysis::fmt_double(r.grid_best_ensemble_score) << " (cell "
            << r.best_cell.str() << ")\n";
  std::cout << "results in " << flags.out_dir << "\n";
  return 0;
}

int cmd_bootstrap(const CommonFlags& flags, int pool_size, int repeats) {
  analysis::RunConfig cfg = load_config(flags);
  std::vector<nn::ModelSnapshot> pool;
  std::cout << "training " << pool_size << " independent single GANs...\n";
  for (int i = 0; i < pool_size; ++i) {
    analysis::RunConfig single = cfg;
    single.grid = {1, 1};
    single.run_seed = derive_seed(cfg.run_seed, 0x706f6f6c, static_cast<std::uint64_t>(i));
    const analysis::RunResult r = analysis::run_experiment(single);
    pool.push_back(r.center_generators[0]);
  }

  // the ensembles are scored against the shared holdout reference
  analysis::RunConfig ref_cfg = cfg;
  data::TargetSpec spec = ref_cfg.target;
  spec.total_samples = ref_cfg.target.total_samples + ref_cfg.reference_samples;
  const Matrix master = data::generate_target(spec, ref_cfg.master_seed);
  const Matrix reference = master.bottomRows(ref_cfg.reference_samples);

  Rng rng(derive_seed(cfg.run_seed, 0x62737472, 0));
  const analysis::BootstrapOutcome boot = analysis::bootstrap_ensembles(
      pool, cfg.grid.rows, repeats, reference, cfg.mixture_ea, rng);

  std::filesystem::create_directories(flags.out_dir);
  const std::string path = flags.out_dir + "/bootstrap.csv";
  std::ofstream os(path, std::ios::binary);
  os << "repeat,uniform_score,evolved_score\n";
  for (int i = 0; i < repeats; ++i)
    os << i << ',' << analysis::fmt_double(boot.uniform_scores[i]) << ','
       << analysis::fmt_double(boot.evolved_scores[i]) << '\n';
  std::cout << "Bootstrap-" << cfg.grid.rows << "x" << cfg.grid.cols << ": "
            << repeats << " virtual neighborhoods -> " << path << "\n";
  if (!boot.evolved_scores.empty()) {
    std::cout << "median uniform score: "
              << analysis::fmt_double(analysis::median(boot.uniform_scores)) << "\n";
    std::cout << "median evolved score: "
              << analysis::fmt_double(analysis::median(boot.evolved_scores)) << "\n";
  }
  return 0;
}

int cmd_compare(const CommonFlags& flags, const std::string& portions, int repeats) {
  const analysis::RunConfig cfg = load_config(flags);
  analysis::CompareOptions opts;
  opts.portions = parse_portions(portions);
  opts.repeats = repeats;
  opts.grid = cfg.grid;
  const analysis::CompareOutput out =
      analysis::compare_experiment(cfg, opts, flags.out_dir);
  std::cout << "variant, portion: mean +- std% (min) of best score in grid\n";
  for (const analysis::SummaryRow& row : out.summary_best)
    std::cout << row.variant << ", " << analysis::fmt_double(row.portion) << ": "
              << analysis::fmt_double(row.mean) << " +- "
              << analysis::fmt_double(row.std_pct) << "% ("
              << analysis::fmt_double(row.min) << ")\n";
  std::cout << "ensembling improvement (Delta %):\n";
  for (const analysis::DeltaRow& d : out.deltas)
    std::cout << d.variant << ", " << analysis::fmt_double(d.portion) << ": "
              << analysis::fmt_double(d.delta_pct) << "%\n";
  std::cout << "tables in " << flags.out_dir << "\n";
  return 0;
}

int cmd_heatmap(const std::string& scores_path, const std::string& variant,
                double portion, int repeat, const std::string& column,
                const std::string& out_base) {
  const std::vector<analysis::ScoreRow> rows = analysis::parse_scores_csv(scores_path);
  int max_row = -1, max_col = -1;
  std::map<std::pair<int, int>, double> values;
  for (const analysis::ScoreRow& r : rows) {
    if (r.repeat != repeat || r.portion != portion) continue;
    if (!variant.empty() && r.variant != variant) continue;
    double v = r.evolved_ensemble_score;
    if (column == "best") v = r.best_score;
    else if (column == "uniform") v = r.uniform_ensemble_score;
    else if (column != "evolved") throw ConfigError("--column must be best, uniform or evolved");
    values[{r.cell_row, r.cell_col}] = v;
    max_row = std::max(max_row, r.cell_row);
    max_col = std::max(max_col, r.cell_col);
  }
  if (values.empty()) throw ConfigError("no matching rows in " + scores_path);
  Matrix scores(max_row + 1, max_col + 1);
  for (int r = 0; r <= max_row; ++r)
    for (int c = 0; c <= max_col; ++c) {
      const auto it = values.find({r, c});
      if (it == values.end())
        throw ConfigError("missing score for cell (" + std::to_string(r) + "," +
                          std::to_string(c) + ")");
      scores(r, c) = it->second;
    }
  analysis::emit_heatmap(scores, out_base);
  std::cout << "wrote " << out_base << ".csv and " << out_base << ".ppm\n";
  return 0;
}

int cmd_budget(int dataset_size, int batch_size, const std::string& portions,
               long budget) {
  std::cout << "portion,batches_per_generation,generations,total_batches\n";
  for (const double p : parse_portions(portions)) {
    const data::BudgetPlan plan = data::plan_budget(dataset_size, batch_size, p, budget);
    std::cout << analysis::fmt_double(p) << ',' << plan.batches_per_generation << ','
              << plan.generations << ',' << plan.total_batches << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spatial coevolutionary GAN training with data dieting and "
               "evolved generator-ensemble mixtures"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  int run_repeat = 0;
  CLI::App* run = app.add_subcommand("run", "one full training + mixture run");
  add_common(run, run_flags);
  run->add_option("--repeat", run_repeat, "repeat index recorded in the results");

  CommonFlags boot_flags;
  int boot_pool = 5, boot_repeats = 5;
  CLI::App* boot = app.add_subcommand(
      "bootstrap", "train independent single GANs and evolve virtual-neighborhood mixtures");
  add_common(boot, boot_flags);
  boot->add_option("--pool", boot_pool, "number of independent single GANs");
  boot->add_option("--repeats", boot_repeats, "number of drawn neighborhoods");

  CommonFlags cmp_flags;
  std::string cmp_portions = "0.25,0.5,0.75,1";
  int cmp_repeats = 5;
  CLI::App* cmp = app.add_subcommand(
      "compare", "single-GAN vs grid comparison across data portions");
  add_common(cmp, cmp_flags);
  cmp->add_option("--portions", cmp_portions, "comma-separated data portions");
  cmp->add_option("--repeats", cmp_repeats, "independent runs per variant");

  std::string hm_scores, hm_variant, hm_column = "evolved", hm_out = "heatmap";
  double hm_portion = 1.0;
  int hm_repeat = 0;
  CLI::App* hm = app.add_subcommand("heatmap", "per-cell score heatmap (CSV + PPM)");
  hm->add_option("--scores", hm_scores, "scores.csv produced by run/compare")->required();
  hm->add_option("--variant", hm_variant, "variant filter");
  hm->add_option("--portion", hm_portion, "portion filter");
  hm->add_option("--repeat", hm_repeat, "repeat filter");
  hm->add_option("--column", hm_column, "best, uniform or evolved");
  hm->add_option("--out", hm_out, "output path base");

  int bud_size = 60000, bud_batch = 100;
  long bud_budget = 120000;
  std::string bud_portions = "1,0.75,0.5,0.25";
  CLI::App* bud = app.add_subcommand("budget", "batch-budget equalization table");
  bud->add_option("--size", bud_size, "training dataset size");
  bud->add_option("--batch", bud_batch, "mini-batch size");
  bud->add_option("--portions", bud_portions, "comma-separated data portions");
  bud->add_option("--budget", bud_budget, "total mini-batch budget");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_flags, run_repeat);
    if (boot->parsed()) return cmd_bootstrap(boot_flags, boot_pool, boot_repeats);
    if (cmp->parsed()) return cmd_compare(cmp_flags, cmp_portions, cmp_repeats);
    if (hm->parsed())
      return cmd_heatmap(hm_scores, hm_variant, hm_portion, hm_repeat, hm_column, hm_out);
    if (bud->parsed()) return cmd_budget(bud_size, bud_batch, bud_portions, bud_budget);
  } catch (const coevgan::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
