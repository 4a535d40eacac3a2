#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "cvi/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"continual-learning workbench"};
  app.require_subcommand(1);

  std::string config_path, config_dir, checkpoint_path, out_override;
  std::int64_t seed_override = -1;

  auto* run_cmd = app.add_subcommand("run", "train and evaluate one config");
  run_cmd->add_option("config", config_path, "run config file")->required();
  run_cmd->add_option("--seed", seed_override, "override config seed");
  run_cmd->add_option("--out", out_override, "override output directory");

  auto* sweep_cmd =
      app.add_subcommand("sweep", "run every config in a directory");
  sweep_cmd->add_option("config-dir", config_dir, "directory of config files")
      ->required();

  auto* grid_cmd = app.add_subcommand(
      "grid", "prediction-probability grid from a saved checkpoint");
  grid_cmd->add_option("checkpoint", checkpoint_path, "checkpoint file")
      ->required();
  grid_cmd->add_option("config", config_path, "run config file")->required();
  grid_cmd->add_option("--seed", seed_override, "override config seed");
  grid_cmd->add_option("--out", out_override, "override output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      cvi::RunConfig cfg = cvi::load_run_config(config_path);
      if (seed_override >= 0) {
        cfg.seed = static_cast<std::uint64_t>(seed_override);
        cfg.trainer.seed = cfg.seed;
      }
      if (!out_override.empty()) cfg.out_dir = out_override;
      cvi::RunResult res = cvi::run(cfg);
      if (res.status != 0) {
        std::cerr << "training diverged: " << res.error << '\n';
        return res.status;
      }
      std::cout << "wrote " << cvi::resolve_out_dir(cfg.out_dir)
                << "/metrics.csv\n";
      return 0;
    }
    if (sweep_cmd->parsed()) return cvi::sweep(config_dir);
    if (grid_cmd->parsed()) {
      cvi::RunConfig cfg = cvi::load_run_config(config_path);
      if (seed_override >= 0) {
        cfg.seed = static_cast<std::uint64_t>(seed_override);
        cfg.trainer.seed = cfg.seed;
      }
      if (!out_override.empty()) cfg.out_dir = out_override;
      cvi::TaskSequence seq = cvi::build_sequence(cfg);
      cvi::Head head = seq.setting == cvi::Setting::domain_incremental
                           ? cvi::Head::binary
                           : cvi::Head::multiclass;
      cvi::FcnnSpec spec;
      spec.input_dim = seq.input_dim;
      spec.hidden = cfg.trainer.hidden;
      spec.output_dim = head == cvi::Head::binary ? 1 : seq.n_classes;
      cvi::Checkpoint ck = cvi::Checkpoint::load(checkpoint_path);
      auto [lo, hi] = cvi::input_bounds(seq);
      cvi::Tensor X = cvi::grid_lattice(lo, hi, cfg.eval.grid_resolution);
      cvi::Rng rng = cvi::Rng(cfg.seed).substream("grid");
      cvi::Tensor probs = cvi::predict_checkpoint(spec, ck, X, head,
                                                  cfg.eval.n_samples, rng);
      std::string dir = cvi::resolve_out_dir(cfg.out_dir);
      std::filesystem::create_directories(dir);
      cvi::write_grid_csv(X, probs, dir + "/grid.csv");
      std::cout << "wrote " << dir << "/grid.csv\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
