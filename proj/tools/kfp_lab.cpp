#include <CLI11.hpp>
#include <iostream>

#include "kfp/commands.hpp"
#include "kfp/config.hpp"
#include "kfp/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Kramers-Fokker-Planck boundary-value laboratory"};
  std::string command;
  std::string config_path;
  std::string out_dir;
  std::string grid;
  std::uint64_t seed = 0;

  app.add_option("command", command, "solve | viscosity | verify | perron | oracle | crosscheck | report")
      ->required()
      ->check(CLI::IsMember(kfp::command_names()));
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--out", out_dir, "output directory (overrides out_dir)");
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed (overrides seed and oracle.seed)");
  app.add_option("--grid", grid, "grid override, NXxNV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kfp::kExitConfig;
  }

  try {
    kfp::RunConfig cfg = kfp::load_config(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (*seed_opt) {
      cfg.seed = seed;
      cfg.oracle.seed = seed;
    }
    if (!grid.empty()) kfp::apply_grid_override(cfg, grid);
    return kfp::run_command(command, cfg, std::cout);
  } catch (const kfp::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kfp::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kfp::kExitSolver;
  }
}
