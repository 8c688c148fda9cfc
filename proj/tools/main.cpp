#include <exception>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "automarg/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Marginalizing MCMC runner: builds a hierarchical model, optionally "
               "reformulates it by conjugate edge reversal, runs NUTS and reports ESS"};

  automarg::RunConfig cfg;
  std::string mode = "hmc-m";
  std::string exempt_csv;
  bool exempt_given = false;

  app.add_option("--model", cfg.model, "model name (see zoo registry)")->required();
  app.add_option("--data", cfg.data_path, "dataset CSV; bundled default when omitted");
  app.add_option("--mode", mode, "hmc | hmc-m | hmc-r")->default_val("hmc-m");
  app.add_option("--warmup", cfg.nuts.warmup, "warmup iterations")->default_val(2000);
  app.add_option("--samples", cfg.nuts.draws, "posterior draws per chain")
      ->default_val(10000);
  app.add_option("--chains", cfg.nuts.chains, "independent chains")->default_val(4);
  app.add_option("--seed", cfg.nuts.seed, "base RNG seed")->default_val(0);
  auto* exempt_opt = app.add_option(
      "--exempt", exempt_csv,
      "comma-separated node-name globs never marginalized (overrides model default)");
  app.add_option("--target-accept", cfg.nuts.target_accept, "step-size adaptation target")
      ->default_val(0.8);
  app.add_option("--max-tree-depth", cfg.nuts.max_tree_depth, "NUTS doubling limit")
      ->default_val(10);
  app.add_option("--out", cfg.out_path, "write the JSON report here");
  app.add_option("--draws-csv", cfg.draws_csv_path, "write all draws as CSV here");
  app.add_flag("--explain", cfg.explain, "print each edge reversal to stderr");

  CLI11_PARSE(app, argc, argv);
  exempt_given = exempt_opt->count() > 0;

  try {
    cfg.mode = automarg::parse_mode(mode);
    if (exempt_given) {
      std::vector<std::string> globs;
      std::stringstream ss(exempt_csv);
      std::string item;
      while (std::getline(ss, item, ','))
        if (!item.empty()) globs.push_back(item);
      cfg.exempt = globs;
    }
    if (cfg.nuts.warmup < 0 || cfg.nuts.draws < 1 || cfg.nuts.chains < 1)
      throw std::invalid_argument("warmup must be >= 0, samples and chains >= 1");
    if (!(cfg.nuts.target_accept > 0.0 && cfg.nuts.target_accept < 1.0))
      throw std::invalid_argument("target-accept must be in (0, 1)");
    if (cfg.nuts.max_tree_depth < 1)
      throw std::invalid_argument("max-tree-depth must be >= 1");

    automarg::ExperimentReport report = automarg::run(cfg);
    std::cout << report.json << std::endl;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
