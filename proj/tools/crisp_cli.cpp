// Command-line front end. Links only the C API in crisp/crisp.h.

#include <cstdint>
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "crisp/crisp.h"

namespace {

int check(crisp_status s) {
  if (s == CRISP_OK) return 0;
  std::fprintf(stderr, "error (%s): %s\n", crisp_status_name(s), crisp_last_error());
  return 1;
}

void print_progress(const char* line, void*) { std::printf("%s\n", line); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crisp: curriculum-regularized hierarchical RL with primitive-informed "
               "demonstration parsing"};
  app.require_subcommand(1);

  // train
  std::string train_config, train_out;
  std::uint64_t train_seed = 0;
  bool train_has_seed = false;
  auto* train = app.add_subcommand("train", "run a training configuration");
  train->add_option("--config", train_config, "flat key = value config file")->required();
  auto* seed_opt = train->add_option("--seed", train_seed, "override the config seed");
  train->add_option("--out", train_out, "override the output directory");
  train->callback([&] { train_has_seed = seed_opt->count() > 0; });

  // gen-demos
  std::string gd_env, gd_out, gd_params = "";
  int gd_count = 100;
  std::uint64_t gd_seed = 0;
  auto* gen = app.add_subcommand("gen-demos", "generate expert demonstrations");
  gen->add_option("--env", gd_env, "maze | point | blockpush | rope | line")->required();
  gen->add_option("--count", gd_count, "number of trajectories")->required();
  gen->add_option("--seed", gd_seed, "generator seed")->required();
  gen->add_option("--out", gd_out, "output JSONL file")->required();
  gen->add_option("--params", gd_params, "environment params as JSON");

  // relabel
  std::string rl_demos, rl_ckpt, rl_parser = "pip", rl_out;
  int rl_k = 5;
  auto* relabel = app.add_subcommand("relabel", "parse demos with a checkpointed primitive");
  relabel->add_option("--demos", rl_demos, "demo dataset (JSONL)")->required();
  relabel->add_option("--checkpoint", rl_ckpt, "training checkpoint")->required();
  relabel->add_option("--parser", rl_parser, "pip | window");
  relabel->add_option("--k", rl_k, "window size for the window parser");
  relabel->add_option("--out", rl_out, "output subgoal dataset (JSONL)")->required();

  // eval
  std::string ev_ckpt, ev_suite;
  int ev_rollouts = 100;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--checkpoint", ev_ckpt, "training checkpoint")->required();
  eval->add_option("--suite", ev_suite, "eval suite JSON (env + instance seeds)");
  eval->add_option("--rollouts", ev_rollouts, "number of rollouts");

  // sweep
  std::string sw_config, sw_grid, sw_out = "sweep_out";
  int sw_par = 0;
  auto* sw = app.add_subcommand("sweep", "run a config grid");
  sw->add_option("--config", sw_config, "base config file")->required();
  sw->add_option("--grid", sw_grid, "grid JSON file")->required();
  sw->add_option("--out", sw_out, "archive directory");
  sw->add_option("--parallel", sw_par, "worker count (default: hardware)");

  // plot
  std::string pl_archive, pl_out = "plots";
  auto* pl = app.add_subcommand("plot", "render success curves and curriculum snapshots");
  pl->add_option("--archive", pl_archive, "metrics archive directory")->required();
  pl->add_option("--out", pl_out, "output directory for SVG files");

  CLI11_PARSE(app, argc, argv);

  if (*train) {
    double final_success = 0;
    const crisp_status s = crisp_train(train_config.c_str(),
                                       train_has_seed ? &train_seed : nullptr,
                                       train_out.empty() ? nullptr : train_out.c_str(),
                                       print_progress, nullptr, &final_success);
    if (s == CRISP_OK) std::printf("final success rate: %g\n", final_success);
    return check(s);
  }
  if (*gen) {
    return check(crisp_gen_demos(gd_env.c_str(), gd_params.empty() ? nullptr : gd_params.c_str(),
                                 gd_count, gd_seed, gd_out.c_str()));
  }
  if (*relabel) {
    return check(
        crisp_relabel(rl_demos.c_str(), rl_ckpt.c_str(), rl_parser.c_str(), rl_k, rl_out.c_str()));
  }
  if (*eval) {
    double success = 0;
    const crisp_status s = crisp_evaluate(ev_ckpt.c_str(),
                                          ev_suite.empty() ? nullptr : ev_suite.c_str(),
                                          ev_rollouts, &success);
    if (s == CRISP_OK) std::printf("success rate: %g\n", success);
    return check(s);
  }
  if (*sw) {
    return check(crisp_sweep(sw_config.c_str(), sw_grid.c_str(), sw_out.c_str(), sw_par));
  }
  if (*pl) {
    return check(crisp_plot(pl_archive.c_str(), pl_out.c_str()));
  }
  return 0;
}
