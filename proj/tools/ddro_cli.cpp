// ddro: command-line front end. Flags override values from --config.

#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "ddro/commands.hpp"

namespace {

using ddro::cli::json;

struct Flags {
  json overrides = json::object();
  std::optional<std::string> config;
};

// Registers `--name` as an override of config key `key`; only flags that
// were given end up in the overrides.
template <class T>
void flag(CLI::App* app, Flags& flags, const std::string& name, const std::string& key,
          const std::string& help) {
  app->add_option_function<T>(
      "--" + name, [&flags, key](const T& v) { flags.overrides[key] = v; }, help);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Direct density ratio optimization lab"};
  app.require_subcommand(1);

  Flags flags;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"world", "write a world and its true ratios"},
      {"sample", "draw an unpaired or paired dataset"},
      {"train", "fit a tabular policy with one loss"},
      {"sweep-consistency", "error vs sample size, with a log-log fit"},
      {"demo-bt", "Bradley-Terry fit on the cyclic preference world"},
      {"ablate-smoothing", "per-sample gradient norms for each smoothing map"},
      {"check-grad", "finite-difference audit of every analytic gradient"}};
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option_function<std::string>(
        "--config", [&flags](const std::string& v) { flags.config = v; }, "JSON run config");
    flag<std::string>(sub, flags, "out", "out", "output directory");
    flag<std::uint64_t>(sub, flags, "seed", "seed", "random seed");
    subs.push_back(sub);
  }
  for (CLI::App* sub : subs) {
    const std::string name = sub->get_name();
    if (name != "demo-bt") {
      flag<std::string>(sub, flags, "world", "world", "world JSON file");
      flag<std::string>(sub, flags, "preset", "preset", "built-in world: w1 | random");
    }
    if (name == "sample" || name == "train" || name == "ablate-smoothing") {
      flag<std::size_t>(sub, flags, "n", "n", "samples per side");
    }
    if (name == "sample") {
      flag<bool>(sub, flags, "paired", "paired", "draw (x, y+, y-) triples");
    }
    if (name == "train" || name == "sweep-consistency" || name == "ablate-smoothing") {
      flag<double>(sub, flags, "lr", "lr", "learning rate");
      flag<std::size_t>(sub, flags, "steps", "steps", "optimizer steps");
      flag<std::string>(sub, flags, "optimizer", "optimizer", "plain_gd | adaptive_moment");
      flag<double>(sub, flags, "gamma", "gamma", "KL weight");
      flag<std::string>(sub, flags, "smoothing", "smoothing",
                        "identity | sig | logsig | neglogsigneg");
    }
    if (name == "train") {
      flag<std::string>(sub, flags, "loss", "loss",
                        "population-<f> | bregman-<f> | ddro-<f> | practical[-<S>] | dpo | ipo "
                        "| sppo | kto | bco | ddro-simplified");
      flag<std::size_t>(sub, flags, "minibatch", "minibatch", "minibatch size (0 = full)");
      flag<std::size_t>(sub, flags, "low-rank", "low_rank", "low-rank logit factorization");
      flag<std::size_t>(sub, flags, "telemetry-every", "telemetry_every", "report interval");
    }
    if (name == "sweep-consistency") {
      sub->add_option_function<std::vector<std::size_t>>(
          "--grid", [&flags](const std::vector<std::size_t>& v) { flags.overrides["grid"] = v; },
          "sample sizes n")->delimiter(',');
      flag<std::size_t>(sub, flags, "seeds", "seeds", "replicates per n");
      flag<std::size_t>(sub, flags, "jobs", "jobs", "worker threads");
      flag<std::string>(sub, flags, "generator", "generator", "logistic | quadratic | kl");
    }
    if (name == "demo-bt") {
      flag<double>(sub, flags, "t-pref", "t_pref", "cyclic preference probability");
      flag<std::string>(sub, flags, "mode", "mode", "population | sampled");
      flag<std::size_t>(sub, flags, "n-pairs", "n_pairs", "comparisons (sampled mode)");
      flag<double>(sub, flags, "lr", "lr", "learning rate");
      flag<std::size_t>(sub, flags, "steps", "steps", "gradient steps");
    }
    if (name == "check-grad") {
      flag<std::size_t>(sub, flags, "points", "points", "random points per loss");
      flag<double>(sub, flags, "tolerance", "tolerance", "max relative error");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ddro::cli::kExitConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  json config;
  try {
    config = ddro::cli::load_config(flags.config, flags.overrides);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ddro::cli::kExitConfig;
  }
  return ddro::cli::run_command(command, config, std::cout, std::cerr);
}
