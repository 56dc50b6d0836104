#include "ddro/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>

#include "ddro/audit.hpp"
#include "ddro/baselines.hpp"
#include "ddro/format.hpp"
#include "ddro/io.hpp"
#include "ddro/losses.hpp"
#include "ddro/metrics.hpp"
#include "ddro/optimizer.hpp"
#include "ddro/plot.hpp"
#include "ddro/ratio.hpp"
#include "ddro/world.hpp"

namespace fs = std::filesystem;

namespace ddro::cli {
namespace {

// Reads typed values out of the run config and remembers every resolved
// value (defaults included) for config.json.
class Params {
 public:
  Params(std::string_view command, const json& cfg) : cfg_(cfg), effective_(cfg) {
    if (!cfg_.is_object()) {
      throw ConfigError("config must be a JSON object");
    }
    effective_["command"] = std::string(command);
  }

  bool has(const std::string& key) const { return cfg_.contains(key) && !cfg_[key].is_null(); }
  const json& raw(const std::string& key) const { return cfg_.at(key); }
  void record(const std::string& key, json value) { effective_[key] = std::move(value); }
  const json& effective() const { return effective_; }

  template <class T>
  T get(const std::string& key, T fallback) {
    T v = fallback;
    if (has(key)) {
      try {
        v = cfg_[key].get<T>();
      } catch (const json::exception&) {
        throw ConfigError("bad value for '" + key + "'");
      }
    }
    effective_[key] = v;
    return v;
  }

  std::size_t count(const std::string& key, std::size_t fallback) {
    if (has(key) && !(cfg_[key].is_number_integer() && cfg_[key].get<long long>() >= 0)) {
      throw ConfigError("'" + key + "' must be a nonnegative integer");
    }
    return get<std::size_t>(key, fallback);
  }

 private:
  json cfg_;
  json effective_;
};

fs::path output_dir(Params& p, std::string_view command) {
  const fs::path dir = p.get<std::string>("out", (default_output_root() / command).string());
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw ConfigError("output directory not writable: " + dir.string());
  }
  return dir;
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    throw Error("cannot write " + path.string());
  }
  body(f);
  if (!f) {
    throw Error("write failed: " + path.string());
  }
}

void write_json(const fs::path& path, const json& j) {
  write_file(path, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
}

FiniteWorld resolve_world(Params& p) {
  if (p.has("world")) {
    const json& w = p.raw("world");
    if (w.is_string()) {
      const fs::path path = w.get<std::string>();
      if (!fs::is_regular_file(path)) {
        throw ConfigError("world file not found: " + path.string());
      }
      return io::read_world(path);
    }
    if (w.is_object()) {
      return io::world_from_json(w);
    }
    throw ConfigError("'world' must be a file path or an inline world object");
  }
  const std::string preset = p.get<std::string>("preset", "w1");
  if (preset == "w1") {
    return example_world_w1();
  }
  if (preset == "random") {
    return random_world(p.count("n_prompts", 2), p.count("n_responses", 4), p.get("t", 0.5),
                        p.get<std::uint64_t>("world_seed", 0));
  }
  throw ConfigError("unknown world preset: " + preset);
}

json matrix_json(const Matrix& m) { return m.to_rows(); }

// Flat keys (lr, steps, ...) override the nested "train" object, which
// overrides the per-loss defaults.
TrainConfig resolve_train(Params& p, TrainConfig base) {
  if (p.has("train")) {
    base = io::train_config_from_json(p.raw("train"), base);
  }
  base.learning_rate = p.get("lr", base.learning_rate);
  base.steps = p.count("steps", base.steps);
  base.optimizer = parse_optimizer(
      p.get<std::string>("optimizer", std::string(optimizer_name(base.optimizer))));
  base.minibatch_size = p.count("minibatch", base.minibatch_size);
  base.telemetry_every = p.count("telemetry_every", base.telemetry_every);
  base.low_rank = p.count("low_rank", base.low_rank);
  base.weight_decay = p.get("weight_decay", base.weight_decay);
  base.seed = p.get<std::uint64_t>("seed", base.seed);
  base.validate();
  p.record("train", io::train_config_to_json(base));
  return base;
}

LossSpec resolve_spec(Params& p, LossSpec base) {
  if (p.has("loss_spec")) {
    base = io::loss_spec_from_json(p.raw("loss_spec"), base);
  }
  base.gamma = p.get("gamma", base.gamma);
  base.smoothing = SmoothingFn{
      parse_smoothing(p.get<std::string>("smoothing", std::string(base.smoothing.name())))};
  base.kl_in_gradient = p.get("kl_in_gradient", base.kl_in_gradient);
  base.clamp_epsilon = p.get("clamp_epsilon", base.clamp_epsilon);
  base.validate();
  p.record("loss_spec", io::loss_spec_to_json(base));
  return base;
}

struct TrainSetup {
  std::unique_ptr<Objective> objective;
  TrainConfig defaults;
};

TrainConfig empirical_defaults() {
  TrainConfig c;
  c.optimizer = OptimizerKind::adaptive_moment;
  c.learning_rate = 0.01;
  c.steps = 2000;
  return c;
}

// Loss names:
//   population-<generator>            exact population Bregman risk
//   bregman-<generator>               empirical Bregman risk on unpaired data
//   ddro-<generator>                  Bregman risk with the γ terms
//   practical[-<smoothing>]           smoothed risk
//   dpo | ipo | sppo | kto | bco      pair baselines on paired data
//   ddro-simplified                   simplified DDRO pair loss (t = 1/2)
TrainSetup make_objective(Params& p, const FiniteWorld& world, std::uint64_t seed) {
  const std::string loss = p.get<std::string>("loss", "ddro-logistic");
  const Matrix p_ref = reference_distribution(world);
  const std::size_t n = p.count("n", 10000);
  if (p.has("gamma") && !(p.get("gamma", 0.0) >= 0.0)) {
    throw ConfigError("gamma must be nonnegative");
  }
  const auto dash = loss.find('-');
  const std::string head = loss.substr(0, dash);
  const std::string tail = dash == std::string::npos ? "" : loss.substr(dash + 1);

  if (head == "population") {
    const ConvexGenerator gen(parse_generator(tail));
    TrainConfig c;
    c.learning_rate = 0.1;
    c.steps = 5000;
    return {std::make_unique<PopulationBregObjective>(world, gen,
                                                      p.get("clamp_epsilon", kDefaultClampEpsilon)),
            c};
  }
  if (loss == "ddro-simplified" || head == "dpo" || head == "ipo" || head == "sppo" ||
      head == "kto" || head == "bco") {
    const PairedDataset pairs = sample_paired(world, n, seed);
    if (loss == "ddro-simplified") {
      if (world.t() != 0.5) {
        throw ConfigError("ddro-simplified requires t = 0.5");
      }
      return {std::make_unique<PairObjective>(PairObjective::simplified_ddro(pairs, p_ref)),
              empirical_defaults()};
    }
    const double delta = p.get("delta", 0.0);
    return {std::make_unique<PairObjective>(
                PairObjective::baseline(pairs, p_ref, world.t(), parse_baseline(loss), delta)),
            empirical_defaults()};
  }

  LossSpec base;
  base.t = world.t();
  if (head == "bregman" || head == "ddro") {
    base.form = head == "bregman" ? LossForm::bregman : LossForm::ddro;
    base.generator = ConvexGenerator(parse_generator(tail));
  } else if (head == "practical") {
    base.form = LossForm::practical;
    if (!tail.empty()) {
      base.smoothing = SmoothingFn{parse_smoothing(tail)};
    }
  } else {
    throw ConfigError("unknown loss: " + loss);
  }
  const LossSpec spec = resolve_spec(p, base);
  const UnpairedDataset data = sample_unpaired(world, n, n, seed);
  return {std::make_unique<EmpiricalObjective>(data, p_ref, spec), empirical_defaults()};
}

json report_summary(const TrainReport& r, const FiniteWorld& world) {
  return {{"final_error_l2", l2_error(r.final_policy, world)},
          {"final_error_l2_norm", l2_norm_error(r.final_policy, world)},
          {"final_loss", r.final_loss},
          {"g_min", r.g_min},
          {"g_max", r.g_max},
          {"clamp_hits", r.total_clamp_hits},
          {"wall_ms", r.wall_ms}};
}

int cmd_world(Params& p, std::ostream& out) {
  const FiniteWorld world = resolve_world(p);
  const fs::path dir = output_dir(p, "world");
  io::write_world(dir / "world.json", world);
  write_file(dir / "g_star.csv", [&](std::ostream& o) { io::write_ratio_csv(o, g_star(world)); });
  write_file(dir / "r_star.csv", [&](std::ostream& o) { io::write_ratio_csv(o, r_star(world)); });
  write_json(dir / "config.json", p.effective());
  out << "wrote " << (dir / "world.json").string() << '\n';
  return kExitOk;
}

int cmd_sample(Params& p, std::ostream& out) {
  const FiniteWorld world = resolve_world(p);
  const std::uint64_t seed = p.get<std::uint64_t>("seed", 0);
  const bool paired = p.get("paired", false);
  const std::size_t n = p.count("n", 1000);
  const fs::path dir = output_dir(p, "sample");
  fs::path file;
  if (paired) {
    const PairedDataset data = sample_paired(world, n, seed);
    file = dir / "pairs.csv";
    write_file(file, [&](std::ostream& o) { io::write_pairs_csv(o, data); });
  } else {
    const UnpairedDataset data =
        sample_unpaired(world, p.count("n_plus", n), p.count("n_minus", n), seed);
    file = dir / "dataset.csv";
    write_file(file, [&](std::ostream& o) { io::write_dataset_csv(o, data); });
  }
  write_json(dir / "config.json", p.effective());
  out << "wrote " << file.string() << '\n';
  return kExitOk;
}

int cmd_train(Params& p, std::ostream& out) {
  const FiniteWorld world = resolve_world(p);
  const std::uint64_t seed = p.get<std::uint64_t>("seed", 0);
  TrainSetup setup = make_objective(p, world, seed);
  const TrainConfig config = resolve_train(p, setup.defaults);
  const fs::path dir = output_dir(p, "train");

  const TrainReport report = train(init_from_reference(world), *setup.objective, config);
  json summary = report_summary(report, world);
  summary["objective"] = setup.objective->name();
  summary["config"] = p.effective();

  write_file(dir / "report.csv", [&](std::ostream& o) { write_report_csv(o, report); });
  write_json(dir / "summary.json", summary);
  write_json(dir / "policy.json", io::policy_to_json(report.final_policy));
  write_json(dir / "config.json", p.effective());
  out << setup.objective->name() << ": final loss " << fmt_double(report.final_loss)
      << ", L2(p+) error " << fmt_double(summary["final_error_l2"].get<double>()) << '\n';
  return kExitOk;
}

json fit_json(const ScalingFit& fit) {
  return {{"slope", fit.slope},
          {"intercept", fit.intercept},
          {"r_squared", fit.r_squared},
          {"points_used", fit.points_used},
          {"warnings", fit.warnings}};
}

int cmd_sweep(Params& p, std::ostream& out) {
  const FiniteWorld world = resolve_world(p);
  SweepConfig sweep;
  sweep.grid = p.get<std::vector<std::size_t>>("grid", {100, 1000, 10000, 100000});
  if (sweep.grid.size() < 3) {
    throw ConfigError("need ≥ 3 grid points");
  }
  sweep.seeds = p.count("seeds", 10);
  sweep.base_seed = p.get<std::uint64_t>("seed", 0);
  sweep.jobs = p.count("jobs", std::max(1u, std::thread::hardware_concurrency()));
  LossSpec spec = SweepConfig::default_spec();
  spec.t = world.t();
  if (p.has("generator")) {
    spec.generator = ConvexGenerator(parse_generator(p.get<std::string>("generator", "logistic")));
  }
  sweep.spec = resolve_spec(p, spec);
  TrainConfig train = resolve_train(p, SweepConfig::default_train());
  train.telemetry_every = train.steps;
  sweep.train = train;
  sweep.validate();
  const fs::path dir = output_dir(p, "sweep-consistency");

  const SweepResult result = run_consistency_sweep(world, sweep);
  const ScalingFit fit = scaling_fit(result.curve);
  const ScalingFit squared = scaling_fit(result.squared_curve);

  write_file(dir / "curve.csv", [&](std::ostream& o) { write_curve_csv(o, result.curve); });
  write_file(dir / "curve_squared.csv",
             [&](std::ostream& o) { write_curve_csv(o, result.squared_curve); });
  write_file(dir / "runs.csv", [&](std::ostream& o) {
    o << "n,replicate,data_seed,l2_sq,final_loss\n";
    for (const SweepRun& r : result.runs) {
      o << r.n << ',' << r.replicate << ',' << r.data_seed << ',' << fmt_double(r.l2_sq) << ','
        << fmt_double(r.final_loss) << '\n';
    }
  });
  json fj = fit_json(fit);
  fj["metric"] = "l2_norm";
  fj["squared"] = fit_json(squared);
  write_json(dir / "fit.json", fj);

  Series s{"mean L2(p+) error", {}, {}};
  for (const CurvePoint& pt : result.curve.points) {
    s.x.push_back(static_cast<double>(pt.n));
    s.y.push_back(pt.error_mean);
  }
  Series ref{"slope -1/2", s.x, {}};
  for (double x : s.x) {
    ref.y.push_back(s.y.front() * std::sqrt(s.x.front() / x));
  }
  write_file(dir / "curve.svg", [&](std::ostream& o) {
    o << render_line_plot_svg({"Estimation error vs sample size", "n", "error", true, true},
                              {s, ref});
  });
  write_json(dir / "config.json", p.effective());
  out << "slope " << fmt_double(fit.slope) << ", r^2 " << fmt_double(fit.r_squared)
      << " (squared error slope " << fmt_double(squared.slope) << ")\n";
  return kExitOk;
}

int cmd_demo_bt(Params& p, std::ostream& out) {
  const double t_pref = p.get("t_pref", 0.8);
  if (!(t_pref >= 0.0 && t_pref <= 1.0)) {
    throw ConfigError("t_pref must lie in [0, 1]");
  }
  const std::string mode = p.get<std::string>("mode", "population");
  if (mode != "population" && mode != "sampled") {
    throw ConfigError("mode must be population or sampled");
  }
  const std::size_t n_pairs = p.count("n_pairs", 100000);
  const std::uint64_t seed = p.get<std::uint64_t>("seed", 0);
  const double lr = p.get("lr", 1.0);
  const std::size_t steps = p.count("steps", 5000);
  // Start away from the symmetric point so the fit has to find it.
  const std::vector<double> init = p.get<std::vector<double>>("init", {0.0, 0.7, -0.4});
  if (init.size() != 3) {
    throw ConfigError("init must hold 3 rewards");
  }
  const fs::path dir = output_dir(p, "demo-bt");

  const PairwiseWorld world = build_cyclic_world(t_pref);
  BTFitResult fit;
  if (mode == "population") {
    fit = bt_fit_population(world, lr, steps, init);
  } else {
    const std::vector<Comparison> data = sample_comparisons(world, n_pairs, seed);
    fit = bt_fit(data, world.n_responses(), lr, steps, init);
  }
  const auto& r = fit.rewards.rewards;
  const double gap = *std::max_element(r.begin(), r.end()) - *std::min_element(r.begin(), r.end());
  const double predicted_ab = fit.rewards.predicted(0, 1);
  double max_residual = 0.0;
  const std::pair<std::size_t, std::size_t> cycle[] = {{0, 1}, {1, 2}, {2, 0}};
  for (auto [i, j] : cycle) {
    max_residual = std::max(max_residual, std::abs(fit.rewards.predicted(i, j) - world.pref(i, j)));
  }
  const json report = {{"mode", mode},
                       {"t_pref", t_pref},
                       {"rewards", r},
                       {"max_reward_gap", gap},
                       {"predicted", matrix_json(fit.rewards.predicted_matrix())},
                       {"true", matrix_json(world.pref_matrix())},
                       {"predicted_ab", predicted_ab},
                       {"true_ab", t_pref},
                       {"residual", std::abs(predicted_ab - t_pref)},
                       {"max_residual", max_residual},
                       {"nll", fit.nll},
                       {"grad_norm", fit.grad_norm},
                       {"steps", fit.steps}};
  write_json(dir / "report.json", report);
  write_json(dir / "config.json", p.effective());
  out << "predicted Pr[a > b] = " << fmt_double(predicted_ab) << " vs true " << fmt_double(t_pref)
      << ", residual " << fmt_double(std::abs(predicted_ab - t_pref)) << '\n';
  return kExitOk;
}

struct BoundTally {
  std::size_t comparisons = 0;
  std::size_t violations = 0;
  double max_ratio = 0.0;
};

// Per-sample gradient magnitude under logsig against identity at the
// same θ and data.
void tally_bound(BoundTally& tally, const LossSpec& base, const TabularPolicy& policy,
                 const UnpairedDataset& data, const Matrix& p_ref) {
  LossSpec logsig = base;
  logsig.smoothing = SmoothingFn{SmoothingKind::logsig};
  LossSpec identity = base;
  identity.smoothing = SmoothingFn{SmoothingKind::identity};
  const std::vector<double> a = per_sample_gradient_norms(logsig, policy, data, p_ref);
  const std::vector<double> b = per_sample_gradient_norms(identity, policy, data, p_ref);
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++tally.comparisons;
    if (a[i] > b[i] * (1.0 + 1e-12)) {
      ++tally.violations;
    }
    if (b[i] > 0.0) {
      tally.max_ratio = std::max(tally.max_ratio, a[i] / b[i]);
    }
  }
}

int cmd_ablate(Params& p, std::ostream& out, std::ostream& err) {
  const FiniteWorld world = resolve_world(p);
  const std::uint64_t seed = p.get<std::uint64_t>("seed", 0);
  const std::size_t n = p.count("n", 1000);
  LossSpec base;
  base.form = LossForm::practical;
  base.t = world.t();
  base = resolve_spec(p, base);
  TrainConfig defaults = empirical_defaults();
  defaults.steps = 300;
  const TrainConfig config = resolve_train(p, defaults);
  const fs::path dir = output_dir(p, "ablate-smoothing");

  const Matrix p_ref = reference_distribution(world);
  const UnpairedDataset data = sample_unpaired(world, n, n, seed);
  std::vector<TrainReport> reports;
  BoundTally tally;
  json finals = json::object();
  for (SmoothingKind kind : kAllSmoothings) {
    LossSpec spec = base;
    spec.smoothing = SmoothingFn{kind};
    const EmpiricalObjective objective(data, p_ref, spec);
    reports.push_back(train(init_from_reference(world), objective, config,
                            [&](std::size_t, const TabularPolicy& policy) {
                              tally_bound(tally, base, policy, data, p_ref);
                            }));
    json s = report_summary(reports.back(), world);
    s.erase("wall_ms");
    finals[std::string(spec.smoothing.name())] = s;
  }

  write_file(dir / "grad_norms.csv", [&](std::ostream& o) {
    o << "step";
    for (SmoothingKind kind : kAllSmoothings) {
      o << ',' << SmoothingFn{kind}.name();
    }
    o << '\n';
    for (std::size_t i = 0; i < reports.front().records.size(); ++i) {
      o << reports.front().records[i].step;
      for (const TrainReport& r : reports) {
        o << ',' << fmt_double(r.records[i].grad_norm);
      }
      o << '\n';
    }
  });
  std::vector<Series> series;
  for (std::size_t k = 0; k < reports.size(); ++k) {
    Series s{std::string(SmoothingFn{kAllSmoothings[k]}.name()), {}, {}};
    for (const StepRecord& rec : reports[k].records) {
      s.x.push_back(static_cast<double>(rec.step));
      s.y.push_back(rec.grad_norm);
    }
    series.push_back(std::move(s));
  }
  write_file(dir / "grad_norms.svg", [&](std::ostream& o) {
    o << render_line_plot_svg({"Gradient norm by smoothing function", "step", "gradient norm",
                               false, true},
                              series);
  });
  write_json(dir / "bound.json", {{"comparisons", tally.comparisons},
                                  {"violations", tally.violations},
                                  {"max_logsig_to_identity_ratio", tally.max_ratio},
                                  {"final", finals}});
  write_json(dir / "config.json", p.effective());
  out << tally.comparisons << " per-sample comparisons, " << tally.violations
      << " bound violations\n";
  if (tally.violations > 0) {
    err << "error: per-sample gradient bound violated\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_check_grad(Params& p, std::ostream& out, std::ostream& err) {
  const FiniteWorld world = p.has("world") || p.has("preset")
                                ? resolve_world(p)
                                : random_world(2, 4, 0.5, p.get<std::uint64_t>("world_seed", 0));
  const std::size_t points = p.count("points", 20);
  const std::uint64_t seed = p.get<std::uint64_t>("seed", 0);
  const double tolerance = p.get("tolerance", 1e-6);
  const fs::path dir = output_dir(p, "check-grad");

  const std::vector<AuditResult> results = gradient_audit(world, points, seed);
  bool ok = true;
  write_file(dir / "grad_check.csv", [&](std::ostream& o) {
    o << "loss,max_rel_error,points,pass\n";
    for (const AuditResult& r : results) {
      const bool pass = r.max_rel_error <= tolerance;
      ok = ok && pass;
      o << r.name << ',' << fmt_double(r.max_rel_error) << ',' << r.points << ','
        << (pass ? 1 : 0) << '\n';
      out << (pass ? "ok   " : "FAIL ") << r.name << "  " << fmt_double(r.max_rel_error) << '\n';
    }
  });
  write_json(dir / "config.json", p.effective());
  if (!ok) {
    err << "error: gradient check failed\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace

fs::path default_output_root() {
  const char* env = std::getenv("DDRO_OUT");
  return env != nullptr && *env != '\0' ? fs::path(env) : fs::path("ddro_out");
}

json load_config(const std::optional<fs::path>& file, const json& overrides) {
  json cfg = json::object();
  if (file) {
    if (!fs::is_regular_file(*file)) {
      throw ConfigError("config file not found: " + file->string());
    }
    try {
      cfg = json::parse(io::read_text(*file));
    } catch (const json::parse_error& e) {
      throw ConfigError("config file is not valid JSON: " + std::string(e.what()));
    }
    if (!cfg.is_object()) {
      throw ConfigError("config file must hold a JSON object");
    }
  }
  for (const auto& [key, value] : overrides.items()) {
    cfg[key] = value;
  }
  return cfg;
}

int run_command(std::string_view command, const json& config, std::ostream& out,
                std::ostream& err) {
  try {
    Params p(command, config);
    if (command == "world") return cmd_world(p, out);
    if (command == "sample") return cmd_sample(p, out);
    if (command == "train") return cmd_train(p, out);
    if (command == "sweep-consistency") return cmd_sweep(p, out);
    if (command == "demo-bt") return cmd_demo_bt(p, out);
    if (command == "ablate-smoothing") return cmd_ablate(p, out, err);
    if (command == "check-grad") return cmd_check_grad(p, out, err);
    throw ConfigError("unknown command: " + std::string(command));
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace ddro::cli
