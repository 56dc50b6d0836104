#include "ddro/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include "ddro/error.hpp"
#include "ddro/format.hpp"
#include "ddro/ratio.hpp"
#include "ddro/rng.hpp"

namespace ddro {

double l2_error(const TabularPolicy& policy, const FiniteWorld& world) {
  if (policy.n_prompts() != world.n_prompts() || policy.n_responses() != world.n_responses()) {
    throw InvalidArgument("policy and world shapes differ");
  }
  double acc = 0.0;
  for (std::size_t x = 0; x < world.n_prompts(); ++x) {
    double row = 0.0;
    for (std::size_t y = 0; y < world.n_responses(); ++y) {
      const double pp = world.p_plus()(x, y);
      const double d = policy.prob(x, y) - pp;
      row += pp * d * d;
    }
    acc += world.prompt_dist()[x] * row;
  }
  return acc;
}

double l2_norm_error(const TabularPolicy& policy, const FiniteWorld& world) {
  return std::sqrt(l2_error(policy, world));
}

LemmaCheck lemma_bound_check(const TabularPolicy& policy, const FiniteWorld& world,
                             const ConvexGenerator& generator, double clamp_epsilon) {
  LemmaCheck out;
  const double t = world.t();
  const Matrix p_ref = reference_distribution(world);
  const GThetaField g = g_theta(policy, p_ref, t, clamp_epsilon);
  const RatioField gs = g_star(world);

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  out.m_plus = std::numeric_limits<double>::infinity();
  for (std::size_t x = 0; x < world.n_prompts(); ++x) {
    for (std::size_t y = 0; y < world.n_responses(); ++y) {
      if (!gs.defined(x, y)) {
        continue;
      }
      out.m_plus = std::min(out.m_plus, world.p_plus()(x, y));
      if (g.raw(x, y) < clamp_epsilon) {
        ++out.clamp_hits;
      }
      for (double v : {g.clamped(x, y), gs(x, y)}) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  }
  const double width = hi - lo;
  out.interval_lo = std::max(lo - 0.01 * width, 0.5 * lo);
  out.interval_hi = hi + 0.01 * width;
  if (!generator.in_domain(out.interval_lo)) {
    // g* = 0 sits on the domain boundary; f'' is decreasing for the
    // shipped generators so the infimum is still at the upper end.
    out.mu = generator.deriv2(out.interval_hi);
  } else {
    out.mu = generator.min_second_derivative(out.interval_lo, out.interval_hi);
  }

  out.lhs = l2_error(policy, world);
  out.breg_loss = population_breg_loss(policy, world, generator, clamp_epsilon);
  const double factor = 2.0 * (1.0 - t) * (1.0 - t) / (t * t * out.m_plus * out.m_plus * out.mu);
  out.rhs = factor * out.breg_loss;
  // Both sides vanish together at the optimum, where the Bregman loss is
  // cancellation noise of order 1e-16 and the factor amplifies it.
  out.holds = out.lhs <= out.rhs + 1e-14 * std::max(1.0, factor);
  return out;
}

void ConsistencyCurve::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].error_mean >= 0.0)) {
      throw InvalidArgument("curve errors must be nonnegative");
    }
    if (i > 0 && points[i].n <= points[i - 1].n) {
      throw InvalidArgument("curve n values must be strictly increasing");
    }
  }
}

ScalingFit scaling_fit(const ConsistencyCurve& curve) {
  curve.validate();
  if (curve.points.size() < 3) {
    throw InvalidArgument("need >= 3 grid points");
  }
  ScalingFit fit;
  std::vector<double> xs;
  std::vector<double> ys;
  for (const CurvePoint& p : curve.points) {
    if (p.error_mean <= 0.0) {
      fit.warnings.push_back("excluded n=" + std::to_string(p.n) + " with zero error");
      continue;
    }
    xs.push_back(std::log(static_cast<double>(p.n)));
    ys.push_back(std::log(p.error_mean));
  }
  if (xs.size() < 3) {
    throw InvalidArgument("need >= 3 grid points with positive error");
  }
  const double k = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss_res += r * r;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  fit.points_used = xs.size();
  return fit;
}

void write_curve_csv(std::ostream& out, const ConsistencyCurve& curve) {
  out << "n,error_mean,error_stderr,seeds\n";
  for (const CurvePoint& p : curve.points) {
    out << p.n << ',' << fmt_double(p.error_mean) << ',' << fmt_double(p.error_stderr) << ','
        << p.seeds << '\n';
  }
}

LossSpec SweepConfig::default_spec() {
  LossSpec spec;
  spec.form = LossForm::bregman;
  spec.generator = ConvexGenerator(GeneratorKind::logistic);
  spec.gamma = 0.0;
  return spec;
}

TrainConfig SweepConfig::default_train() {
  TrainConfig cfg;
  cfg.optimizer = OptimizerKind::plain_gd;
  cfg.learning_rate = 1.0;
  cfg.steps = 3000;
  cfg.telemetry_every = cfg.steps;
  return cfg;
}

void SweepConfig::validate() const {
  if (grid.size() < 3) {
    throw InvalidArgument("need >= 3 grid points");
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] == 0) {
      throw InvalidArgument("grid values must be >= 1");
    }
    if (i > 0 && grid[i] <= grid[i - 1]) {
      throw InvalidArgument("grid values must be strictly increasing");
    }
  }
  if (seeds < 1) {
    throw InvalidArgument("seeds >= 1 required");
  }
  spec.validate();
  train.validate();
}

namespace {

CurvePoint summarize(std::size_t n, const std::vector<double>& values) {
  CurvePoint p;
  p.n = n;
  p.seeds = values.size();
  double mean = 0.0;
  for (double v : values) {
    mean += v;
  }
  mean /= static_cast<double>(values.size());
  p.error_mean = mean;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) {
      ss += (v - mean) * (v - mean);
    }
    const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    p.error_stderr = sd / std::sqrt(static_cast<double>(values.size()));
  }
  return p;
}

}  // namespace

SweepResult run_consistency_sweep(const FiniteWorld& world, const SweepConfig& config) {
  config.validate();
  LossSpec spec = config.spec;
  spec.t = world.t();
  const Matrix p_ref = reference_distribution(world);
  const TabularPolicy start = init_from_reference(world);

  const std::size_t total = config.grid.size() * config.seeds;
  std::vector<SweepRun> runs(total);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t id = next.fetch_add(1);
      if (id >= total) {
        return;
      }
      try {
        SweepRun& run = runs[id];
        run.n = config.grid[id / config.seeds];
        run.replicate = id % config.seeds;
        run.data_seed = CounterRng::stream(config.base_seed, id, "sweep/data").key();
        const UnpairedDataset data = sample_unpaired(world, run.n, run.n, run.data_seed);
        const EmpiricalObjective objective(data, p_ref, spec);
        TrainConfig cfg = config.train;
        cfg.seed = CounterRng::stream(config.base_seed, id, "sweep/train").key();
        const TrainReport report = train(start, objective, cfg);
        run.l2_sq = l2_error(report.final_policy, world);
        run.final_loss = report.final_loss;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) {
          failure = std::current_exception();
        }
        next.store(total);
        return;
      }
    }
  };

  const std::size_t jobs = std::max<std::size_t>(1, std::min(config.jobs, total));
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) {
    pool.emplace_back(worker);
  }
  worker();
  for (auto& th : pool) {
    th.join();
  }
  if (failure) {
    std::rethrow_exception(failure);
  }

  SweepResult result;
  for (std::size_t gi = 0; gi < config.grid.size(); ++gi) {
    std::vector<double> norms;
    std::vector<double> squares;
    for (std::size_t s = 0; s < config.seeds; ++s) {
      const SweepRun& run = runs[gi * config.seeds + s];
      squares.push_back(run.l2_sq);
      norms.push_back(std::sqrt(run.l2_sq));
    }
    result.curve.points.push_back(summarize(config.grid[gi], norms));
    result.squared_curve.points.push_back(summarize(config.grid[gi], squares));
  }
  result.runs = std::move(runs);
  return result;
}

}  // namespace ddro
