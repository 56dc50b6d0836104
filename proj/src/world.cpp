#include "ddro/world.hpp"

#include <cmath>
#include <string>

#include "ddro/error.hpp"
#include "ddro/rng.hpp"

namespace ddro {

namespace {

void check_stochastic_row(std::span<const double> row, const std::string& what) {
  double sum = 0.0;
  for (double v : row) {
    if (!std::isfinite(v) || v < 0.0) {
      throw InvalidArgument(what + " has a negative or non-finite entry");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kStochasticTolerance) {
    throw InvalidArgument(what + " is not stochastic (sum = " + std::to_string(sum) + ")");
  }
}

}  // namespace

FiniteWorld build_distribution_world(Matrix p_plus, Matrix p_minus, double t,
                                     std::vector<double> prompt_dist) {
  if (p_plus.rows() == 0 || p_plus.cols() == 0) {
    throw InvalidArgument("shape mismatch: empty p_plus");
  }
  if (!p_plus.same_shape(p_minus)) {
    throw InvalidArgument("shape mismatch: p_plus and p_minus differ");
  }
  if (prompt_dist.size() != p_plus.rows()) {
    throw InvalidArgument("shape mismatch: prompt_dist length differs from prompt count");
  }
  if (!(t > 0.0 && t < 1.0)) {
    throw InvalidArgument("t out of open interval (0, 1)");
  }
  for (std::size_t x = 0; x < p_plus.rows(); ++x) {
    check_stochastic_row(p_plus.row(x), "p_plus row " + std::to_string(x));
    check_stochastic_row(p_minus.row(x), "p_minus row " + std::to_string(x));
  }
  check_stochastic_row(prompt_dist, "prompt_dist");
  return FiniteWorld(std::move(p_plus), std::move(p_minus), t, std::move(prompt_dist));
}

FiniteWorld example_world_w1() {
  return build_distribution_world(Matrix{{0.5, 0.3, 0.2}}, Matrix{{0.2, 0.3, 0.5}}, 0.5, {1.0});
}

Matrix reference_distribution(const FiniteWorld& world) {
  const double t = world.t();
  Matrix ref(world.n_prompts(), world.n_responses());
  for (std::size_t x = 0; x < ref.rows(); ++x) {
    for (std::size_t y = 0; y < ref.cols(); ++y) {
      ref(x, y) = t * world.p_plus()(x, y) + (1.0 - t) * world.p_minus()(x, y);
    }
  }
  return ref;
}

PairwiseWorld::PairwiseWorld(Matrix pref_matrix) : pref_(std::move(pref_matrix)) {
  if (pref_.rows() == 0 || pref_.rows() != pref_.cols()) {
    throw InvalidArgument("pairwise preference matrix must be square and nonempty");
  }
  for (std::size_t i = 0; i < pref_.rows(); ++i) {
    for (std::size_t j = 0; j < pref_.cols(); ++j) {
      const double p = pref_(i, j);
      if (!(p >= 0.0 && p <= 1.0)) {
        throw InvalidArgument("pairwise probability out of [0, 1]");
      }
      if (i != j && std::abs(p + pref_(j, i) - 1.0) > kStochasticTolerance) {
        throw InvalidArgument("pairwise probabilities are not complementary");
      }
    }
  }
}

PairwiseWorld build_cyclic_world(double t_pref) {
  if (!(t_pref >= 0.0 && t_pref <= 1.0)) {
    throw InvalidArgument("t_pref out of [0, 1]");
  }
  Matrix m(3, 3, 0.5);
  const std::size_t a = 0, b = 1, c = 2;
  m(a, b) = t_pref;
  m(b, c) = t_pref;
  m(c, a) = t_pref;
  m(b, a) = 1.0 - t_pref;
  m(c, b) = 1.0 - t_pref;
  m(a, c) = 1.0 - t_pref;
  return PairwiseWorld(std::move(m));
}

void UnpairedDataset::validate() const {
  if (plus.empty() || minus.empty()) {
    throw InvalidArgument("empty dataset side: need n_plus >= 1 and n_minus >= 1");
  }
  for (const auto* side : {&plus, &minus}) {
    for (const Sample& s : *side) {
      if (s.prompt >= n_prompts || s.response >= n_responses) {
        throw InvalidArgument("sample index out of range");
      }
    }
  }
}

void PairedDataset::validate() const {
  if (triples.empty()) {
    throw InvalidArgument("empty paired dataset");
  }
  for (const Triple& tr : triples) {
    if (tr.prompt >= n_prompts || tr.winner >= n_responses || tr.loser >= n_responses) {
      throw InvalidArgument("triple index out of range");
    }
  }
}

UnpairedDataset sample_unpaired(const FiniteWorld& world, std::size_t n_plus,
                                std::size_t n_minus, std::uint64_t seed) {
  if (n_plus == 0 || n_minus == 0) {
    throw InvalidArgument("sample counts must be >= 1");
  }
  UnpairedDataset data;
  data.n_prompts = world.n_prompts();
  data.n_responses = world.n_responses();

  auto draw = [&](const Matrix& cond, std::size_t n, std::string_view purpose) {
    CounterRng rng = CounterRng::stream(seed, 0, purpose);
    std::vector<Sample> out(n);
    for (Sample& s : out) {
      s.prompt = rng.categorical(world.prompt_dist());
      s.response = rng.categorical(cond.row(s.prompt));
    }
    return out;
  };
  data.plus = draw(world.p_plus(), n_plus, "unpaired/plus");
  data.minus = draw(world.p_minus(), n_minus, "unpaired/minus");
  return data;
}

PairedDataset sample_paired(const FiniteWorld& world, std::size_t n, std::uint64_t seed) {
  if (n == 0) {
    throw InvalidArgument("sample counts must be >= 1");
  }
  PairedDataset data;
  data.n_prompts = world.n_prompts();
  data.n_responses = world.n_responses();
  data.triples.resize(n);
  CounterRng rng = CounterRng::stream(seed, 0, "paired");
  for (Triple& tr : data.triples) {
    tr.prompt = rng.categorical(world.prompt_dist());
    tr.winner = rng.categorical(world.p_plus().row(tr.prompt));
    tr.loser = rng.categorical(world.p_minus().row(tr.prompt));
  }
  return data;
}

UnpairedDataset pair_to_unpaired(const PairedDataset& paired) {
  paired.validate();
  UnpairedDataset data;
  data.n_prompts = paired.n_prompts;
  data.n_responses = paired.n_responses;
  data.plus.reserve(paired.triples.size());
  data.minus.reserve(paired.triples.size());
  for (const Triple& tr : paired.triples) {
    data.plus.push_back({tr.prompt, tr.winner});
    data.minus.push_back({tr.prompt, tr.loser});
  }
  return data;
}

std::vector<Comparison> sample_comparisons(const PairwiseWorld& world, std::size_t n_pairs,
                                           std::uint64_t seed) {
  if (n_pairs == 0) {
    throw InvalidArgument("n_pairs must be >= 1");
  }
  const std::size_t k = world.n_responses();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      pairs.emplace_back(i, j);
    }
  }
  if (pairs.empty()) {
    throw InvalidArgument("pairwise world needs at least two responses");
  }
  CounterRng rng = CounterRng::stream(seed, 0, "comparisons");
  std::vector<Comparison> out(n_pairs);
  for (std::size_t n = 0; n < n_pairs; ++n) {
    const auto [i, j] = pairs[n % pairs.size()];
    const bool i_wins = rng.uniform() < world.pref(i, j);
    out[n] = i_wins ? Comparison{i, j} : Comparison{j, i};
  }
  return out;
}

Matrix empirical_frequencies(const std::vector<Sample>& samples, std::size_t n_prompts,
                             std::size_t n_responses) {
  Matrix freq(n_prompts, n_responses);
  if (samples.empty()) {
    return freq;
  }
  for (const Sample& s : samples) {
    freq(s.prompt, s.response) += 1.0;
  }
  freq *= 1.0 / static_cast<double>(samples.size());
  return freq;
}

}  // namespace ddro
