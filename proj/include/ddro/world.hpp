#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ddro/matrix.hpp"

namespace ddro {

inline constexpr double kStochasticTolerance = 1e-12;

// Ground-truth generative model over a finite prompt/response grid:
// x ~ prompt_dist, y ~ p_plus(.|x) for preferred, y ~ p_minus(.|x) for
// unpreferred, and the reference model p_ref = t p_plus + (1 - t) p_minus.
// Construct through build_distribution_world; instances are immutable.
class FiniteWorld {
 public:
  std::size_t n_prompts() const { return p_plus_.rows(); }
  std::size_t n_responses() const { return p_plus_.cols(); }
  const std::vector<double>& prompt_dist() const { return prompt_dist_; }
  const Matrix& p_plus() const { return p_plus_; }
  const Matrix& p_minus() const { return p_minus_; }
  double t() const { return t_; }

 private:
  friend FiniteWorld build_distribution_world(Matrix, Matrix, double, std::vector<double>);
  FiniteWorld(Matrix p_plus, Matrix p_minus, double t, std::vector<double> prompt_dist)
      : p_plus_(std::move(p_plus)), p_minus_(std::move(p_minus)), t_(t),
        prompt_dist_(std::move(prompt_dist)) {}

  Matrix p_plus_;
  Matrix p_minus_;
  double t_;
  std::vector<double> prompt_dist_;
};

// Validates and wraps the inputs. Rows must already be stochastic within
// 1e-12; nothing is renormalized. Throws InvalidArgument.
FiniteWorld build_distribution_world(Matrix p_plus, Matrix p_minus, double t,
                                     std::vector<double> prompt_dist);

// The running example: one prompt, p+ = (0.5, 0.3, 0.2), p- = (0.2, 0.3, 0.5), t = 0.5.
FiniteWorld example_world_w1();

// p_ref(y|x) = t p+(y|x) + (1 - t) p-(y|x).
Matrix reference_distribution(const FiniteWorld& world);

// Pairwise preference probabilities for a single prompt:
// pref(i, j) = Pr[y_i > y_j | x]. Diagonal entries are 0.5.
class PairwiseWorld {
 public:
  explicit PairwiseWorld(Matrix pref_matrix);

  std::size_t n_responses() const { return pref_.rows(); }
  const Matrix& pref_matrix() const { return pref_; }
  double pref(std::size_t i, std::size_t j) const { return pref_(i, j); }

 private:
  Matrix pref_;
};

// Pr[a > b] = Pr[b > c] = Pr[c > a] = t_pref over responses (a, b, c) = (0, 1, 2).
PairwiseWorld build_cyclic_world(double t_pref);

struct Sample {
  std::size_t prompt = 0;
  std::size_t response = 0;
  friend bool operator==(const Sample&, const Sample&) = default;
};

struct Triple {
  std::size_t prompt = 0;
  std::size_t winner = 0;
  std::size_t loser = 0;
  friend bool operator==(const Triple&, const Triple&) = default;
};

// Labeled, unlinked samples D+ and D-. The grid dimensions are carried so
// indices can be range-checked against a policy or world.
struct UnpairedDataset {
  std::size_t n_prompts = 0;
  std::size_t n_responses = 0;
  std::vector<Sample> plus;
  std::vector<Sample> minus;

  // Throws InvalidArgument on out-of-range indices or an empty side.
  void validate() const;
  friend bool operator==(const UnpairedDataset&, const UnpairedDataset&) = default;
};

struct PairedDataset {
  std::size_t n_prompts = 0;
  std::size_t n_responses = 0;
  std::vector<Triple> triples;

  void validate() const;
};

UnpairedDataset sample_unpaired(const FiniteWorld& world, std::size_t n_plus,
                                std::size_t n_minus, std::uint64_t seed);

// Independent draws x ~ p_x, y+ ~ p+(.|x), y- ~ p-(.|x) linked into triples.
PairedDataset sample_paired(const FiniteWorld& world, std::size_t n, std::uint64_t seed);

UnpairedDataset pair_to_unpaired(const PairedDataset& paired);

// One observed comparison on a PairwiseWorld (single prompt).
struct Comparison {
  std::size_t winner = 0;
  std::size_t loser = 0;
};

// Cycles through the unordered pairs (i < j) in lexicographic order and
// draws the winner of each with probability pref(i, j); counts per pair
// differ by at most one.
std::vector<Comparison> sample_comparisons(const PairwiseWorld& world, std::size_t n_pairs,
                                           std::uint64_t seed);

// Per-cell empirical frequency of a sample list, normalized by its length.
Matrix empirical_frequencies(const std::vector<Sample>& samples, std::size_t n_prompts,
                             std::size_t n_responses);

}  // namespace ddro
