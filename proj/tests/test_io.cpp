#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "ddro/error.hpp"
#include "ddro/io.hpp"

using namespace ddro;
namespace fs = std::filesystem;

TEST_CASE("world JSON round trip") {
  const FiniteWorld w = example_world_w1();
  const io::json j = io::world_to_json(w);
  for (const char* key : {"n_prompts", "n_responses", "prompt_dist", "p_plus", "p_minus", "t"})
    CHECK(j.contains(key));
  const FiniteWorld back = io::world_from_json(j);
  CHECK(back.p_plus() == w.p_plus());
  CHECK(back.p_minus() == w.p_minus());
  CHECK(back.t() == w.t());

  const fs::path path = fs::temp_directory_path() / "ddro_io_world.json";
  io::write_world(path, w);
  CHECK(io::read_world(path).p_minus() == w.p_minus());
  fs::remove(path);
}

TEST_CASE("world JSON is validated") {
  io::json j = io::world_to_json(example_world_w1());
  j["t"] = 1.5;
  CHECK_THROWS_AS(io::world_from_json(j), InvalidArgument);
  j = io::world_to_json(example_world_w1());
  j["n_responses"] = 4;
  CHECK_THROWS_AS(io::world_from_json(j), InvalidArgument);
  j.erase("p_plus");
  CHECK_THROWS_AS(io::world_from_json(j), InvalidArgument);
}

TEST_CASE("dataset CSV round trip") {
  const UnpairedDataset d = sample_unpaired(example_world_w1(), 20, 15, 1);
  std::stringstream s;
  io::write_dataset_csv(s, d);
  CHECK(s.str().rfind("label,prompt,response\n+,0,", 0) == 0);
  CHECK(io::read_dataset_csv(s, 1, 3) == d);

  std::istringstream bad("label,prompt,response\n*,0,1\n-,0,0\n");
  CHECK_THROWS_AS(io::read_dataset_csv(bad, 1, 3), InvalidArgument);
  std::istringstream range("label,prompt,response\n+,0,7\n-,0,0\n");
  CHECK_THROWS_AS(io::read_dataset_csv(range, 1, 3), InvalidArgument);
}

TEST_CASE("pairs CSV round trip") {
  const PairedDataset d = sample_paired(example_world_w1(), 12, 2);
  std::stringstream s;
  io::write_pairs_csv(s, d);
  CHECK(s.str().rfind("prompt,winner,loser\n", 0) == 0);
  CHECK(io::read_pairs_csv(s, 1, 3).triples == d.triples);
}

TEST_CASE("policy checkpoint round trip is exact") {
  const TabularPolicy p(Matrix{{0.1, -2.0 / 3.0, 1e-17}, {5.0, 0.0, -1.0}});
  const io::json j = io::policy_to_json(p);
  CHECK(j.contains("logits"));
  const TabularPolicy back = io::policy_from_json(io::json::parse(j.dump()));
  CHECK(back.logits() == p.logits());
}

TEST_CASE("ratio CSV marks the support") {
  const FiniteWorld w =
      build_distribution_world({{0.5, 0.5, 0.0}}, {{0.4, 0.0, 0.6}}, 0.5, {1.0});
  std::ostringstream s;
  io::write_ratio_csv(s, g_star(w));
  std::istringstream in(s.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "prompt,response,value,masked");
  std::getline(in, line);
  CHECK(line == "0,0,0.8,1");
  std::getline(in, line);
  std::getline(in, line);
  CHECK(line.substr(line.size() - 2) == ",0");
}

TEST_CASE("loss spec and train config JSON") {
  LossSpec s;
  s.generator = ConvexGenerator(GeneratorKind::kl);
  s.gamma = 0.25;
  s.smoothing = SmoothingFn{SmoothingKind::sig};
  const io::json j = io::loss_spec_to_json(s);
  for (const char* key : {"generator", "t", "gamma", "smoothing", "kl_in_gradient", "clamp_epsilon"})
    CHECK(j.contains(key));
  const LossSpec back = io::loss_spec_from_json(j);
  CHECK(back.generator.kind() == GeneratorKind::kl);
  CHECK(back.gamma == 0.25);
  CHECK(back.smoothing.kind == SmoothingKind::sig);

  CHECK_THROWS_WITH_AS(io::loss_spec_from_json({{"gamma", -1.0}}),
                       doctest::Contains("gamma must be nonnegative"), InvalidArgument);

  TrainConfig c;
  c.learning_rate = 0.3;
  c.steps = 77;
  c.optimizer = OptimizerKind::adaptive_moment;
  const TrainConfig cb = io::train_config_from_json(io::train_config_to_json(c));
  CHECK(cb.learning_rate == 0.3);
  CHECK(cb.steps == 77);
  CHECK(cb.optimizer == OptimizerKind::adaptive_moment);
}
