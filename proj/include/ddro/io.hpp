#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "ddro/baselines.hpp"
#include "ddro/losses.hpp"
#include "ddro/optimizer.hpp"
#include "ddro/policy.hpp"
#include "ddro/ratio.hpp"
#include "ddro/world.hpp"

namespace ddro::io {

using nlohmann::json;

// {n_prompts, n_responses, prompt_dist, p_plus, p_minus, t}
json world_to_json(const FiniteWorld& world);
FiniteWorld world_from_json(const json& j);
FiniteWorld read_world(const std::filesystem::path& path);
void write_world(const std::filesystem::path& path, const FiniteWorld& world);

// CSV with header `label,prompt,response`, label in {+,-}.
void write_dataset_csv(std::ostream& out, const UnpairedDataset& data);
// Grid dimensions are not part of the file; they come from the caller.
UnpairedDataset read_dataset_csv(std::istream& in, std::size_t n_prompts,
                                 std::size_t n_responses);

// CSV with header `prompt,winner,loser`.
void write_pairs_csv(std::ostream& out, const PairedDataset& data);
PairedDataset read_pairs_csv(std::istream& in, std::size_t n_prompts, std::size_t n_responses);

// {logits: [[...]]}
json policy_to_json(const TabularPolicy& policy);
TabularPolicy policy_from_json(const json& j);

// prompt,response,value,masked
void write_ratio_csv(std::ostream& out, const RatioField& field);

// {generator, form, t, gamma, smoothing, kl_in_gradient, clamp_epsilon}
json loss_spec_to_json(const LossSpec& spec);
LossSpec loss_spec_from_json(const json& j, LossSpec base = {});

json train_config_to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const json& j, TrainConfig base = {});

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace ddro::io
