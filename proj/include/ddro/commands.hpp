#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>

#include <json.hpp>

#include "ddro/error.hpp"

namespace ddro::cli {

using nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

// Bad or inconsistent run configuration; maps to exit status 2.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// $DDRO_OUT if set, otherwise ./ddro_out.
std::filesystem::path default_output_root();

// The JSON object in `file` (if any) with `overrides` applied on top.
json load_config(const std::optional<std::filesystem::path>& file, const json& overrides);

// Runs one of: world, sample, train, sweep-consistency, demo-bt,
// ablate-smoothing, check-grad. Every command writes its effective config
// as config.json into its output directory. Returns the exit status:
// 0 on success, 2 for configuration errors, 1 for anything else
// (including a failed internal assertion). Messages go to `err`.
int run_command(std::string_view command, const json& config, std::ostream& out,
                std::ostream& err);

}  // namespace ddro::cli
