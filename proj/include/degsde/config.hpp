#pragma once

#include "degsde/coefficients.hpp"
#include "degsde/verify.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace degsde {

inline constexpr int kConfigSchemaVersion = 1;

/// Invalid configuration; `field` is the dotted path of the offending key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

struct HypothesisCheckSpec {
    int n0 = 2;
    Ball window;
    RadialSamplingPlan plan;
};

/// A fully resolved run description. `resolved` is the canonical tree with
/// every default filled in; seed and thread count are kept out of it so the
/// hash identifies the experiment rather than one realisation of it.
struct RunConfig {
    nlohmann::ordered_json resolved;
    std::string hash;
    ExperimentKind kind = ExperimentKind::nonexplosion;
    std::optional<CoefficientSet> coeffs;
    std::optional<ExperimentConfig> experiment;  // Monte-Carlo kinds
    std::optional<MaximalSuiteSpec> maximal;     // maximal kind
    HypothesisCheckSpec check;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
    std::size_t trajectory_count = 0;
};

/// Sets a dotted key ("sim.step=1e-4"). The value is read as JSON when it
/// parses, otherwise as a bare string.
void apply_override(nlohmann::ordered_json& tree, const std::string& assignment);

RunConfig resolve_config(const nlohmann::ordered_json& tree);
RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {});
RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// Applies the run seed to whichever experiment the config describes.
void set_seed(RunConfig& cfg, std::uint64_t seed);

}  // namespace degsde
