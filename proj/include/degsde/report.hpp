#pragma once

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace degsde {

inline constexpr std::string_view kCodeVersion = "degsde 1.0.0";
inline constexpr int kReportSchemaVersion = 1;

struct Estimate {
    std::string name;
    std::string parameter;  // e.g. "k=4" or "eps=0.1"; empty for scalars
    double value = 0.0;
    double std_error = 0.0;
};

struct Verdict {
    std::string name;
    bool passed = false;
    std::string detail;
};

enum class Outcome { pass, fail, inconclusive };

std::string_view to_string(Outcome o) noexcept;

struct Provenance {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string timestamp;
    std::string code_version{kCodeVersion};
};

/// Output of one verification experiment. The outcome is derived from the
/// verdicts alone (plus an explicit inconclusive flag), never from raw data.
struct EstimateReport {
    std::string kind;
    std::vector<Estimate> estimates;
    std::vector<Estimate> fitted;
    std::vector<Verdict> verdicts;
    nlohmann::ordered_json settings = nlohmann::ordered_json::object();
    std::vector<std::string> notes;
    std::optional<std::string> inconclusive_reason;
    Provenance provenance;

    void add_estimate(std::string name, std::string parameter, double value, double std_error);
    void add_fitted(std::string name, double value, double std_error);
    void add_verdict(std::string name, bool passed, std::string detail);

    const Estimate* find_estimate(std::string_view name, std::string_view parameter = {}) const;
    const Verdict* find_verdict(std::string_view name) const;

    Outcome outcome() const;

    nlohmann::ordered_json to_json() const;
    /// kind,section,name,parameter,value,std_error
    std::string to_csv() const;
};

/// Mean and standard error of the mean.
struct MeanStat {
    double mean = 0.0;
    double std_error = 0.0;
};
MeanStat mean_stat(const std::vector<double>& xs);

/// 64-bit FNV-1a, rendered as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace degsde
