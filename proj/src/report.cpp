#include "degsde/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace degsde {

std::string_view to_string(Outcome o) noexcept {
    switch (o) {
    case Outcome::pass: return "pass";
    case Outcome::fail: return "fail";
    case Outcome::inconclusive: return "inconclusive";
    }
    return "unknown";
}

void EstimateReport::add_estimate(std::string name, std::string parameter, double value, double std_error) {
    estimates.push_back({std::move(name), std::move(parameter), value, std_error});
}

void EstimateReport::add_fitted(std::string name, double value, double std_error) {
    fitted.push_back({std::move(name), {}, value, std_error});
}

void EstimateReport::add_verdict(std::string name, bool passed, std::string detail) {
    verdicts.push_back({std::move(name), passed, std::move(detail)});
}

const Estimate* EstimateReport::find_estimate(std::string_view name, std::string_view parameter) const {
    for (const auto& e : estimates)
        if (e.name == name && e.parameter == parameter) return &e;
    for (const auto& e : fitted)
        if (e.name == name && parameter.empty()) return &e;
    return nullptr;
}

const Verdict* EstimateReport::find_verdict(std::string_view name) const {
    for (const auto& v : verdicts)
        if (v.name == name) return &v;
    return nullptr;
}

Outcome EstimateReport::outcome() const {
    if (inconclusive_reason) return Outcome::inconclusive;
    if (verdicts.empty()) return Outcome::inconclusive;
    for (const auto& v : verdicts)
        if (!v.passed) return Outcome::fail;
    return Outcome::pass;
}

namespace {

// JSON has no representation for infinities or NaN.
nlohmann::ordered_json number(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

nlohmann::ordered_json estimate_json(const Estimate& e) {
    nlohmann::ordered_json j;
    j["name"] = e.name;
    j["parameter"] = e.parameter;
    j["value"] = number(e.value);
    j["std_error"] = number(e.std_error);
    return j;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string csv_number(double v) {
    if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

nlohmann::ordered_json EstimateReport::to_json() const {
    nlohmann::ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    j["experiment"] = kind;
    j["config_hash"] = provenance.config_hash;
    j["outcome"] = std::string(to_string(outcome()));
    if (inconclusive_reason) j["inconclusive_reason"] = *inconclusive_reason;
    j["settings"] = settings;
    j["estimates"] = nlohmann::ordered_json::array();
    for (const auto& e : estimates) j["estimates"].push_back(estimate_json(e));
    j["fitted"] = nlohmann::ordered_json::array();
    for (const auto& e : fitted) j["fitted"].push_back(estimate_json(e));
    j["verdicts"] = nlohmann::ordered_json::array();
    for (const auto& v : verdicts) {
        nlohmann::ordered_json vj;
        vj["name"] = v.name;
        vj["passed"] = v.passed;
        vj["detail"] = v.detail;
        j["verdicts"].push_back(vj);
    }
    j["notes"] = notes;
    nlohmann::ordered_json p;
    p["config_hash"] = provenance.config_hash;
    p["seed"] = provenance.seed;
    p["code_version"] = provenance.code_version;
    p["timestamp"] = provenance.timestamp;
    j["provenance"] = p;
    return j;
}

std::string EstimateReport::to_csv() const {
    std::ostringstream out;
    out << "kind,section,name,parameter,value,std_error\n";
    for (const auto& e : estimates)
        out << csv_field(kind) << ",estimate," << csv_field(e.name) << ',' << csv_field(e.parameter) << ','
            << csv_number(e.value) << ',' << csv_number(e.std_error) << '\n';
    for (const auto& e : fitted)
        out << csv_field(kind) << ",fitted," << csv_field(e.name) << ",," << csv_number(e.value) << ','
            << csv_number(e.std_error) << '\n';
    for (const auto& v : verdicts)
        out << csv_field(kind) << ",verdict," << csv_field(v.name) << ",," << (v.passed ? 1 : 0) << ",0\n";
    return out.str();
}

MeanStat mean_stat(const std::vector<double>& xs) {
    MeanStat s;
    if (xs.empty()) return s;
    const double n = static_cast<double>(xs.size());
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / n;
    if (xs.size() < 2) return s;
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.std_error = std::sqrt(ss / (n - 1.0) / n);
    return s;
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace degsde
