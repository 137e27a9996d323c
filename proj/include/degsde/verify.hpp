#pragma once

#include "degsde/analysis.hpp"
#include "degsde/coefficients.hpp"
#include "degsde/report.hpp"
#include "degsde/sde_sim.hpp"

#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

namespace degsde {

enum class ExperimentKind { krylov, occupation, uniqueness, nonexplosion, maximal };

std::string_view to_string(ExperimentKind k) noexcept;
ExperimentKind parse_experiment_kind(std::string_view name);

/// Defaults are deliberately loose; every report echoes the values in force.
struct Tolerances {
    double krylov_spread = 3.0;          // max/median of the spike ratios
    double slope_min = 0.25;             // self-convergence log2 slope
    double occupation_fraction = 0.01;   // smallest-eps mean below this * T
    double max_excluded_fraction = 0.01; // exploded samples tolerated by the signature
};

struct KrylovSpec {
    Vector center;                 // x0; defaults to the start point when empty
    std::vector<int> spike_indices{1, 2, 4, 8};
    double q_tilde = 0.0;          // 0: taken from select_exponents
    double exponent_eps = 1.0;     // eps used by select_exponents
};

struct ExperimentConfig {
    ExperimentConfig(ExperimentKind kind, CoefficientSet coeffs) : kind(kind), coeffs(std::move(coeffs)) {}

    ExperimentKind kind;
    CoefficientSet coeffs;
    SimConfig sim;                  // sim.path_count is the Monte-Carlo budget
    Vector start;
    KrylovSpec krylov;
    std::vector<double> occupation_thickness{0.4, 0.2, 0.1, 0.05};
    int localization = 4;           // stop at the exit of B_{n-1}
    int refinement_levels = 4;      // steps h, h/2, ..., h/2^{levels-1}
    Tolerances tolerances;
    unsigned threads = 0;
    Provenance provenance;

    void validate() const;
};

/// Monte-Carlo estimate of E_y[int_0^T f(X_s) ds] with a left-endpoint Riemann sum.
MeanStat expected_time_integral(const CoefficientSet& coeffs, const Vector& start, const SimConfig& sim,
                                const std::function<double(const Vector&)>& f, unsigned threads = 0);

/// Spike f_k = k^{d/q} 1_{B_{1/k}(x0)}; its L^q norm is vol(B_1)^{1/q} for every k.
double spike_height(int dim, int k, double q);
double spike_lq_norm(int dim, int k, double q);
double unit_ball_volume(int dim);

EstimateReport krylov_ratio_experiment(const ExperimentConfig& cfg);
EstimateReport occupation_decay_experiment(const ExperimentConfig& cfg);
EstimateReport pathwise_uniqueness_signature(const ExperimentConfig& cfg);
EstimateReport nonexplosion_experiment(const ExperimentConfig& cfg);

struct MaximalSuiteSpec {
    enum class Family { bump_indicator, constant };

    int dim = 3;
    double half_width = 2.0;
    std::size_t resolution = 64;
    std::size_t refined_resolution = 96;
    std::size_t radius_count = 12;
    double max_radius = 0.5;
    std::size_t pair_count = 10000;
    std::uint64_t seed = 0;
    std::vector<double> lr_exponents{2.0, 4.0};
    double pair_constant = 0.0;        // 0: 2^d
    double pair_fraction = 0.99;
    double stability_tolerance = 0.2;
    Family family = Family::bump_indicator;
    Provenance provenance;
};

/// Test fields of the battery; the first is always a smooth bump (or a constant).
std::vector<GridField::Sampler> maximal_field_family(const MaximalSuiteSpec& spec);

EstimateReport maximal_suite(const MaximalSuiteSpec& spec);

/// Dispatches on cfg.kind (all kinds except maximal).
EstimateReport run_experiment(const ExperimentConfig& cfg);

}  // namespace degsde
