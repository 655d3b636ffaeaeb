#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "repoabm/ledger.hpp"
#include "repoabm/shocks.hpp"

namespace repoabm {

enum class ScenarioKind { APP, GFC };

/// How banks set central-bank funding each step.
/// Target: smallest M keeping the LCR at or above beta given the booked state.
/// Incremental: max{-(1 - beta) dD_p, -M}, exact only for a bank sitting at its
/// LCR bound; excess LCR is never used to repay funding.
enum class LcrRule { Target, Incremental };

/// Stress scenario active on steps [start, end).
struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::APP;
    Step start = 7000;
    Step end = 14000;

    bool active(Step step) const noexcept { return step >= start && step < end; }
    bool operator==(const ScenarioSpec&) const = default;
};

struct SweepSpec {
    std::string parameter = "beta";
    std::vector<double> values{0.3, 0.5, 0.7, 0.9};
    std::size_t runs = 100;
    std::size_t steps = 10000;

    bool operator==(const SweepSpec&) const = default;
};

/// Every control, regulatory and engine parameter of one simulation.
/// Defaults reproduce the typical run.
struct SimConfig {
    std::size_t n_banks = 300;
    std::size_t steps = 10000;
    std::uint64_t seed = 0;

    // money creation
    double g = 0.0004;
    double v = 5.0;
    double x0 = 0.01;
    SizeMode size_mode = SizeMode::RandomGrowth;
    double nu = 1.4;

    double sigma = 0.05;
    LcrRule lcr_rule = LcrRule::Target;
    double lambda = 0.5;

    double alpha = 0.01;
    double beta = 0.5;
    double beta_new = 0.5;
    double gamma = 0.03;
    double gamma_star = 0.045;
    double gamma_new = 0.09;

    std::vector<std::size_t> windows{1, 5, 20, 50};
    std::vector<std::size_t> lip_windows{50};
    std::size_t lip_null_samples = 1000;
    std::size_t max_cascade_depth = 0;  ///< 0 means 10 * n_banks

    std::optional<ScenarioSpec> scenario;

    GrowthConfig growth() const { return {g, v, x0, size_mode, nu}; }
    RegulatoryParams regulation() const { return {alpha, beta, gamma, gamma_star}; }
    std::size_t cascade_cap() const { return max_cascade_depth == 0 ? 10 * n_banks : max_cascade_depth; }

    /// Throws std::invalid_argument naming the offending key and constraint.
    void validate() const;

    bool operator==(const SimConfig&) const = default;
};

/// Parameter sets of the parameter-space study and the stress tests: equal
/// growth (v = 0) on frozen power-law sizes (nu = 1.4), 100 banks.
SimConfig sweep_preset();
SimConfig scenario_preset();

/// Numeric parameters a sweep may vary.
const std::vector<std::string>& sweepable_parameters();

/// Sets a numeric parameter by name. Throws std::invalid_argument for unknown names.
void set_parameter(SimConfig& config, const std::string& name, double value);

std::string to_string(ScenarioKind kind);
std::string to_string(SizeMode mode);
std::string to_string(LcrRule rule);

}  // namespace repoabm
