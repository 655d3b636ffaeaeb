#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "repoabm/ledger.hpp"
#include "repoabm/rng.hpp"

namespace repoabm {

enum class SizeMode {
    RandomGrowth,    ///< X(0) = x0 Z(0); X grows by g Z(t) X(t) with log-normal Z
    FrozenPowerLaw,  ///< X(0) Pareto with tail exponent nu; Z == 1 afterwards
};

struct GrowthConfig {
    double g = 0.0004;   ///< mean growth rate per step
    double v = 5.0;      ///< relative std of Z
    double x0 = 0.01;    ///< mean initial size
    SizeMode mode = SizeMode::RandomGrowth;
    double nu = 1.4;     ///< Pareto tail exponent (frozen mode)

    void validate() const;
};

/// Log-normal Z with unit mean and relative standard deviation v:
/// Z = exp(s * eps - s^2 / 2), s = sqrt(ln(1 + v^2)).
class UnitMeanLogNormal {
public:
    explicit UnitMeanLogNormal(double v);
    double operator()(Rng& rng) const;
    double log_sigma() const noexcept { return log_sigma_; }

private:
    double log_sigma_;
};

/// Initial money-creation sizes X_i(0). Pareto minimum is x0 (nu - 1) / nu,
/// which fixes the mean at x0.
std::vector<double> init_sizes(const GrowthConfig& config, std::size_t bank_count, Rng& rng);

/// dX_i = g Z_i X_i. Frozen mode uses Z == 1 and draws nothing from `rng`.
std::vector<double> draw_money_creation(std::span<const double> sizes,
                                        const GrowthConfig& config, Rng& rng);

/// Conservative mean-reverting payment shocks from given Gaussian draws:
/// d_i = sigma [u_i - mean(u)], u_i = target_i - D_i + eps_i D_i.
std::vector<double> payment_shocks_from(std::span<const double> deposits,
                                        std::span<const double> targets,
                                        std::span<const double> eps, double sigma);

/// Draws eps ~ N(0,1) per bank and returns payment_shocks_from(...).
std::vector<double> draw_payment_shocks(std::span<const double> deposits,
                                        std::span<const double> targets, double sigma,
                                        Rng& rng);

/// Applies a payment shock: D and C move together. Deposits are floored at zero;
/// a truncated shock moves cash by the truncated amount. Returns the applied shock.
double apply_payment_shock(BankBalanceSheet& bank, double shock);

struct TailEstimate {
    double exponent = 0.0;        ///< +inf for a degenerate (flat) tail
    double standard_error = 0.0;
    std::size_t tail_points = 0;
};

/// Hill estimator over the largest `top_fraction` of `samples` (CCDF exponent).
/// Throws std::invalid_argument for fewer than 10 tail points or a bad fraction.
TailEstimate estimate_tail_exponent(std::span<const double> samples, double top_fraction);

}  // namespace repoabm
