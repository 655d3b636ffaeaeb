#include "repoabm/shocks.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace repoabm {

void GrowthConfig::validate() const {
    if (!(g >= 0.0)) throw std::invalid_argument("g: must be >= 0");
    if (!(v >= 0.0)) throw std::invalid_argument("v: must be >= 0");
    if (!(x0 > 0.0)) throw std::invalid_argument("x0: must be > 0");
    if (mode == SizeMode::FrozenPowerLaw && !(nu > 1.0))
        throw std::invalid_argument("nu: must be > 1 in frozen-power-law mode");
}

UnitMeanLogNormal::UnitMeanLogNormal(double v) : log_sigma_(std::sqrt(std::log1p(v * v))) {}

double UnitMeanLogNormal::operator()(Rng& rng) const {
    if (log_sigma_ == 0.0) return 1.0;
    return std::exp(log_sigma_ * rng.normal() - 0.5 * log_sigma_ * log_sigma_);
}

std::vector<double> init_sizes(const GrowthConfig& config, std::size_t bank_count, Rng& rng) {
    config.validate();
    if (bank_count < 2) throw std::invalid_argument("init_sizes: need at least 2 banks");
    std::vector<double> sizes(bank_count);
    if (config.mode == SizeMode::FrozenPowerLaw) {
        const double minimum = config.x0 * (config.nu - 1.0) / config.nu;
        for (auto& x : sizes) {
            double u = rng.uniform();
            while (u <= 0.0) u = rng.uniform();
            x = minimum * std::pow(u, -1.0 / config.nu);
        }
    } else {
        const UnitMeanLogNormal z(config.v);
        for (auto& x : sizes) x = config.x0 * z(rng);
    }
    return sizes;
}

std::vector<double> draw_money_creation(std::span<const double> sizes,
                                        const GrowthConfig& config, Rng& rng) {
    std::vector<double> created(sizes.size());
    if (config.mode == SizeMode::FrozenPowerLaw) {
        for (std::size_t i = 0; i < sizes.size(); ++i) created[i] = config.g * sizes[i];
        return created;
    }
    const UnitMeanLogNormal z(config.v);
    for (std::size_t i = 0; i < sizes.size(); ++i) created[i] = config.g * z(rng) * sizes[i];
    return created;
}

std::vector<double> payment_shocks_from(std::span<const double> deposits,
                                        std::span<const double> targets,
                                        std::span<const double> eps, double sigma) {
    const std::size_t n = deposits.size();
    if (targets.size() != n || eps.size() != n)
        throw std::invalid_argument("payment shocks: size mismatch");
    std::vector<double> raw(n);
    for (std::size_t i = 0; i < n; ++i)
        raw[i] = targets[i] - deposits[i] + eps[i] * deposits[i];
    const double mean = n == 0 ? 0.0 : std::accumulate(raw.begin(), raw.end(), 0.0) / n;
    for (auto& r : raw) r = sigma * (r - mean);
    return raw;
}

std::vector<double> draw_payment_shocks(std::span<const double> deposits,
                                        std::span<const double> targets, double sigma,
                                        Rng& rng) {
    std::vector<double> eps(deposits.size());
    for (auto& e : eps) e = rng.normal();
    return payment_shocks_from(deposits, targets, eps, sigma);
}

double apply_payment_shock(BankBalanceSheet& bank, double shock) {
    if (bank.deposits + shock < 0.0) shock = -bank.deposits;
    bank.deposits = clamp_money(bank.deposits + shock);
    bank.cash += shock;
    return shock;
}

TailEstimate estimate_tail_exponent(std::span<const double> samples, double top_fraction) {
    if (!(top_fraction > 0.0 && top_fraction <= 0.2))
        throw std::invalid_argument("tail estimate: top_fraction must lie in (0, 0.2]");
    const auto k = static_cast<std::size_t>(std::floor(top_fraction * samples.size()));
    if (k < 10 || k >= samples.size())
        throw std::invalid_argument("tail estimate: fewer than 10 tail points");

    std::vector<double> sorted(samples.begin(), samples.end());
    if (std::any_of(sorted.begin(), sorted.end(), [](double x) { return !(x > 0.0); }))
        throw std::invalid_argument("tail estimate: samples must be positive");
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k),
                     sorted.end(), std::greater<>());
    const double threshold = sorted[k];
    double sum_log = 0.0;
    for (std::size_t i = 0; i < k; ++i) sum_log += std::log(sorted[i] / threshold);

    TailEstimate est;
    est.tail_points = k;
    if (sum_log <= 0.0) {
        est.exponent = std::numeric_limits<double>::infinity();
        est.standard_error = std::numeric_limits<double>::infinity();
        return est;
    }
    est.exponent = static_cast<double>(k) / sum_log;
    est.standard_error = est.exponent / std::sqrt(static_cast<double>(k));
    return est;
}

}  // namespace repoabm
