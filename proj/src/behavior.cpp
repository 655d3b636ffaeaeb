#include "repoabm/behavior.hpp"

#include <algorithm>
#include <stdexcept>

namespace repoabm {

double lcr_funding(double payment_shock, double central_bank_funding, double beta,
                   double created_deposits, double created_securities) {
    if (central_bank_funding < 0.0)
        throw std::invalid_argument("lcr_funding: central bank funding must be >= 0");
    const double needed =
        beta * created_deposits - created_securities - (1.0 - beta) * payment_shock;
    return std::max(needed, -central_bank_funding);
}

double lcr_target_funding(const BankBalanceSheet& bank, double beta) {
    const double liquid = bank.cash + bank.usable_securities + bank.collateral_received -
                          bank.collateral_reused;
    return std::max(beta * bank.deposits - liquid, -bank.central_bank_funding);
}

double reserve_repo_demand(double payment_shock, double created_deposits, double dM,
                           double alpha, const BankBalanceSheet& pre_shock) {
    const double deposits_after = pre_shock.deposits + created_deposits + payment_shock;
    const double cash_after = pre_shock.cash + payment_shock + dM;
    return alpha * deposits_after - cash_after;
}

double reserve_repo_demand(const BankBalanceSheet& post_funding, double alpha) {
    return alpha * post_funding.deposits - post_funding.cash;
}

double leverage_closure(const BankBalanceSheet& bank, double gamma_star, double alpha) {
    const double assets = bank.total_assets();
    if (assets <= 0.0) return 0.0;
    if (bank.own_funds / assets >= gamma_star) return 0.0;
    const double excess_assets = assets - bank.own_funds / gamma_star;
    const double spendable = reserve_slack(bank, alpha);
    const double amount = std::min({excess_assets, bank.repos, spendable});
    return amount > kMoneyEpsilon ? amount : 0.0;
}

double update_trust(double phi, double lambda, double requested, double obtained) {
    if (!(requested > 0.0)) throw std::invalid_argument("update_trust: requested must be > 0");
    const double share = std::clamp(obtained / requested, 0.0, 1.0);
    return std::clamp(phi + lambda * (share - phi), 0.0, 1.0);
}

}  // namespace repoabm
