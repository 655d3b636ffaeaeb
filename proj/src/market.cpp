#include "repoabm/market.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace repoabm {

TrustMatrix init_trust(std::size_t n, Rng& rng) {
    if (n < 2) throw std::invalid_argument("init_trust: need at least 2 banks");
    TrustMatrix phi(n);
    for (BankId i = 0; i < n; ++i)
        for (BankId j = 0; j < n; ++j)
            if (i != j) phi(i, j) = rng.uniform();
    return phi;
}

std::optional<CollateralSplit> post_collateral(const BankBalanceSheet& borrower, double amount) {
    if (amount <= 0.0) return CollateralSplit{};
    if (amount > borrower.collateral_capacity() + kMoneyEpsilon) return std::nullopt;
    CollateralSplit split;
    split.own = std::min(amount, std::max(0.0, borrower.usable_securities));
    split.reused = amount - split.own;
    if (split.reused > borrower.free_collateral()) split.reused = std::max(0.0, borrower.free_collateral());
    split.own = amount - split.reused;
    return split;
}

Market::Market(SystemLedger& ledger, TrustMatrix& trust, MarketParams params, Rng& rng)
    : ledger_(ledger), trust_(trust), params_(params), rng_(rng), report_(ledger.size()) {
    if (params_.max_cascade_depth == 0) params_.max_cascade_depth = 10 * ledger.size();
}

std::vector<BankId> Market::counterparties_by_trust(BankId i, bool ascending) const {
    std::vector<BankId> lenders;
    for (const auto& [lender, amount] : ledger_.bank(i).repos_by_lender) lenders.push_back(lender);
    std::stable_sort(lenders.begin(), lenders.end(), [&](BankId a, BankId b) {
        return ascending ? trust_(i, a) < trust_(i, b) : trust_(i, a) > trust_(i, b);
    });
    return lenders;
}

void Market::close_contract(ContractId id, double amount, std::size_t depth, ClosureCause cause) {
    if (!ledger_.has_contract(id)) return;
    const RepoContract c = ledger_.contract(id);
    amount = std::min(amount, c.notional);
    if (amount <= kMoneyEpsilon && amount < c.notional) return;

    // a recall chain can loop back and consume this lender's collateral again,
    // so recall until it covers the return or a pass frees nothing
    for (;;) {
        if (!ledger_.has_contract(id)) return;
        amount = std::min(amount, ledger_.contract(id).notional);
        const double free = ledger_.bank(c.lender).free_collateral();
        if (free >= amount - kMoneyEpsilon) break;
        recall_collateral(c.lender, amount - free, depth + 1);
        if (ledger_.bank(c.lender).free_collateral() <= free + kMoneyEpsilon)
            throw CascadeAbort("collateral loop: lender cannot return collateral", depth);
    }

    ledger_.settle_closure(id, amount);
    report_.closed.push_back({id, c.borrower, c.lender, amount, cause});
}

void Market::recall_collateral(BankId lender, double deficit, std::size_t depth) {
    if (deficit <= kMoneyEpsilon) return;
    if (depth > params_.max_cascade_depth) {
        std::ostringstream os;
        os << "collateral recall chain exceeded depth " << params_.max_cascade_depth
           << " at bank " << lender;
        throw CascadeAbort(os.str(), depth);
    }
    report_.cascade_depth_max = std::max(report_.cascade_depth_max, depth);

    const auto& bank = ledger_.bank(lender);
    const double target = bank.free_collateral() + deficit;
    for (const BankId k : counterparties_by_trust(lender, /*ascending=*/true)) {
        for (const ContractId id : ledger_.contracts_between(lender, k)) {
            const double remaining = target - bank.free_collateral();
            if (remaining <= kMoneyEpsilon) return;
            if (!ledger_.has_contract(id)) continue;
            const double reused = ledger_.contract(id).reused_collateral;
            if (reused <= kMoneyEpsilon) continue;
            close_contract(id, std::min(remaining, reused), depth, ClosureCause::RecallCascade);
        }
    }
}

void Market::end_repos_phase(std::span<const double> closures) {
    std::vector<BankId> order;
    for (BankId i = 0; i < closures.size(); ++i)
        if (closures[i] > kMoneyEpsilon) order.push_back(i);
    rng_.shuffle(std::span<BankId>(order));

    for (const BankId i : order) {
        const auto& bank = ledger_.bank(i);
        double remaining =
            std::min({closures[i], reserve_slack(bank, params_.alpha), bank.repos});
        if (remaining <= kMoneyEpsilon) continue;
        for (const BankId k : counterparties_by_trust(i, /*ascending=*/true)) {
            for (const ContractId id : ledger_.contracts_between(i, k)) {
                if (!ledger_.has_contract(id)) continue;
                const double y = std::min(remaining, ledger_.contract(id).notional);
                close_contract(id, y, 0, ClosureCause::Leverage);
                remaining -= y;
                if (remaining <= kMoneyEpsilon) break;
            }
            if (remaining <= kMoneyEpsilon) break;
        }
    }
}

void Market::open_repos_phase(std::span<const double> demands) {
    const std::size_t n = ledger_.size();
    std::vector<BankId> requesters;
    for (BankId i = 0; i < n; ++i)
        if (demands[i] > kMoneyEpsilon) requesters.push_back(i);
    rng_.shuffle(std::span<BankId>(requesters));

    std::vector<double> lent(n, 0.0);
    auto capacity_of = [&](BankId j) {
        if (demands[j] >= 0.0) return 0.0;
        const double offered = -demands[j] - lent[j];
        return std::max(0.0, std::min(offered, reserve_slack(ledger_.bank(j), params_.alpha)));
    };

    std::vector<BankId> ranking;
    ranking.reserve(n);
    for (const BankId i : requesters) {
        double need = std::min(demands[i], -reserve_slack(ledger_.bank(i), params_.alpha));
        if (need <= kMoneyEpsilon) continue;

        double collateral = ledger_.bank(i).collateral_capacity();
        if (collateral > kMoneyEpsilon) {
            ranking.clear();
            for (BankId j = 0; j < n; ++j)
                if (j != i) ranking.push_back(j);
            if (params_.order == CounterpartyOrder::Random) {
                rng_.shuffle(std::span<BankId>(ranking));
            } else {
                std::stable_sort(ranking.begin(), ranking.end(),
                                 [&](BankId a, BankId b) { return trust_(i, a) > trust_(i, b); });
            }

            for (const BankId j : ranking) {
                if (need <= kMoneyEpsilon || collateral <= kMoneyEpsilon) break;
                const double offer = std::min(need, capacity_of(j));
                trust_(i, j) = update_trust(trust_(i, j), params_.lambda, need, std::max(0.0, offer));
                if (offer <= kMoneyEpsilon) continue;

                const double amount = std::min(offer, collateral);
                const auto split = post_collateral(ledger_.bank(i), amount);
                if (!split) break;
                ledger_.open_repo(i, j, amount, *split);
                report_.opened.push_back({i, j, amount});
                lent[j] += amount;
                need -= amount;
                collateral = ledger_.bank(i).collateral_capacity();
            }
        }
        if (need > kMoneyEpsilon) {
            ledger_.apply_central_bank_funding(i, need);
            report_.cb_fallback[i] += need;
        }
    }
}

ClearingReport clear_step(SystemLedger& ledger, TrustMatrix& trust,
                          std::span<const FundingDecision> decisions, const MarketParams& params,
                          Rng& rng) {
    std::vector<double> closures(decisions.size()), demands(decisions.size());
    for (std::size_t i = 0; i < decisions.size(); ++i) {
        closures[i] = decisions[i].close_amount;
        demands[i] = decisions[i].dR;
    }
    Market market(ledger, trust, params, rng);
    try {
        market.end_repos_phase(closures);
        market.open_repos_phase(demands);
    } catch (const CascadeAbort& e) {
        market.report().aborted = true;
        market.report().abort_reason = e.what();
        market.report().cascade_depth_max = std::max(market.report().cascade_depth_max, e.depth());
    }
    return market.take_report();
}

}  // namespace repoabm
