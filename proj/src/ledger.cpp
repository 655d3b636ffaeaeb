#include "repoabm/ledger.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace repoabm {

double clamp_money(double value) noexcept {
    return std::abs(value) < kMoneyEpsilon ? 0.0 : value;
}

void RegulatoryParams::validate() const {
    if (!(alpha >= 0.0 && alpha < beta && beta <= 1.0))
        throw std::invalid_argument("regulatory params: require 0 <= alpha < beta <= 1");
    if (!(gamma > 0.0 && gamma < gamma_star && gamma_star < 1.0))
        throw std::invalid_argument("regulatory params: require 0 < gamma < gamma_star < 1");
}

MoneyCreationDelta money_creation_delta(double created, double gamma_new, double beta_new) {
    if (created < 0.0) throw std::invalid_argument("money creation: amount must be >= 0");
    if (gamma_new < 0.0 || gamma_new > 1.0 || beta_new < 0.0 || beta_new > 1.0)
        throw std::invalid_argument("money creation: gamma_new and beta_new must lie in [0,1]");
    MoneyCreationDelta d;
    d.deposits = (1.0 - gamma_new) * created;
    d.usable_securities = beta_new * d.deposits;
    d.loans = created - d.usable_securities;
    d.own_funds = gamma_new * created;
    return d;
}

MoneyCreationDelta apply_money_creation(BankBalanceSheet& bank, double created,
                                        double gamma_new, double beta_new) {
    const auto d = money_creation_delta(created, gamma_new, beta_new);
    bank.deposits += d.deposits;
    bank.loans += d.loans;
    bank.usable_securities += d.usable_securities;
    bank.own_funds += d.own_funds;
    return d;
}

std::optional<double> lcr_ratio(const BankBalanceSheet& bank) {
    if (bank.deposits <= 0.0) return std::nullopt;
    return (bank.cash + bank.usable_securities + bank.free_collateral()) / bank.deposits;
}

std::optional<double> leverage_ratio(const BankBalanceSheet& bank) {
    const double assets = bank.total_assets();
    if (assets <= 0.0) return std::nullopt;
    return bank.own_funds / assets;
}

double reserve_slack(const BankBalanceSheet& bank, double alpha) noexcept {
    return bank.cash - alpha * bank.deposits;
}

SystemLedger::SystemLedger(std::size_t bank_count)
    : banks_(bank_count), by_borrower_(bank_count) {
    for (BankId i = 0; i < bank_count; ++i) banks_[i].id = i;
}

std::vector<ContractId> SystemLedger::contracts_between(BankId borrower, BankId lender) const {
    const auto& lenders = by_borrower_.at(borrower);
    const auto it = lenders.find(lender);
    if (it == lenders.end()) return {};
    return it->second;
}

void SystemLedger::add_book_entry(std::map<BankId, double>& book, BankId key, double delta) {
    auto& value = book[key];
    value += delta;
    if (value < kMoneyEpsilon) book.erase(key);
}

ContractId SystemLedger::open_repo(BankId borrower, BankId lender, double notional,
                                   CollateralSplit split) {
    if (borrower == lender || borrower >= size() || lender >= size())
        throw std::invalid_argument("open_repo: invalid counterparties");
    if (!(notional > 0.0)) throw std::invalid_argument("open_repo: notional must be > 0");
    if (split.own < 0.0 || split.reused < 0.0 ||
        std::abs(split.own + split.reused - notional) > kMoneyEpsilon + 1e-12 * notional)
        throw std::invalid_argument("open_repo: collateral split must equal the notional");

    auto& b = banks_[borrower];
    auto& l = banks_[lender];
    if (split.own > b.usable_securities + kMoneyEpsilon ||
        split.reused > b.free_collateral() + kMoneyEpsilon)
        throw std::invalid_argument("open_repo: borrower lacks collateral");

    b.cash += notional;
    b.usable_securities = clamp_money(b.usable_securities - split.own);
    b.encumbered_securities += split.own;
    b.collateral_reused += split.reused;
    b.repos += notional;
    add_book_entry(b.repos_by_lender, lender, notional);

    l.cash -= notional;
    l.reverse_repos += notional;
    l.collateral_received += notional;
    add_book_entry(l.reverse_repos_by_borrower, borrower, notional);

    const ContractId id = next_id_++;
    contracts_.emplace(id, RepoContract{id, borrower, lender, notional, split.own, split.reused, step_});
    by_borrower_[borrower][lender].push_back(id);
    return id;
}

CollateralSplit SystemLedger::settle_closure(ContractId id, double amount) {
    auto it = contracts_.find(id);
    if (it == contracts_.end()) throw std::invalid_argument("settle_closure: unknown contract");
    RepoContract& c = it->second;
    if (!(amount > 0.0)) return {};
    if (amount >= c.notional - kMoneyEpsilon) amount = c.notional;

    auto& b = banks_[c.borrower];
    auto& l = banks_[c.lender];
    if (l.free_collateral() < amount - kMoneyEpsilon * 10)
        throw std::logic_error("settle_closure: lender cannot return collateral");

    CollateralSplit back;
    const bool full = amount == c.notional;
    back.reused = full ? c.reused_collateral : std::min(amount, c.reused_collateral);
    back.own = full ? c.own_collateral : amount - back.reused;

    b.cash -= amount;
    b.repos = clamp_money(b.repos - amount);
    b.collateral_reused = clamp_money(b.collateral_reused - back.reused);
    b.encumbered_securities = clamp_money(b.encumbered_securities - back.own);
    b.usable_securities += back.own;
    add_book_entry(b.repos_by_lender, c.lender, -amount);

    l.cash += amount;
    l.reverse_repos = clamp_money(l.reverse_repos - amount);
    l.collateral_received = clamp_money(l.collateral_received - amount);
    add_book_entry(l.reverse_repos_by_borrower, c.borrower, -amount);

    if (full) {
        auto& lenders = by_borrower_[c.borrower];
        auto& ids = lenders[c.lender];
        ids.erase(std::find(ids.begin(), ids.end(), id));
        if (ids.empty()) {
            lenders.erase(c.lender);
            // books may keep a rounding residue; the exposure is gone
            b.repos_by_lender.erase(c.lender);
            l.reverse_repos_by_borrower.erase(c.borrower);
        }
        contracts_.erase(it);
    } else {
        c.notional -= amount;
        c.reused_collateral -= back.reused;
        c.own_collateral = std::max(0.0, c.own_collateral - back.own);
    }
    return back;
}

void SystemLedger::apply_central_bank_funding(BankId id, double amount) {
    auto& b = banks_.at(id);
    b.central_bank_funding = clamp_money(b.central_bank_funding + amount);
    b.cash += amount;
}

double excess_liquidity(const SystemLedger& system, double alpha) {
    double total = 0.0;
    for (const auto& b : system.banks()) total += reserve_slack(b, alpha);
    return total;
}

namespace {

struct Recomputed {
    double encumbered = 0.0, reused = 0.0, repos = 0.0, reverse = 0.0;
    std::map<BankId, double> by_lender;
};

bool close_enough(double a, double b, double scale) {
    return std::abs(a - b) <= kIdentityTolerance * scale + kMoneyEpsilon;
}

}  // namespace

InvariantReport check_invariants(const SystemLedger& system, InvariantOptions options) {
    InvariantReport report;
    auto flag = [&](BankId id, const std::string& what) {
        std::ostringstream os;
        os << "bank " << id << ": " << what;
        report.violations.push_back(os.str());
    };

    std::vector<Recomputed> sums(system.size());
    for (const auto& [id, c] : system.contracts()) {
        if (!(c.notional > 0.0) ||
            std::abs(c.own_collateral + c.reused_collateral - c.notional) > kMoneyEpsilon * 10) {
            std::ostringstream os;
            os << "contract " << id << ": collateral does not match notional";
            report.violations.push_back(os.str());
        }
        auto& b = sums[c.borrower];
        b.encumbered += c.own_collateral;
        b.reused += c.reused_collateral;
        b.repos += c.notional;
        b.by_lender[c.lender] += c.notional;
        sums[c.lender].reverse += c.notional;
    }

    for (const auto& bank : system.banks()) {
        const double assets = bank.total_assets();
        const double liabilities = bank.total_liabilities();
        const double scale = std::max({std::abs(assets), std::abs(liabilities), 0.0});
        if (std::abs(assets - liabilities) > kIdentityTolerance * scale &&
            std::abs(assets - liabilities) > 0.0) {
            std::ostringstream os;
            os << "accounting identity broken (assets " << assets << ", liabilities "
               << liabilities << ")";
            flag(bank.id, os.str());
        }
        const auto& s = sums[bank.id];
        if (!close_enough(bank.encumbered_securities, s.encumbered, scale))
            flag(bank.id, "encumbered securities differ from own collateral posted");
        if (!close_enough(bank.collateral_reused, s.reused, scale))
            flag(bank.id, "re-used collateral differs from contracts");
        if (!close_enough(bank.repos, s.repos, scale))
            flag(bank.id, "repos differ from contracts");
        if (!close_enough(bank.reverse_repos, s.reverse, scale) ||
            !close_enough(bank.collateral_received, s.reverse, scale))
            flag(bank.id, "reverse repos / collateral received differ from contracts");

        for (const auto& [lender, amount] : s.by_lender) {
            const auto it = bank.repos_by_lender.find(lender);
            const double book = it == bank.repos_by_lender.end() ? 0.0 : it->second;
            const auto& mirror = system.bank(lender).reverse_repos_by_borrower;
            const auto jt = mirror.find(bank.id);
            const double other = jt == mirror.end() ? 0.0 : jt->second;
            if (!close_enough(book, amount, scale) || !close_enough(other, amount, scale)) {
                std::ostringstream os;
                os << "book towards lender " << lender << " inconsistent";
                flag(bank.id, os.str());
            }
        }
        for (const auto& [lender, amount] : bank.repos_by_lender) {
            if (!s.by_lender.contains(lender) && amount > kMoneyEpsilon) {
                std::ostringstream os;
                os << "book entry towards lender " << lender << " without contract";
                flag(bank.id, os.str());
            }
        }

        if (options.check_non_negative) {
            const double fields[] = {bank.cash, bank.usable_securities, bank.encumbered_securities,
                                     bank.loans, bank.reverse_repos, bank.own_funds, bank.deposits,
                                     bank.repos, bank.central_bank_funding,
                                     bank.collateral_received, bank.collateral_reused};
            if (std::any_of(std::begin(fields), std::end(fields),
                            [](double v) { return v < -kMoneyEpsilon; }))
                flag(bank.id, "negative stock");
            if (bank.collateral_reused > bank.collateral_received + kMoneyEpsilon * 10)
                flag(bank.id, "re-used collateral exceeds collateral received");
        }
    }
    return report;
}

}  // namespace repoabm
