#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace repoabm {

using BankId = std::size_t;
using Step = std::int64_t;
using ContractId = std::uint64_t;

/// Absolute tolerance on monetary stocks (1 unit = 1e9 EUR).
inline constexpr double kMoneyEpsilon = 1e-12;
/// Relative tolerance of the per-bank accounting identity.
inline constexpr double kIdentityTolerance = 1e-9;

/// Rounds values within kMoneyEpsilon of zero to exactly zero.
double clamp_money(double value) noexcept;

///
/// Balance sheet of one bank.
///
/// Cash, usable securities, loans, own funds, deposits and central-bank funding
/// are primary state. The repo-derived items (encumbered securities, reverse
/// repos, repos, collateral received and re-used) are maintained by SystemLedger
/// together with the per-counterparty books; check_invariants recomputes them
/// from the open contracts.
///
struct BankBalanceSheet {
    BankId id = 0;

    // assets
    double cash = 0.0;
    double usable_securities = 0.0;
    double encumbered_securities = 0.0;
    double loans = 0.0;
    double reverse_repos = 0.0;

    // liabilities
    double own_funds = 0.0;
    double deposits = 0.0;
    double repos = 0.0;
    double central_bank_funding = 0.0;

    // off balance sheet
    double collateral_received = 0.0;
    double collateral_reused = 0.0;

    /// r_ij: open repo exposure of this bank (borrower) towards lender j.
    std::map<BankId, double> repos_by_lender;
    /// r^r_ij: open reverse repo exposure of this bank (lender) towards borrower j.
    std::map<BankId, double> reverse_repos_by_borrower;

    double total_assets() const noexcept {
        return cash + usable_securities + encumbered_securities + loans + reverse_repos;
    }
    double total_liabilities() const noexcept {
        return own_funds + deposits + repos + central_bank_funding;
    }
    /// Received collateral that is not re-used and can still be posted or returned.
    double free_collateral() const noexcept { return collateral_received - collateral_reused; }
    /// Collateral this bank could post on a new repo.
    double collateral_capacity() const noexcept { return usable_securities + free_collateral(); }
};

struct RegulatoryParams {
    double alpha = 0.01;       ///< minimum reserve share of deposits
    double beta = 0.5;         ///< LCR deposit outflow rate
    double gamma = 0.03;       ///< regulatory leverage ratio
    double gamma_star = 0.045; ///< target leverage ratio

    /// Throws std::invalid_argument naming the violated constraint.
    void validate() const;
};

/// Balance-sheet deltas produced by one money-creation event.
struct MoneyCreationDelta {
    double deposits = 0.0;
    double loans = 0.0;
    double usable_securities = 0.0;
    double own_funds = 0.0;
};

/// Deltas of creating `created` units of money with share issuance `gamma_new`
/// and security issuance `beta_new`. Assets and liabilities both grow by `created`.
MoneyCreationDelta money_creation_delta(double created, double gamma_new, double beta_new);

/// Applies money_creation_delta to `bank`; returns the deltas applied.
MoneyCreationDelta apply_money_creation(BankBalanceSheet& bank, double created,
                                        double gamma_new, double beta_new);

/// (C + S_u + S_c - S_r) / D. Received collateral counts once: the re-used part
/// is encumbered elsewhere. Empty when deposits are zero (treat as satisfied).
std::optional<double> lcr_ratio(const BankBalanceSheet& bank);

/// Own funds over total on-balance assets. Empty when assets are zero.
std::optional<double> leverage_ratio(const BankBalanceSheet& bank);

/// C - alpha * D; negative means the reserve requirement is breached.
double reserve_slack(const BankBalanceSheet& bank, double alpha) noexcept;

///
/// One open evergreen repo. Zero haircut: the collateral posted by the borrower
/// (own securities first, then re-used collateral) equals the notional.
///
struct RepoContract {
    ContractId id = 0;
    BankId borrower = 0;
    BankId lender = 0;
    double notional = 0.0;
    double own_collateral = 0.0;
    double reused_collateral = 0.0;
    Step opened_at = 0;
};

/// How a borrower covers a repo: own usable securities and re-used collateral.
struct CollateralSplit {
    double own = 0.0;
    double reused = 0.0;
};

///
/// State of the whole banking system.
///
/// All repo bookkeeping goes through open_repo / settle_closure, which keep the
/// borrower and lender books mirrored and every bank's accounting identity intact.
///
class SystemLedger {
public:
    explicit SystemLedger(std::size_t bank_count);

    std::size_t size() const noexcept { return banks_.size(); }
    BankBalanceSheet& bank(BankId id) { return banks_.at(id); }
    const BankBalanceSheet& bank(BankId id) const { return banks_.at(id); }
    std::span<const BankBalanceSheet> banks() const noexcept { return banks_; }
    std::span<BankBalanceSheet> banks() noexcept { return banks_; }

    Step step() const noexcept { return step_; }
    void set_step(Step step) noexcept { step_ = step; }

    /// Open contracts ordered by id, i.e. by opening order.
    const std::map<ContractId, RepoContract>& contracts() const noexcept { return contracts_; }
    const RepoContract& contract(ContractId id) const { return contracts_.at(id); }
    bool has_contract(ContractId id) const { return contracts_.contains(id); }

    /// Contracts where `borrower` owes `lender`, oldest first.
    std::vector<ContractId> contracts_between(BankId borrower, BankId lender) const;

    /// Opens a repo at the current step. Cash moves lender -> borrower, the
    /// borrower's own part moves S_u -> S_e and the re-used part increases S_r.
    /// Throws std::invalid_argument if the split does not match the notional or
    /// exceeds what the borrower can post.
    ContractId open_repo(BankId borrower, BankId lender, double notional, CollateralSplit split);

    /// Repays `amount` of a contract (cash borrower -> lender) and returns the
    /// matching collateral, re-used part first. The lender must hold enough free
    /// collateral; callers arrange recalls beforehand. Amounts within
    /// kMoneyEpsilon of the notional close the contract entirely. Returns the
    /// collateral split handed back.
    CollateralSplit settle_closure(ContractId id, double amount);

    /// Moves cash and central-bank funding together (positive = new funding).
    void apply_central_bank_funding(BankId id, double amount);

private:
    void add_book_entry(std::map<BankId, double>& book, BankId key, double delta);

    std::vector<BankBalanceSheet> banks_;
    std::map<ContractId, RepoContract> contracts_;
    /// borrower -> lender -> contract ids, oldest first
    std::vector<std::map<BankId, std::vector<ContractId>>> by_borrower_;
    ContractId next_id_ = 1;
    Step step_ = 0;
};

/// Sum over banks of C - alpha * D.
double excess_liquidity(const SystemLedger& system, double alpha);

/// Violations found by check_invariants, one human-readable line each.
struct InvariantReport {
    std::vector<std::string> violations;
    bool ok() const noexcept { return violations.empty(); }
};

struct InvariantOptions {
    /// Also require non-negative stocks and S_r <= S_c (true at step boundaries;
    /// cash may be overdrawn between the payment shock and clearing).
    bool check_non_negative = true;
};

/// Evaluates every per-bank invariant and the cross-book consistency.
InvariantReport check_invariants(const SystemLedger& system, InvariantOptions options = {});

}  // namespace repoabm
