#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "repoabm/behavior.hpp"
#include "repoabm/ledger.hpp"
#include "repoabm/rng.hpp"

namespace repoabm {

/// Pairwise trust phi_ij in [0,1]: how much borrower i trusts lender j.
class TrustMatrix {
public:
    TrustMatrix() = default;
    explicit TrustMatrix(std::size_t n, double value = 0.0) : n_(n), phi_(n * n, value) {}

    std::size_t size() const noexcept { return n_; }
    double operator()(BankId i, BankId j) const { return phi_[i * n_ + j]; }
    double& operator()(BankId i, BankId j) { return phi_[i * n_ + j]; }
    std::span<const double> values() const noexcept { return phi_; }

    bool operator==(const TrustMatrix&) const = default;

private:
    std::size_t n_ = 0;
    std::vector<double> phi_;
};

/// phi_ij i.i.d. uniform on [0,1]; the diagonal is zero and unused.
TrustMatrix init_trust(std::size_t n, Rng& rng);

/// Thrown when a collateral recall chain exceeds the configured depth.
class CascadeAbort : public std::runtime_error {
public:
    CascadeAbort(const std::string& what, std::size_t depth)
        : std::runtime_error(what), depth_(depth) {}
    std::size_t depth() const noexcept { return depth_; }

private:
    std::size_t depth_;
};

enum class ClosureCause { Leverage, RecallCascade };

struct OpenedRepo {
    BankId borrower = 0;
    BankId lender = 0;
    double notional = 0.0;
};

struct ClosedRepo {
    ContractId contract = 0;
    BankId borrower = 0;
    BankId lender = 0;
    double amount = 0.0;
    ClosureCause cause = ClosureCause::Leverage;
};

struct ClearingReport {
    std::vector<OpenedRepo> opened;
    std::vector<ClosedRepo> closed;
    std::vector<double> cb_fallback;  ///< per bank, CB funding drawn for unmet requests
    std::size_t cascade_depth_max = 0;
    bool aborted = false;
    std::string abort_reason;

    explicit ClearingReport(std::size_t n = 0) : cb_fallback(n, 0.0) {}
};

/// How requesters rank the counterparties they solicit.
enum class CounterpartyOrder {
    ByTrust,  ///< descending phi_ij
    Random,   ///< uniform random permutation per requester (trust ignored)
};

struct MarketParams {
    double alpha = 0.01;
    double lambda = 0.5;
    std::size_t max_cascade_depth = 0;  ///< 0 means 10 * N
    CounterpartyOrder order = CounterpartyOrder::ByTrust;
};

/// Covers `amount` with own usable securities first, then re-usable received
/// collateral. Returns a shortfall (empty) when the bank cannot post `amount`.
std::optional<CollateralSplit> post_collateral(const BankBalanceSheet& borrower, double amount);

///
/// Stateful clearing context for one step. Holds the market parameters, the
/// report being filled and the cascade bookkeeping.
///
class Market {
public:
    Market(SystemLedger& ledger, TrustMatrix& trust, MarketParams params, Rng& rng);

    /// Repays `amount` of contract `id`, recalling collateral from the lender's
    /// own repos first when its free collateral is short.
    void close_contract(ContractId id, double amount, std::size_t depth, ClosureCause cause);

    /// The lender must return `deficit` more collateral than it holds free: it
    /// closes its own repos backed by re-used collateral, lowest trust first,
    /// oldest contract first. Throws CascadeAbort past the depth cap.
    void recall_collateral(BankId lender, double deficit, std::size_t depth);

    /// Phase 1: banks with a positive closure amount unwind repos one by one in a
    /// shuffled order, lowest-trust lender first.
    void end_repos_phase(std::span<const double> closures);

    /// Phase 2: requesters in a reshuffled order walk counterparties (by trust or
    /// randomly); unmet requests fall back to central-bank funding.
    void open_repos_phase(std::span<const double> demands);

    ClearingReport& report() noexcept { return report_; }
    ClearingReport take_report() { return std::move(report_); }

private:
    std::vector<BankId> counterparties_by_trust(BankId i, bool ascending) const;

    SystemLedger& ledger_;
    TrustMatrix& trust_;
    MarketParams params_;
    Rng& rng_;
    ClearingReport report_;
};

/// Runs end_repos_phase then open_repos_phase. Cascade aborts are caught and
/// reported through ClearingReport::aborted; the ledger is then mid-operation.
ClearingReport clear_step(SystemLedger& ledger, TrustMatrix& trust,
                          std::span<const FundingDecision> decisions, const MarketParams& params,
                          Rng& rng);

}  // namespace repoabm
