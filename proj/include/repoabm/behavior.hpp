#pragma once

#include "repoabm/ledger.hpp"

namespace repoabm {

/// Per-bank decisions for one step.
struct FundingDecision {
    double dM = 0.0;            ///< central-bank funding change (applied before clearing)
    double dR = 0.0;            ///< > 0 repo request; < 0 cash offered on reverse repo
    double close_amount = 0.0;  ///< repo notional to unwind for leverage
};

///
/// LCR management through central-bank funding:
///   dM = max{ beta dD_c - dS_c - (1 - beta) dD_p , -M }
/// where dD_p is the payment shock and (dD_c, dS_c) the deposits and usable
/// securities created this step. With beta_new = beta the creation terms
/// cancel and this reduces to max{-(1 - beta) dD_p, -M}.
///
double lcr_funding(double payment_shock, double central_bank_funding, double beta,
                   double created_deposits = 0.0, double created_securities = 0.0);

/// LCR management from the booked state: the smallest M keeping
/// C + S_u + S_c - S_r >= beta D, i.e. max{ beta D - (C + S_u + S_c - S_r), -M }.
/// Equals lcr_funding when the bank sat exactly at its LCR bound before the shocks.
double lcr_target_funding(const BankBalanceSheet& bank, double beta);

/// Cash needed (> 0) or lendable (< 0) to sit exactly at the reserve floor:
/// alpha (D + dD_c + dD_p) - (C + dD_p + dM), where C and D are pre-shock
/// values. With the bank at its floor this is -dM - (1 - alpha) dD_p + alpha dD_c.
double reserve_repo_demand(double payment_shock, double created_deposits, double dM,
                           double alpha, const BankBalanceSheet& pre_shock);

/// Same quantity from a bank whose shocks and dM are already booked: alpha D - C.
double reserve_repo_demand(const BankBalanceSheet& post_funding, double alpha);

/// Repo notional to close so the leverage ratio returns to gamma_star, bounded
/// by outstanding repos and by the cash spendable above the reserve floor.
double leverage_closure(const BankBalanceSheet& bank, double gamma_star, double alpha);

/// phi + lambda (obtained / requested - phi).
double update_trust(double phi, double lambda, double requested, double obtained);

}  // namespace repoabm
