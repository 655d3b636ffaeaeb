#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "repoabm/ledger.hpp"
#include "repoabm/rng.hpp"

using namespace repoabm;

namespace {

BankBalanceSheet sheet(double cash, double su, double sc, double sr, double deposits) {
    BankBalanceSheet b;
    b.cash = cash;
    b.usable_securities = su;
    b.collateral_received = sc;
    b.collateral_reused = sr;
    b.deposits = deposits;
    return b;
}

/// Bank funded by money creation plus some central-bank cash.
void seed_bank(SystemLedger& s, BankId id, double created, double cb) {
    apply_money_creation(s.bank(id), created, 0.09, 0.5);
    s.apply_central_bank_funding(id, cb);
}

}  // namespace

TEST_CASE("money creation deltas") {
    const auto d = money_creation_delta(100.0, 0.09, 0.5);
    CHECK(d.deposits == doctest::Approx(91.0));
    CHECK(d.own_funds == doctest::Approx(9.0));
    CHECK(d.usable_securities == doctest::Approx(45.5));
    CHECK(d.loans == doctest::Approx(54.5));

    const auto z = money_creation_delta(0.0, 0.09, 0.5);
    CHECK(z.deposits == 0.0);
    CHECK(z.loans == 0.0);
    CHECK(z.usable_securities == 0.0);
    CHECK(z.own_funds == 0.0);

    const auto b = money_creation_delta(100.0, 0.0, 0.0);
    CHECK(b.deposits == 100.0);
    CHECK(b.loans == 100.0);
    CHECK(b.usable_securities == 0.0);
    CHECK(b.own_funds == 0.0);

    CHECK_THROWS_AS(money_creation_delta(-1.0, 0.09, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(money_creation_delta(1.0, 1.5, 0.5), std::invalid_argument);
}

TEST_CASE("money creation preserves the identity for any parameters") {
    Rng rng(11);
    for (int t = 0; t < 1000; ++t) {
        BankBalanceSheet b;
        const double dx = rng.uniform() * 1e3;
        const double gn = rng.uniform();
        const double bn = rng.uniform();
        const auto d = apply_money_creation(b, dx, gn, bn);
        CHECK(d.loans + d.usable_securities == doctest::Approx(dx));
        CHECK(d.deposits + d.own_funds == doctest::Approx(dx));
        CHECK(std::abs(b.total_assets() - b.total_liabilities()) <= 1e-12 * std::max(1.0, dx));
    }
}

TEST_CASE("lcr ratio counts received collateral once") {
    CHECK(*lcr_ratio(sheet(10, 40, 0, 0, 100)) == doctest::Approx(0.5));
    CHECK(*lcr_ratio(sheet(10, 40, 20, 20, 100)) == doctest::Approx(0.5));
    CHECK(*lcr_ratio(sheet(0, 0, 5, 0, 10)) == doctest::Approx(0.5));
    CHECK_FALSE(lcr_ratio(sheet(1, 1, 0, 0, 0)).has_value());
}

TEST_CASE("leverage ratio") {
    BankBalanceSheet b;
    b.cash = 1000.0;
    b.own_funds = 45.0;
    CHECK(*leverage_ratio(b) == doctest::Approx(0.045));
    b.own_funds = 0.0;
    CHECK(*leverage_ratio(b) == 0.0);
    CHECK_FALSE(leverage_ratio(BankBalanceSheet{}).has_value());

    BankBalanceSheet fresh;
    apply_money_creation(fresh, 100.0, 0.09, 0.5);
    CHECK(fresh.own_funds == doctest::Approx(9.0));
    CHECK(fresh.total_assets() == doctest::Approx(100.0));
    CHECK(*leverage_ratio(fresh) == doctest::Approx(0.09));
}

TEST_CASE("reserve slack and excess liquidity") {
    CHECK(reserve_slack(sheet(5, 0, 0, 0, 100), 0.01) == doctest::Approx(4.0));
    CHECK(reserve_slack(sheet(1, 0, 0, 0, 100), 0.01) == doctest::Approx(0.0));
    CHECK(reserve_slack(sheet(0.5, 0, 0, 0, 100), 0.01) == doctest::Approx(-0.5));

    SystemLedger two(2);
    two.bank(0).cash = 5;
    two.bank(0).deposits = 100;
    two.bank(1).cash = 10;
    two.bank(1).deposits = 200;
    CHECK(excess_liquidity(two, 0.01) == doctest::Approx(12.0));
    two.bank(0).cash = 1;
    two.bank(1).cash = 2;
    CHECK(excess_liquidity(two, 0.01) == doctest::Approx(0.0));

    SystemLedger one(1);
    one.bank(0).cash = 3;
    one.bank(0).deposits = 100;
    CHECK(excess_liquidity(one, 0.01) == doctest::Approx(2.0));
}

TEST_CASE("invariant checker") {
    SystemLedger s(3);
    CHECK(check_invariants(s).ok());
    for (BankId i = 0; i < 3; ++i) seed_bank(s, i, 100.0, 1.0);
    CHECK(check_invariants(s).ok());

    SUBCASE("one corrupted cash balance gives one violation") {
        s.bank(1).cash += 1.0;
        const auto r = check_invariants(s);
        REQUIRE(r.violations.size() == 1);
        CHECK(r.violations[0].find("bank 1") != std::string::npos);
        CHECK(r.violations[0].find("identity") != std::string::npos);
    }
    SUBCASE("stale book entry is flagged") {
        s.bank(0).repos_by_lender[2] = 1.0;
        CHECK_FALSE(check_invariants(s).ok());
    }
    SUBCASE("re-use beyond collateral received is flagged") {
        s.bank(0).collateral_reused = 1.0;
        CHECK_FALSE(check_invariants(s).ok());
    }
    SUBCASE("negative cash tolerated only when asked") {
        // a payment outflow larger than cash overdraws it until clearing
        s.bank(0).cash -= 1.5;
        s.bank(0).deposits -= 1.5;
        CHECK(check_invariants(s, {false}).ok());
        CHECK_FALSE(check_invariants(s, {true}).ok());
    }
}

TEST_CASE("open and close a repo moves cash and collateral") {
    SystemLedger s(2);
    seed_bank(s, 0, 100.0, 10.0);
    seed_bank(s, 1, 100.0, 10.0);
    const auto b0 = s.bank(0);
    const auto l0 = s.bank(1);

    const ContractId id = s.open_repo(0, 1, 5.0, {5.0, 0.0});
    CHECK(s.bank(0).cash == doctest::Approx(b0.cash + 5));
    CHECK(s.bank(0).usable_securities == doctest::Approx(b0.usable_securities - 5));
    CHECK(s.bank(0).encumbered_securities == doctest::Approx(5));
    CHECK(s.bank(0).repos == doctest::Approx(5));
    CHECK(s.bank(1).cash == doctest::Approx(l0.cash - 5));
    CHECK(s.bank(1).reverse_repos == doctest::Approx(5));
    CHECK(s.bank(1).collateral_received == doctest::Approx(5));
    CHECK(s.bank(0).repos_by_lender.at(1) == doctest::Approx(5));
    CHECK(s.bank(1).reverse_repos_by_borrower.at(0) == doctest::Approx(5));
    CHECK(check_invariants(s).ok());

    const auto back = s.settle_closure(id, 5.0);
    CHECK(back.own == doctest::Approx(5));
    CHECK(back.reused == 0.0);
    CHECK_FALSE(s.has_contract(id));
    CHECK(s.bank(0).cash == doctest::Approx(b0.cash));
    CHECK(s.bank(0).usable_securities == doctest::Approx(b0.usable_securities));
    CHECK(s.bank(0).encumbered_securities == doctest::Approx(0));
    CHECK(s.bank(1).cash == doctest::Approx(l0.cash));
    CHECK(s.bank(1).collateral_received == doctest::Approx(0));
    CHECK(s.bank(0).repos_by_lender.empty());
    CHECK(s.bank(1).reverse_repos_by_borrower.empty());
    CHECK(check_invariants(s).ok());
}

TEST_CASE("partial closure returns re-used collateral first") {
    SystemLedger s(3);
    for (BankId i = 0; i < 3; ++i) seed_bank(s, i, 100.0, 10.0);
    s.open_repo(2, 0, 4.0, {4.0, 0.0});  // bank 0 receives 4 of collateral
    const ContractId id = s.open_repo(0, 1, 6.0, {3.0, 3.0});
    CHECK(s.bank(0).collateral_reused == doctest::Approx(3));

    const auto back = s.settle_closure(id, 4.0);
    CHECK(back.reused == doctest::Approx(3));
    CHECK(back.own == doctest::Approx(1));
    CHECK(s.contract(id).notional == doctest::Approx(2));
    CHECK(s.contract(id).own_collateral == doctest::Approx(2));
    CHECK(s.contract(id).reused_collateral == doctest::Approx(0));
    CHECK(s.bank(0).collateral_reused == doctest::Approx(0));
    CHECK(check_invariants(s).ok());
}

TEST_CASE("open_repo rejects bad requests") {
    SystemLedger s(2);
    seed_bank(s, 0, 10.0, 0.0);
    CHECK_THROWS_AS(s.open_repo(0, 0, 1.0, {1.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(s.open_repo(0, 1, 0.0, {}), std::invalid_argument);
    CHECK_THROWS_AS(s.open_repo(0, 1, 2.0, {1.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(s.open_repo(0, 1, 100.0, {100.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(s.open_repo(0, 1, 1.0, {0.0, 1.0}), std::invalid_argument);
}

TEST_CASE("contracts_between lists oldest first") {
    SystemLedger s(2);
    seed_bank(s, 0, 100.0, 0.0);
    seed_bank(s, 1, 100.0, 10.0);
    const auto a = s.open_repo(0, 1, 1.0, {1.0, 0.0});
    s.set_step(3);
    const auto b = s.open_repo(0, 1, 2.0, {2.0, 0.0});
    CHECK(s.contracts_between(0, 1) == std::vector<ContractId>{a, b});
    CHECK(s.contract(b).opened_at == 3);
    CHECK(s.contracts_between(1, 0).empty());
}

TEST_CASE("repos are LCR-neutral for both parties") {
    Rng rng(5);
    const std::size_t n = 6;
    SystemLedger s(n);
    for (BankId i = 0; i < n; ++i) seed_bank(s, i, 50.0 + 100.0 * rng.uniform(), 5.0);
    std::vector<ContractId> open;
    for (int t = 0; t < 2000; ++t) {
        const BankId i = rng.below(n);
        BankId j = rng.below(n - 1);
        if (j >= i) ++j;
        const double before_i = *lcr_ratio(s.bank(i));
        const double before_j = *lcr_ratio(s.bank(j));
        if (!open.empty() && rng.uniform() < 0.4) {
            const std::size_t k = rng.below(open.size());
            const ContractId id = open[k];
            const auto& c = s.contract(id);
            const BankId bi = c.borrower, lj = c.lender;
            const double lb = *lcr_ratio(s.bank(bi)), ll = *lcr_ratio(s.bank(lj));
            const double free = s.bank(lj).free_collateral();
            const double amount = std::min(c.notional * rng.uniform() + 1e-9, free);
            if (amount <= 0.0) continue;
            s.settle_closure(id, amount);
            if (!s.has_contract(id)) open.erase(open.begin() + static_cast<long>(k));
            CHECK(std::abs(*lcr_ratio(s.bank(bi)) - lb) <= 1e-12);
            CHECK(std::abs(*lcr_ratio(s.bank(lj)) - ll) <= 1e-12);
        } else {
            const double cap = s.bank(i).collateral_capacity();
            if (cap <= 1e-6) continue;
            const double amount = cap * rng.uniform() * 0.5 + 1e-9;
            const double own = std::min(amount, s.bank(i).usable_securities);
            open.push_back(s.open_repo(i, j, amount, {own, amount - own}));
            CHECK(std::abs(*lcr_ratio(s.bank(i)) - before_i) <= 1e-12);
            CHECK(std::abs(*lcr_ratio(s.bank(j)) - before_j) <= 1e-12);
        }
    }
    CHECK(check_invariants(s, {false}).ok());
}

TEST_CASE("aggregate LCR bound on excess liquidity") {
    Rng rng(6);
    for (int t = 0; t < 200; ++t) {
        SystemLedger s(4);
        double sum_d = 0.0, liquid = 0.0;
        for (BankId i = 0; i < 4; ++i) {
            auto& b = s.bank(i);
            b.deposits = 10.0 + 90.0 * rng.uniform();
            b.usable_securities = b.deposits * rng.uniform();
            b.cash = std::max(0.5 * b.deposits - b.usable_securities, 0.0) + rng.uniform();
            sum_d += b.deposits;
            liquid += b.usable_securities;
            REQUIRE(*lcr_ratio(b) >= 0.5);
        }
        CHECK(excess_liquidity(s, 0.01) >= 0.5 * sum_d - liquid - 0.01 * sum_d - 1e-9);
    }
}

TEST_CASE("clamp_money") {
    CHECK(clamp_money(1e-13) == 0.0);
    CHECK(clamp_money(-1e-13) == 0.0);
    CHECK(clamp_money(1e-6) == 1e-6);
}
