#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "repoabm/behavior.hpp"
#include "repoabm/rng.hpp"

using namespace repoabm;

TEST_CASE("lcr funding examples") {
    CHECK(lcr_funding(-10, 3, 0.5) == doctest::Approx(5));
    CHECK(lcr_funding(10, 3, 0.5) == doctest::Approx(-3));
    CHECK(lcr_funding(0, 3, 0.5) == 0.0);
    CHECK_THROWS_AS(lcr_funding(1, -1, 0.5), std::invalid_argument);
}

TEST_CASE("lcr funding never repays more than held") {
    Rng rng(1);
    for (int t = 0; t < 1000; ++t) {
        const double m = 10 * rng.uniform();
        const double dm = lcr_funding(20 * rng.normal(), m, rng.uniform());
        CHECK(m + dm >= 0.0);
    }
}

TEST_CASE("funding asymmetry") {
    for (const double beta : {0.1, 0.5, 0.9})
        for (const double s : {0.5, 2.0, 7.0})
            CHECK(lcr_funding(-s, 0, beta) + lcr_funding(s, 0, beta) == doctest::Approx((1 - beta) * s));
}

TEST_CASE("creation terms cancel when new securities match the outflow rate") {
    const auto d = money_creation_delta(100, 0.09, 0.5);
    CHECK(lcr_funding(-4, 10, 0.5, d.deposits, d.usable_securities) == doctest::Approx(lcr_funding(-4, 10, 0.5)));
    // without new securities the created deposits need funding
    const auto app = money_creation_delta(100, 0.09, 0.0);
    CHECK(lcr_funding(0, 10, 0.5, app.deposits, app.usable_securities) == doctest::Approx(0.5 * 91));
}

TEST_CASE("target funding restores the LCR exactly") {
    Rng rng(2);
    for (int t = 0; t < 500; ++t) {
        BankBalanceSheet b;
        b.deposits = 100;
        b.central_bank_funding = 20 * rng.uniform();
        b.cash = 30 * rng.uniform();
        b.usable_securities = 60 * rng.uniform();
        b.collateral_received = 10 * rng.uniform();
        b.collateral_reused = b.collateral_received * rng.uniform();
        const double beta = 0.2 + 0.7 * rng.uniform();
        const double dm = lcr_target_funding(b, beta);
        CHECK(dm >= -b.central_bank_funding);
        b.cash += dm;
        b.central_bank_funding += dm;
        // either at the bound, or all funding repaid with the ratio above it
        if (b.central_bank_funding > 1e-12) CHECK(*lcr_ratio(b) == doctest::Approx(beta));
        else CHECK(*lcr_ratio(b) >= beta - 1e-12);
    }
}

TEST_CASE("target funding matches the incremental rule at the bound") {
    Rng rng(3);
    for (int t = 0; t < 500; ++t) {
        const double beta = 0.2 + 0.7 * rng.uniform();
        BankBalanceSheet b;
        b.deposits = 100;
        b.central_bank_funding = 50;
        b.usable_securities = 30 * rng.uniform();
        b.cash = beta * b.deposits - b.usable_securities;
        if (b.cash < 0) continue;
        const double shock = 10 * rng.normal();
        const double m = b.central_bank_funding;
        b.deposits += shock;
        b.cash += shock;
        CHECK(lcr_target_funding(b, beta) == doctest::Approx(lcr_funding(shock, m, beta)));
    }
}

TEST_CASE("reserve repo demand examples") {
    BankBalanceSheet at_bound;
    at_bound.deposits = 1000;
    at_bound.cash = 10;  // alpha D
    CHECK(reserve_repo_demand(-10, 0, 5, 0.01, at_bound) == doctest::Approx(4.9));
    CHECK(reserve_repo_demand(10, 0, -3, 0.01, at_bound) == doctest::Approx(-6.9));
    // with the no-excess funding rule the demand is -{(1-alpha)-(1-beta)} dD_p
    CHECK(reserve_repo_demand(-10, 0, lcr_funding(-10, 100, 0.5), 0.01, at_bound) == doctest::Approx(4.9));

    BankBalanceSheet slack = at_bound;
    slack.cash = 30;
    CHECK(reserve_repo_demand(-10, 0, 5, 0.01, slack) == doctest::Approx(-15.1));
}

TEST_CASE("reserve repo demand has the sign opposite to the shock at the bound") {
    Rng rng(4);
    for (int t = 0; t < 500; ++t) {
        const double alpha = 0.05 * rng.uniform();
        const double beta = alpha + (1 - alpha) * rng.uniform() + 1e-6;
        BankBalanceSheet b;
        b.deposits = 100;
        b.cash = alpha * b.deposits;
        const double shock = 10 * rng.normal();
        const double dr = reserve_repo_demand(shock, 0, lcr_funding(shock, 1e9, beta), alpha, b);
        if (std::abs(shock) > 1e-9) CHECK((dr > 0) == (shock < 0));
    }
}

TEST_CASE("live demand form") {
    BankBalanceSheet b;
    b.deposits = 200;
    b.cash = 1;
    CHECK(reserve_repo_demand(b, 0.01) == doctest::Approx(1));
    b.cash = 5;
    CHECK(reserve_repo_demand(b, 0.01) == doctest::Approx(-3));
}

namespace {

BankBalanceSheet leveraged(double repos, double cash) {
    BankBalanceSheet b;
    b.cash = cash;
    b.loans = 1000 - cash;
    b.own_funds = 40;
    b.repos = repos;
    b.deposits = 1000 - 40 - repos;
    return b;
}

}  // namespace

TEST_CASE("leverage closure examples") {
    const auto b = leveraged(500, 310);
    REQUIRE(reserve_slack(b, 0.01) >= 300);
    CHECK(leverage_closure(b, 0.045, 0.01) == doctest::Approx(1000 - 40 / 0.045));

    CHECK(leverage_closure(leveraged(50, 310), 0.045, 0.01) == doctest::Approx(50));

    auto low_cash = leveraged(500, 20);
    CHECK(leverage_closure(low_cash, 0.045, 0.01) == doctest::Approx(20 - 0.01 * low_cash.deposits));

    BankBalanceSheet fine;
    fine.cash = 1000;
    fine.own_funds = 50;
    fine.deposits = 950;
    CHECK(leverage_closure(fine, 0.045, 0.01) == 0.0);
    CHECK(leverage_closure(BankBalanceSheet{}, 0.045, 0.01) == 0.0);
}

TEST_CASE("closing the computed amount restores the target") {
    const auto b = leveraged(500, 310);
    const double x = leverage_closure(b, 0.045, 0.01);
    CHECK(b.own_funds / (b.total_assets() - x) == doctest::Approx(0.045));
}

TEST_CASE("trust update examples") {
    CHECK(update_trust(0.5, 0.5, 1, 1) == doctest::Approx(0.75));
    CHECK(update_trust(0.5, 0.5, 1, 0) == doctest::Approx(0.25));
    for (const double l : {0.0, 0.3, 1.0}) CHECK(update_trust(0.5, l, 2, 1) == doctest::Approx(0.5));
    CHECK_THROWS_AS(update_trust(0.5, 0.5, 0, 0), std::invalid_argument);
}

TEST_CASE("trust stays in the unit interval") {
    Rng rng(5);
    for (int t = 0; t < 2000; ++t) {
        const double phi = rng.uniform();
        const double req = rng.uniform() + 1e-6;
        const double got = req * rng.uniform() * 1.5;  // over-serving clamps at 1
        const double next = update_trust(phi, rng.uniform(), req, got);
        CHECK(next >= 0.0);
        CHECK(next <= 1.0);
    }
}
