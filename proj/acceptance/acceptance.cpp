// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "repoabm/cli.hpp"
#include "repoabm/harness.hpp"
#include "repoabm/io.hpp"
#include "repoabm/shocks.hpp"

using namespace repoabm;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double x, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return buf;
}

double mean_of(const std::vector<double>& v) {
    return v.empty() ? std::nan("") : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Mean of f(row) over rows with step in [from, to).
template <class F>
double mean_over(const std::vector<MetricsRow>& rows, Step from, Step to, F f) {
    double s = 0;
    std::size_t k = 0;
    for (const auto& r : rows)
        if (r.step >= from && r.step < to) {
            s += f(r);
            ++k;
        }
    return k ? s / static_cast<double>(k) : std::nan("");
}

std::string status_of(const RunResult& r) {
    return r.status == RunStatus::Completed ? "ok" : "aborted@" + std::to_string(r.abort_step);
}

// 1. accounting identity at every phase boundary of a 2000-step default run
Outcome identity() {
    SimConfig c;
    c.steps = 2000;
    double worst = 0;
    std::size_t checks = 0;
    RunOptions ro;
    ro.track_network = false;
    ro.on_phase = [&](Step, Phase, const SystemLedger& s) {
        for (const auto& b : s.banks()) {
            const double a = b.total_assets();
            const double gap = std::abs(a - b.total_liabilities());
            worst = std::max(worst, a > 0 ? gap / a : gap);
            ++checks;
        }
    };
    const auto r = run_simulation(c, c.seed, ro);
    return {worst <= 1e-9, "max |A-L|/A = " + fmt(worst) + " over " + std::to_string(checks) +
                               " bank-phase checks, run " + status_of(r)};
}

// 2. opening and closing repos leaves both parties' LCR unchanged
Outcome lcr_neutrality() {
    Rng rng(2024);
    const std::size_t n = 20;
    SystemLedger s(n);
    for (BankId i = 0; i < n; ++i) {
        apply_money_creation(s.bank(i), 10 + 90 * rng.uniform(), 0.09, 0.5);
        s.apply_central_bank_funding(i, 5 * rng.uniform());
    }
    double worst = 0;
    auto lcr = [&](BankId i) { return lcr_ratio(s.bank(i)).value_or(0.0); };
    for (int t = 0; t < 20000; ++t) {
        const BankId i = rng.below(n);
        const BankId j = rng.below(n);
        if (i == j) continue;
        const double li = lcr(i), lj = lcr(j);
        if (rng.uniform() < 0.6) {
            const double cap = std::min(s.bank(i).collateral_capacity(), s.bank(j).cash);
            if (cap <= 1e-6) continue;
            const double x = cap * rng.uniform();
            const auto split = post_collateral(s.bank(i), x);
            if (!split) continue;
            s.open_repo(i, j, x, *split);
        } else {
            const auto ids = s.contracts_between(i, j);
            if (ids.empty()) continue;
            const auto& c = s.contract(ids.front());
            const double x = c.notional * rng.uniform();
            if (s.bank(j).free_collateral() < x || s.bank(i).cash < x) continue;
            s.settle_closure(c.id, x);
        }
        worst = std::max({worst, std::abs(lcr(i) - li), std::abs(lcr(j) - lj)});
    }
    return {worst <= 1e-12, "max |dLCR| = " + fmt(worst)};
}

// 3. payment shocks sum to zero; floors are rare
Outcome shock_conservation() {
    SimConfig c;
    c.n_banks = 100;
    Rng rng(3);
    const auto g = c.growth();
    auto sizes = init_sizes(g, c.n_banks, rng);
    std::vector<BankBalanceSheet> banks(c.n_banks);
    for (std::size_t i = 0; i < c.n_banks; ++i) apply_money_creation(banks[i], sizes[i], c.gamma_new, c.beta);
    double worst = 0;
    std::size_t floors = 0, bank_steps = 0;
    std::vector<double> dep(c.n_banks), tgt(c.n_banks);
    for (int t = 0; t < 10000; ++t) {
        const auto created = draw_money_creation(sizes, g, rng);
        for (std::size_t i = 0; i < c.n_banks; ++i) {
            apply_money_creation(banks[i], created[i], c.gamma_new, c.beta);
            sizes[i] += created[i];
            dep[i] = banks[i].deposits;
            tgt[i] = (1 - c.gamma_new) * sizes[i];
        }
        const auto d = draw_payment_shocks(dep, tgt, c.sigma, rng);
        double sum = 0, total = 0;
        bool floored = false;
        for (std::size_t i = 0; i < c.n_banks; ++i) {
            total += dep[i];
            const double applied = apply_payment_shock(banks[i], d[i]);
            sum += applied;
            if (applied != d[i]) {
                ++floors;
                floored = true;
            }
        }
        bank_steps += c.n_banks;
        if (!floored) worst = std::max(worst, std::abs(sum) / total);
    }
    const double rate = static_cast<double>(floors) / static_cast<double>(bank_steps);
    return {worst <= 1e-9 && rate < 1e-6,
            "max |sum d'D|/sum D = " + fmt(worst) + ", floor rate " + fmt(rate) + " (" +
                std::to_string(floors) + "/" + std::to_string(bank_steps) + ")"};
}

struct TypicalRuns {
    std::vector<RunResult> runs;
};

TypicalRuns typical_runs() {
    TypicalRuns t;
    SimConfig c;
    c.n_banks = 50;
    c.steps = 8000;
    for (std::uint64_t k = 0; k < 5; ++k) t.runs.push_back(run_simulation(c, seed_fanout(c.seed, k)));
    return t;
}

// 4. excess liquidity share in [0.03, 0.15] for >= 4 of 5 seeds
Outcome excess_liquidity(const TypicalRuns& t) {
    int ok = 0;
    std::string detail;
    for (const auto& r : t.runs) {
        const Step last = r.metrics.empty() ? 0 : r.metrics.back().step;
        const double e = r.status == RunStatus::Completed
                             ? mean_over(r.metrics, last - 999, last + 1,
                                         [](const MetricsRow& m) { return m.excess_liquidity / m.total_assets; })
                             : std::nan("");
        if (e >= 0.03 && e <= 0.15) ++ok;
        detail += (detail.empty() ? "" : ", ") + (r.status == RunStatus::Completed ? fmt(e, 3) : status_of(r));
    }
    return {ok >= 4, std::to_string(ok) + "/5 in range; E/TA = " + detail};
}

// 5. stationary re-use in [0.6, 1.1] for >= 4 of 5 seeds
Outcome reuse(const TypicalRuns& t) {
    int ok = 0;
    std::string detail;
    for (const auto& r : t.runs) {
        double u = std::nan("");
        if (r.status == RunStatus::Completed) u = stationary_metrics(r).at("reuse_rate");
        if (u >= 0.6 && u <= 1.1) ++ok;
        detail += (detail.empty() ? "" : ", ") + (r.status == RunStatus::Completed ? fmt(u, 3) : status_of(r));
    }
    return {ok >= 4, std::to_string(ok) + "/5 in range; re-use = " + detail};
}

// 6. core-periphery significant late (>= 3 of 5), not early (>= 3 of 5)
Outcome core_periphery(const TypicalRuns& t) {
    int late_ok = 0, early_ok = 0;
    std::string detail;
    for (const auto& r : t.runs) {
        std::vector<double> early, late;
        for (const auto& nr : r.network) {
            if (nr.window_length != 50 || !nr.core_periphery) continue;
            if (nr.end <= 1000) early.push_back(nr.core_periphery->p_value);
            if (nr.start >= 5000) late.push_back(nr.core_periphery->p_value);
        }
        const double pe = mean_of(early), pl = mean_of(late);
        if (r.status == RunStatus::Completed && pl < 0.01) ++late_ok;
        if (pe >= 0.01) ++early_ok;
        detail += (detail.empty() ? "" : "; ") + ("early " + fmt(pe, 3) + " late " +
                                                  (late.empty() ? status_of(r) : fmt(pl, 3)));
    }
    return {late_ok >= 3 && early_ok >= 3, "late<0.01 " + std::to_string(late_ok) + "/5, early>=0.01 " +
                                               std::to_string(early_ok) + "/5; mean p " + detail};
}

std::string point_text(const SweepPointSummary& p, const std::string& metric) {
    const auto it = p.robust_means.find(metric);
    return fmt(p.value, 3) + ":" + (it == p.robust_means.end() ? "n/a" : fmt(it->second, 4)) + " (" +
           std::to_string(p.runs_completed) + " ok/" + std::to_string(p.runs_aborted) + " aborted)";
}

double metric_of(const SweepPointSummary& p, const std::string& metric) {
    const auto it = p.robust_means.find(metric);
    return it == p.robust_means.end() ? std::nan("") : it->second;
}

// 7. density increasing in beta; re-use collapses below beta = 0.4
Outcome beta_sweep() {
    SweepSpec sw;
    sw.parameter = "beta";
    sw.values = {0.3, 0.5, 0.7, 0.9};
    sw.runs = 10;
    sw.steps = 10000;
    const auto pts = run_sweep(sw, sweep_preset());
    bool increasing = true;
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (!(metric_of(pts[i], "density_w1") > metric_of(pts[i - 1], "density_w1"))) increasing = false;
    const bool collapse = metric_of(pts[0], "reuse_rate") < 0.5 * metric_of(pts[1], "reuse_rate");
    std::string d = "density_w1 ";
    for (const auto& p : pts) d += point_text(p, "density_w1") + " ";
    d += "| reuse ";
    for (const auto& p : pts) d += point_text(p, "reuse_rate") + " ";
    return {increasing && collapse, d};
}

// 8. repo maturity decreasing in sigma
Outcome sigma_sweep() {
    SweepSpec sw;
    sw.parameter = "sigma";
    sw.values = {0.02, 0.05, 0.08};
    sw.runs = 10;
    sw.steps = 10000;
    const auto pts = run_sweep(sw, sweep_preset());
    bool decreasing = true;
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (!(metric_of(pts[i], "average_maturity") < metric_of(pts[i - 1], "average_maturity")))
            decreasing = false;
    std::string d = "average_maturity ";
    for (const auto& p : pts) d += point_text(p, "average_maturity") + " ";
    return {decreasing, d};
}

// 9. tail exponent of the pure growth process, started from equal sizes (an
// infinite exponent) and measured on the top 1% of normalized sizes
TailEstimate grown_tail(std::vector<double> sizes, const GrowthConfig& g, Rng& rng) {
    for (int t = 0; t < 5000; ++t) {
        const auto dx = draw_money_creation(sizes, g, rng);
        for (std::size_t i = 0; i < sizes.size(); ++i) sizes[i] += dx[i];
    }
    const double m = mean_of(sizes);
    for (auto& x : sizes) x /= m;
    return estimate_tail_exponent(sizes, 0.01);
}

Outcome growth_tail() {
    GrowthConfig g;
    g.g = 0.0004;
    g.v = 10;
    Rng rng(9);
    const auto equal = grown_tail(std::vector<double>(10000, g.x0), g, rng);
    // for reference: the same process from log-normal initial sizes
    const auto drawn = grown_tail(init_sizes(g, 10000, rng), g, rng);
    return {equal.exponent >= 2 && equal.exponent <= 4,
            "Hill exponent " + fmt(equal.exponent, 3) + " +- " + fmt(equal.standard_error, 2) + " (top " +
                std::to_string(equal.tail_points) + "); from log-normal X(0): " + fmt(drawn.exponent, 3)};
}

// 10. asset purchases: central-bank funding rises, new repos dry up
Outcome app_scenario() {
    SimConfig c = scenario_preset();
    RunOptions ro;
    ro.track_network = false;
    const auto r = run_simulation(c, c.seed, ro);
    const Step a = c.scenario->start, b = c.scenario->end;
    auto m = [](const MetricsRow& x) { return x.central_bank_funding; };
    auto n = [](const MetricsRow& x) { return static_cast<double>(x.new_repo_count); };
    const double m_pre = mean_over(r.metrics, a - 1000, a, m);
    const double m_in = mean_over(r.metrics, a, b, m);
    const double n_pre = mean_over(r.metrics, a - 1000, a, n);
    const double n_end = mean_over(r.metrics, b - (b - a) / 4, b, n);
    const bool ok = r.status == RunStatus::Completed && m_in > 1.5 * m_pre && n_end < 0.5 * n_pre;
    return {ok, "run " + status_of(r) + "; sum M window/pre = " + fmt(m_in / m_pre, 3) +
                    ", new repos final quarter/pre = " + fmt(n_end / n_pre, 3)};
}

// 11. crisis of trust: denser, less core-periphery, Jaccard dips and recovers
Outcome gfc_scenario() {
    SimConfig c = scenario_preset();
    c.scenario->kind = ScenarioKind::GFC;
    const Step a = c.scenario->start, b = c.scenario->end;
    int dens_ok = 0, lip_ok = 0, jac_ok = 0;
    std::string detail;
    for (std::uint64_t k = 0; k < 5; ++k) {
        const auto r = run_simulation(c, seed_fanout(c.seed, k));
        std::vector<double> d_pre, d_in, j_pre, j_dip, j_late, p_in;
        for (const auto& nr : r.network) {
            if (nr.window_length == 1) {
                if (nr.end > a - 1000 && nr.end <= a) {
                    d_pre.push_back(nr.density);
                    j_pre.push_back(nr.jaccard);
                }
                if (nr.end > a && nr.end <= b) d_in.push_back(nr.density);
                if (nr.end > a && nr.end <= a + 50) j_dip.push_back(nr.jaccard);
                if (nr.end > b - 1000 && nr.end <= b) j_late.push_back(nr.jaccard);
            }
            if (nr.window_length == 50 && nr.core_periphery && nr.start >= a && nr.end <= b)
                p_in.push_back(nr.core_periphery->p_value);
        }
        const bool done = r.status == RunStatus::Completed;
        const double jp = mean_of(j_pre);
        const double dip = j_dip.empty() ? std::nan("") : *std::min_element(j_dip.begin(), j_dip.end());
        if (done && mean_of(d_in) > mean_of(d_pre)) ++dens_ok;
        if (done && mean_of(p_in) >= 0.05) ++lip_ok;
        if (done && dip < jp && mean_of(j_late) >= 0.9 * jp) ++jac_ok;
        detail += (detail.empty() ? "" : "; ") +
                  (done ? "density " + fmt(mean_of(d_pre), 3) + "->" + fmt(mean_of(d_in), 3) + " p " +
                              fmt(mean_of(p_in), 3) + " J " + fmt(jp, 3) + "/" + fmt(dip, 3) + "/" +
                              fmt(mean_of(j_late), 3)
                        : status_of(r));
    }
    return {dens_ok >= 3 && lip_ok >= 3 && jac_ok >= 3,
            "density " + std::to_string(dens_ok) + "/5, lip " + std::to_string(lip_ok) + "/5, jaccard " +
                std::to_string(jac_ok) + "/5; " + detail};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// 12. identical config and seed give byte-identical bundles
Outcome determinism() {
    const fs::path root = fs::temp_directory_path() / "repoabm_acceptance_determinism";
    fs::remove_all(root);
    std::ostringstream sink;
    std::vector<int> codes;
    for (const char* sub : {"a", "b"})
        codes.push_back(cli_main({"run", "--seed", "12", "--steps", "1500", "--set", "n_banks=50", "--out",
                                  (root / sub).string()},
                                 sink, sink));
    std::size_t files = 0, same = 0;
    for (const auto& e : fs::directory_iterator(root / "a")) {
        ++files;
        if (slurp(e.path()) == slurp(root / "b" / e.path().filename())) ++same;
    }
    fs::remove_all(root);
    const bool ok = files >= 5 && same == files && codes[0] == codes[1];
    return {ok, std::to_string(same) + "/" + std::to_string(files) + " files identical (exit codes " +
                    std::to_string(codes[0]) + "," + std::to_string(codes[1]) + ")"};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria for the repo market simulator", "acceptance"};
    std::vector<int> only;
    app.add_option("--only", only, "criterion numbers to run (default: all)")->delimiter(',');
    CLI11_PARSE(app, argc, argv);
    auto wanted = [&](int k) { return only.empty() || std::find(only.begin(), only.end(), k) != only.end(); };

    std::optional<TypicalRuns> typical;
    auto typical_set = [&]() -> const TypicalRuns& {
        if (!typical) typical = typical_runs();
        return *typical;
    };

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"accounting identity", identity},
        {"repo LCR-neutrality", lcr_neutrality},
        {"payment-shock conservation", shock_conservation},
        {"excess liquidity emergence", [&] { return excess_liquidity(typical_set()); }},
        {"re-use convergence", [&] { return reuse(typical_set()); }},
        {"core-periphery emergence", [&] { return core_periphery(typical_set()); }},
        {"beta-sweep monotonicity", beta_sweep},
        {"sigma effect on maturity", sigma_sweep},
        {"growth tail exponent", growth_tail},
        {"APP scenario", app_scenario},
        {"GFC scenario", gfc_scenario},
        {"determinism", determinism},
    };

    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const int id = static_cast<int>(k) + 1;
        if (!wanted(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!o.pass) ++failed;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  " << id << ". " << criteria[k].first << ": " << o.detail
                  << " [" << fmt(secs, 3) << " s]" << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
