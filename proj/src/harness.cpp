#include "repoabm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>

#include "repoabm/shocks.hpp"

namespace repoabm {

EffectiveParams apply_scenario(const SimConfig& config, Step step) {
    EffectiveParams p{config.beta_new, CounterpartyOrder::ByTrust};
    if (!config.scenario || !config.scenario->active(step)) return p;
    switch (config.scenario->kind) {
        case ScenarioKind::APP:
            p.beta_new = 0.0;
            break;
        case ScenarioKind::GFC:
            p.order = CounterpartyOrder::Random;
            break;
    }
    return p;
}

std::uint64_t seed_fanout(std::uint64_t master_seed, std::uint64_t run_index) {
    return mix64(master_seed + (run_index + 1) * 0x9E3779B97F4A7C15ULL);
}

Simulation::Simulation(SimConfig config, std::uint64_t seed, RunOptions options)
    : config_(std::move(config)),
      seed_(seed),
      options_(std::move(options)),
      rng_(seed),
      ledger_(config_.n_banks) {
    config_.validate();
    const std::size_t n = config_.n_banks;
    sizes_ = init_sizes(config_.growth(), n, rng_);
    trust_ = init_trust(n, rng_);

    // initial money creation, reserves met with central-bank funding
    const EffectiveParams p = apply_scenario(config_, 0);
    for (BankId i = 0; i < n; ++i) {
        auto& bank = ledger_.bank(i);
        apply_money_creation(bank, sizes_[i], config_.gamma_new, p.beta_new);
        ledger_.apply_central_bank_funding(i, config_.alpha * bank.deposits);
    }
    ledger_.set_step(0);

    if (options_.track_network) {
        NetworkTrackerConfig tc;
        tc.n = n;
        tc.windows = config_.windows;
        tc.lip_windows = config_.lip_windows;
        tc.lip_null_samples = config_.lip_null_samples;
        tc.lip_seed = seed_;
        tracker_.emplace(std::move(tc));
        history_.emplace();
    }
    notify(Phase::Clearing);
}

void Simulation::notify(Phase phase) {
    if (options_.on_phase) options_.on_phase(ledger_.step(), phase, ledger_);
}

bool Simulation::step() {
    if (aborted()) return false;
    const std::size_t n = ledger_.size();
    const Step t = ledger_.step() + 1;
    ledger_.set_step(t);
    const EffectiveParams p = apply_scenario(config_, t);

    // money creation
    const auto created = draw_money_creation(sizes_, config_.growth(), rng_);
    std::vector<double> created_deposits(n), created_securities(n);
    for (BankId i = 0; i < n; ++i) {
        const auto d = apply_money_creation(ledger_.bank(i), created[i], config_.gamma_new, p.beta_new);
        created_deposits[i] = d.deposits;
        created_securities[i] = d.usable_securities;
        sizes_[i] += created[i];
    }
    notify(Phase::MoneyCreation);

    // payment shocks, mean-reverting towards the deposits created by each bank
    std::vector<double> deposits(n), targets(n);
    for (BankId i = 0; i < n; ++i) {
        deposits[i] = ledger_.bank(i).deposits;
        targets[i] = (1.0 - config_.gamma_new) * sizes_[i];
    }
    const auto shocks = draw_payment_shocks(deposits, targets, config_.sigma, rng_);
    std::vector<double> applied(n);
    for (BankId i = 0; i < n; ++i) {
        applied[i] = apply_payment_shock(ledger_.bank(i), shocks[i]);
        if (applied[i] != shocks[i]) ++floor_events_;
    }
    notify(Phase::PaymentShock);

    // LCR management
    decisions_.assign(n, FundingDecision{});
    for (BankId i = 0; i < n; ++i) {
        const auto& bank = ledger_.bank(i);
        decisions_[i].dM = config_.lcr_rule == LcrRule::Target
                               ? lcr_target_funding(bank, config_.beta)
                               : lcr_funding(applied[i], bank.central_bank_funding, config_.beta,
                                             created_deposits[i], created_securities[i]);
        ledger_.apply_central_bank_funding(i, decisions_[i].dM);
    }
    notify(Phase::CentralBankFunding);

    // reserve and leverage management, then clearing
    for (BankId i = 0; i < n; ++i) {
        const auto& bank = ledger_.bank(i);
        decisions_[i].dR = reserve_repo_demand(bank, config_.alpha);
        decisions_[i].close_amount = leverage_closure(bank, config_.gamma_star, config_.alpha);
    }
    MarketParams mp;
    mp.alpha = config_.alpha;
    mp.lambda = config_.lambda;
    mp.max_cascade_depth = config_.cascade_cap();
    mp.order = p.order;
    report_ = clear_step(ledger_, trust_, decisions_, mp, rng_);
    bank_steps_ += n;
    if (report_.aborted) {
        status_ = RunStatus::AbortedLoop;
        abort_reason_ = report_.abort_reason;
        return false;
    }
    notify(Phase::Clearing);

    metrics_.push_back(compute_metrics_row(ledger_, config_.alpha, &report_, floor_events_));
    if (tracker_) {
        const auto edges = exposure_edges(ledger_);
        tracker_->observe(t, edges);
        history_->observe(t, edges);
    }
    return true;
}

RunResult Simulation::finish() {
    RunResult r;
    r.config = config_;
    r.seed = seed_;
    r.status = status_;
    r.abort_step = aborted() ? ledger_.step() : 0;
    r.abort_reason = abort_reason_;
    r.metrics = std::move(metrics_);
    r.floor_events = floor_events_;
    r.bank_steps = bank_steps_;
    if (tracker_) {
        r.network = tracker_->rows();
        r.edges = history_->intervals();
        for (const std::size_t w : config_.windows) {
            if (auto snap = tracker_->last_snapshot(w))
                r.degrees.push_back({w, snap->window_end, degree_profile(*snap)});
        }
    }
    r.final_ledger = ledger_;
    r.final_trust = trust_;
    return r;
}

RunResult run_simulation(const SimConfig& config, std::uint64_t seed, RunOptions options) {
    Simulation sim(config, seed, std::move(options));
    for (std::size_t s = 0; s < config.steps; ++s)
        if (!sim.step()) break;
    return sim.finish();
}

std::map<std::string, double> stationary_metrics(const RunResult& result, std::size_t tail_len) {
    std::map<std::string, double> out;
    const auto& rows = result.metrics;
    if (rows.empty()) return out;
    const std::size_t tail = std::min(tail_len, rows.size());

    auto series = [&](auto&& f) {
        std::vector<double> s;
        s.reserve(rows.size());
        for (const auto& r : rows) s.push_back(f(r));
        return stationary_value(s, tail);
    };
    auto share = [](double x, double total) { return total > 0.0 ? x / total : 0.0; };
    out["excess_liquidity_share"] = series([&](const MetricsRow& r) { return share(r.excess_liquidity, r.total_assets); });
    out["cb_funding_share"] = series([&](const MetricsRow& r) { return share(r.central_bank_funding, r.total_assets); });
    out["repos_share"] = series([&](const MetricsRow& r) { return share(r.repos, r.total_assets); });
    out["usable_securities_share"] = series([&](const MetricsRow& r) { return share(r.usable_securities, r.total_assets); });
    out["reuse_rate"] = series([](const MetricsRow& r) { return r.reuse_rate; });
    out["average_maturity"] = series([](const MetricsRow& r) { return r.average_maturity; });
    out["new_repo_count"] = series([](const MetricsRow& r) { return static_cast<double>(r.new_repo_count); });

    const Step last = rows.back().step;
    std::map<std::size_t, std::vector<const NetworkRow*>> by_window;
    for (const auto& nr : result.network)
        if (nr.end > last - static_cast<Step>(tail)) by_window[nr.window_length].push_back(&nr);
    for (const auto& [w, list] : by_window) {
        double dens = 0.0, jac = 0.0, pval = 0.0;
        std::size_t with_lip = 0;
        for (const auto* nr : list) {
            dens += nr->density;
            jac += nr->jaccard;
            if (nr->core_periphery) {
                pval += nr->core_periphery->p_value;
                ++with_lip;
            }
        }
        const std::string suffix = "_w" + std::to_string(w);
        out["density" + suffix] = dens / static_cast<double>(list.size());
        out["jaccard" + suffix] = jac / static_cast<double>(list.size());
        if (with_lip > 0) out["lip_pvalue" + suffix] = pval / static_cast<double>(with_lip);
    }
    return out;
}

std::size_t default_thread_count() {
    if (const char* env = std::getenv("REPOABM_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v >= 1) return static_cast<std::size_t>(v);
        } catch (...) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<SweepPointSummary> run_sweep(const SweepSpec& sweep, const SimConfig& base,
                                         SweepOptions options) {
    if (sweep.values.empty()) throw std::invalid_argument("sweep: value grid must not be empty");
    if (sweep.runs < 1) throw std::invalid_argument("sweep: runs must be >= 1");

    std::vector<SimConfig> configs;
    for (const double value : sweep.values) {
        SimConfig c = base;
        c.steps = sweep.steps;
        set_parameter(c, sweep.parameter, value);
        c.validate();
        configs.push_back(std::move(c));
    }

    const std::size_t tasks = configs.size() * sweep.runs;
    std::vector<std::optional<std::map<std::string, double>>> results(tasks);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < tasks; k = next++) {
            const std::size_t point = k / sweep.runs;
            const std::size_t run = k % sweep.runs;
            RunOptions ro;
            ro.track_network = options.track_network;
            const auto r = run_simulation(configs[point], seed_fanout(base.seed, run), ro);
            if (r.status == RunStatus::Completed) results[k] = stationary_metrics(r);
        }
    };
    const std::size_t threads = std::min(tasks, options.threads ? options.threads : default_thread_count());
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    std::vector<SweepPointSummary> out;
    for (std::size_t p = 0; p < configs.size(); ++p) {
        SweepPointSummary s;
        s.value = sweep.values[p];
        for (std::size_t r = 0; r < sweep.runs; ++r) {
            const auto& res = results[p * sweep.runs + r];
            if (!res) {
                ++s.runs_aborted;
                continue;
            }
            ++s.runs_completed;
            for (const auto& [key, value] : *res) s.run_values[key].push_back(value);
        }
        s.available = s.runs_completed > 0;
        for (const auto& [key, values] : s.run_values)
            s.robust_means[key] = values.size() >= 2 ? robust_sweep_mean(values) : values.front();
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace repoabm
