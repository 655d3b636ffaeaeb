#include "repoabm/config.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace repoabm {

namespace {

void require(bool ok, const std::string& message) {
    if (!ok) throw std::invalid_argument(message);
}

bool is_fraction(double x) { return x >= 0.0 && x <= 1.0; }

}  // namespace

void SimConfig::validate() const {
    require(n_banks >= 2, "n_banks: must be >= 2");
    require(steps >= 1, "steps: must be >= 1");
    require(std::isfinite(g) && g >= 0.0 && g <= 1.0, "g: must lie in [0, 1]");
    require(std::isfinite(v) && v >= 0.0, "v: must be >= 0");
    require(std::isfinite(x0) && x0 > 0.0, "x0: must be > 0");
    require(size_mode != SizeMode::FrozenPowerLaw || (std::isfinite(nu) && nu > 1.0),
            "nu: must be > 1 in frozen-power-law mode");
    require(sigma >= 0.0 && sigma <= 0.10, "sigma: must lie in [0, 0.10]");
    require(is_fraction(lambda), "lambda: must lie in [0, 1]");
    require(alpha >= 0.0 && alpha < beta, "alpha: require 0 <= alpha < beta");
    require(beta <= 1.0, "beta: must be <= 1");
    require(is_fraction(beta_new), "beta_new: must lie in [0, 1]");
    require(gamma > 0.0 && gamma < gamma_star, "gamma: require 0 < gamma < gamma_star");
    require(gamma_star < 1.0, "gamma_star: must be < 1");
    require(is_fraction(gamma_new), "gamma_new: must lie in [0, 1]");
    require(!windows.empty(), "windows: must not be empty");
    require(std::all_of(windows.begin(), windows.end(), [](std::size_t w) { return w >= 1; }),
            "windows: lengths must be >= 1");
    for (const std::size_t w : lip_windows)
        require(std::find(windows.begin(), windows.end(), w) != windows.end(),
                "lip_windows: every entry must also appear in windows");
    if (scenario) {
        require(scenario->start >= 0 && scenario->start < scenario->end,
                "scenario: require 0 <= start < end");
        require(scenario->end <= static_cast<Step>(steps), "scenario: end must be <= steps");
    }
}

SimConfig sweep_preset() {
    SimConfig c;
    c.n_banks = 100;
    c.v = 0.0;
    c.size_mode = SizeMode::FrozenPowerLaw;
    c.nu = 1.4;
    c.sigma = 0.08;
    c.steps = 10000;
    c.lip_windows.clear();
    return c;
}

SimConfig scenario_preset() {
    SimConfig c;
    c.n_banks = 100;
    c.v = 0.0;
    c.size_mode = SizeMode::FrozenPowerLaw;
    c.nu = 1.4;
    c.steps = 21000;
    c.scenario = ScenarioSpec{};
    return c;
}

const std::vector<std::string>& sweepable_parameters() {
    static const std::vector<std::string> names{
        "n_banks", "steps", "g",         "v",     "x0",    "nu",        "sigma",
        "lambda",  "alpha", "beta",      "beta_new", "gamma", "gamma_star", "gamma_new"};
    return names;
}

void set_parameter(SimConfig& c, const std::string& name, double value) {
    if (name == "n_banks") c.n_banks = static_cast<std::size_t>(value);
    else if (name == "steps") c.steps = static_cast<std::size_t>(value);
    else if (name == "g") c.g = value;
    else if (name == "v") c.v = value;
    else if (name == "x0") c.x0 = value;
    else if (name == "nu") c.nu = value;
    else if (name == "sigma") c.sigma = value;
    else if (name == "lambda") c.lambda = value;
    else if (name == "alpha") c.alpha = value;
    else if (name == "beta") {
        // new securities follow the outflow rate unless set separately
        if (c.beta_new == c.beta) c.beta_new = value;
        c.beta = value;
    }
    else if (name == "beta_new") c.beta_new = value;
    else if (name == "gamma") c.gamma = value;
    else if (name == "gamma_star") c.gamma_star = value;
    else if (name == "gamma_new") c.gamma_new = value;
    else throw std::invalid_argument("unknown parameter: " + name);
}

std::string to_string(ScenarioKind kind) { return kind == ScenarioKind::APP ? "APP" : "GFC"; }

std::string to_string(LcrRule rule) { return rule == LcrRule::Target ? "target" : "incremental"; }

std::string to_string(SizeMode mode) {
    return mode == SizeMode::RandomGrowth ? "random-growth" : "frozen-power-law";
}

}  // namespace repoabm
