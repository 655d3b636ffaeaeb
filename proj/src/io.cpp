#include "repoabm/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace repoabm {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

const std::set<std::string>& top_level_keys() {
    static const std::set<std::string> keys{
        "n_banks", "steps", "seed", "g", "v", "x0", "size_mode", "nu", "sigma", "lcr_rule",
        "lambda", "alpha", "beta", "beta_new", "gamma", "gamma_star", "gamma_new", "windows",
        "lip_windows", "lip_null_samples", "max_cascade_depth", "scenario", "sweep"};
    return keys;
}

const std::set<std::string> kScenarioKeys{"kind", "start", "end"};
const std::set<std::string> kSweepKeys{"parameter", "values", "runs", "steps"};

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

void check_keys(const json& doc, const std::set<std::string>& known, const std::string& prefix) {
    if (!doc.is_object()) throw ConfigError((prefix.empty() ? "config" : prefix) + ": expected an object");
    for (const auto& [key, value] : doc.items())
        if (!known.count(key)) throw ConfigError(prefix + key + ": unknown key");
}

json parse_scalar(const std::string& text) {
    if (text.empty()) return text;
    try {
        json v = json::parse(text);
        if (v.is_number() || v.is_boolean() || v.is_null()) return v;
    } catch (const json::parse_error&) {
    }
    return text;
}

json parse_value(const std::string& text) {
    if (text.find(',') == std::string::npos) return parse_scalar(text);
    json list = json::array();
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) list.push_back(parse_scalar(item));
    return list;
}

void set_dotted(json& doc, std::string key, const json& value) {
    if (key == "kind" || key == "start" || key == "end") key = "scenario." + key;
    const auto dot = key.find('.');
    if (dot == std::string::npos) {
        doc[key] = value;
        return;
    }
    const std::string head = key.substr(0, dot);
    const std::string tail = key.substr(dot + 1);
    if (tail.find('.') != std::string::npos || tail.empty())
        throw ConfigError(key + ": unknown key");
    if (!doc.contains(head) || !doc[head].is_object()) doc[head] = json::object();
    doc[head][tail] = value;
}

double read_number(const json& doc, const std::string& key) {
    if (!doc.is_number()) throw ConfigError(key + ": expected a number");
    const double x = doc.get<double>();
    if (!std::isfinite(x)) throw ConfigError(key + ": must be finite");
    return x;
}

std::uint64_t read_unsigned(const json& doc, const std::string& key) {
    if (doc.is_number_unsigned()) return doc.get<std::uint64_t>();
    if (doc.is_number_integer()) {
        if (doc.get<std::int64_t>() < 0) throw ConfigError(key + ": must be >= 0");
        return static_cast<std::uint64_t>(doc.get<std::int64_t>());
    }
    if (doc.is_number_float()) {
        const double x = doc.get<double>();
        if (x < 0.0 || x != std::floor(x) || x > 9.007199254740992e15)
            throw ConfigError(key + ": expected a non-negative integer");
        return static_cast<std::uint64_t>(x);
    }
    throw ConfigError(key + ": expected a non-negative integer");
}

std::vector<std::size_t> read_count_list(const json& doc, const std::string& key) {
    std::vector<std::size_t> out;
    if (doc.is_string() && doc.get<std::string>().empty()) return out;  // "--set key=" clears
    if (!doc.is_array()) return {static_cast<std::size_t>(read_unsigned(doc, key))};
    for (const auto& item : doc) out.push_back(static_cast<std::size_t>(read_unsigned(item, key)));
    return out;
}

std::vector<double> read_number_list(const json& doc, const std::string& key) {
    if (!doc.is_array()) return {read_number(doc, key)};
    std::vector<double> out;
    for (const auto& item : doc) out.push_back(read_number(item, key));
    return out;
}

ScenarioKind read_kind(const json& doc) {
    if (!doc.is_string()) throw ConfigError("scenario.kind: expected \"APP\" or \"GFC\"");
    const std::string s = lower(doc.get<std::string>());
    if (s == "app") return ScenarioKind::APP;
    if (s == "gfc") return ScenarioKind::GFC;
    throw ConfigError("scenario.kind: expected \"APP\" or \"GFC\"");
}

ordered_json to_ordered(const SimConfig& c, const SweepSpec* sweep) {
    ordered_json doc;
    doc["n_banks"] = c.n_banks;
    doc["steps"] = c.steps;
    doc["seed"] = c.seed;
    doc["g"] = c.g;
    doc["v"] = c.v;
    doc["x0"] = c.x0;
    doc["size_mode"] = to_string(c.size_mode);
    doc["nu"] = c.nu;
    doc["sigma"] = c.sigma;
    doc["lcr_rule"] = to_string(c.lcr_rule);
    doc["lambda"] = c.lambda;
    doc["alpha"] = c.alpha;
    doc["beta"] = c.beta;
    doc["beta_new"] = c.beta_new;
    doc["gamma"] = c.gamma;
    doc["gamma_star"] = c.gamma_star;
    doc["gamma_new"] = c.gamma_new;
    doc["windows"] = c.windows;
    doc["lip_windows"] = c.lip_windows;
    doc["lip_null_samples"] = c.lip_null_samples;
    doc["max_cascade_depth"] = c.max_cascade_depth;
    if (c.scenario) {
        doc["scenario"] = {{"kind", to_string(c.scenario->kind)},
                           {"start", c.scenario->start},
                           {"end", c.scenario->end}};
    } else {
        doc["scenario"] = nullptr;
    }
    if (sweep) {
        doc["sweep"] = {{"parameter", sweep->parameter},
                        {"values", sweep->values},
                        {"runs", sweep->runs},
                        {"steps", sweep->steps}};
    }
    return doc;
}

LoadedConfig apply_document(const json& user, const LoadedConfig& base) {
    check_keys(user, top_level_keys(), "");
    LoadedConfig out = base;
    SimConfig& c = out.config;
    for (const auto& [key, value] : user.items()) {
        if (key == "n_banks") c.n_banks = read_unsigned(value, key);
        else if (key == "steps") c.steps = read_unsigned(value, key);
        else if (key == "seed") c.seed = read_unsigned(value, key);
        else if (key == "g") c.g = read_number(value, key);
        else if (key == "v") c.v = read_number(value, key);
        else if (key == "x0") c.x0 = read_number(value, key);
        else if (key == "nu") c.nu = read_number(value, key);
        else if (key == "sigma") c.sigma = read_number(value, key);
        else if (key == "lambda") c.lambda = read_number(value, key);
        else if (key == "alpha") c.alpha = read_number(value, key);
        else if (key == "beta") c.beta = read_number(value, key);
        else if (key == "beta_new") c.beta_new = read_number(value, key);
        else if (key == "gamma") c.gamma = read_number(value, key);
        else if (key == "gamma_star") c.gamma_star = read_number(value, key);
        else if (key == "gamma_new") c.gamma_new = read_number(value, key);
        else if (key == "windows") c.windows = read_count_list(value, key);
        else if (key == "lip_windows") c.lip_windows = read_count_list(value, key);
        else if (key == "lip_null_samples") c.lip_null_samples = read_unsigned(value, key);
        else if (key == "max_cascade_depth") c.max_cascade_depth = read_unsigned(value, key);
        else if (key == "size_mode") {
            const std::string s = value.is_string() ? value.get<std::string>() : "";
            if (s == "random-growth") c.size_mode = SizeMode::RandomGrowth;
            else if (s == "frozen-power-law") c.size_mode = SizeMode::FrozenPowerLaw;
            else throw ConfigError("size_mode: expected \"random-growth\" or \"frozen-power-law\"");
        } else if (key == "lcr_rule") {
            const std::string s = value.is_string() ? value.get<std::string>() : "";
            if (s == "target") c.lcr_rule = LcrRule::Target;
            else if (s == "incremental") c.lcr_rule = LcrRule::Incremental;
            else throw ConfigError("lcr_rule: expected \"target\" or \"incremental\"");
        } else if (key == "scenario") {
            if (value.is_null()) {
                c.scenario.reset();
                continue;
            }
            check_keys(value, kScenarioKeys, "scenario.");
            ScenarioSpec s = c.scenario.value_or(ScenarioSpec{});
            if (value.contains("kind")) s.kind = read_kind(value["kind"]);
            if (value.contains("start"))
                s.start = static_cast<Step>(read_unsigned(value["start"], "scenario.start"));
            if (value.contains("end"))
                s.end = static_cast<Step>(read_unsigned(value["end"], "scenario.end"));
            c.scenario = s;
        } else if (key == "sweep") {
            check_keys(value, kSweepKeys, "sweep.");
            SweepSpec& s = out.sweep;
            if (value.contains("parameter")) {
                if (!value["parameter"].is_string()) throw ConfigError("sweep.parameter: expected a name");
                s.parameter = value["parameter"].get<std::string>();
            }
            if (value.contains("values")) s.values = read_number_list(value["values"], "sweep.values");
            if (value.contains("runs")) s.runs = read_unsigned(value["runs"], "sweep.runs");
            if (value.contains("steps")) s.steps = read_unsigned(value["steps"], "sweep.steps");
        }
    }
    if (user.contains("beta") && !user.contains("beta_new")) c.beta_new = c.beta;

    const auto& names = sweepable_parameters();
    if (std::find(names.begin(), names.end(), out.sweep.parameter) == names.end())
        throw ConfigError("sweep.parameter: unknown parameter \"" + out.sweep.parameter + "\"");
    if (out.sweep.values.empty()) throw ConfigError("sweep.values: grid must not be empty");
    if (out.sweep.runs < 1) throw ConfigError("sweep.runs: must be >= 1");
    if (out.sweep.steps < 1) throw ConfigError("sweep.steps: must be >= 1");
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return out;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    return out;
}

void finish_output(std::ofstream& out, const fs::path& path) {
    out.close();
    if (!out) throw IoError("error writing " + path.string());
}

void ensure_directory(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw IoError("cannot create directory " + dir.string() + (ec ? ": " + ec.message() : ""));
}

/// Rounds to 12 significant digits so JSON output matches the tables.
json rounded(double x) {
    if (!std::isfinite(x)) return nullptr;
    return std::strtod(format_number(x).c_str(), nullptr);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("error reading " + path.string());
    return ss.str();
}

}  // namespace

Override parse_override(std::string_view text) {
    const auto eq = text.find('=');
    if (eq == std::string_view::npos || eq == 0)
        throw ConfigError("override \"" + std::string(text) + "\": expected key=value");
    return {std::string(text.substr(0, eq)), std::string(text.substr(eq + 1))};
}

LoadedConfig parse_config(std::string_view json_text, const LoadedConfig& base,
                          const std::vector<Override>& overrides) {
    json user;
    const std::string text(json_text);
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
        user = json::object();
    } else {
        try {
            user = json::parse(text);
        } catch (const json::parse_error& e) {
            throw ConfigError(std::string("config: parse error: ") + e.what());
        }
    }
    if (!user.is_object()) throw ConfigError("config: expected a JSON object");
    for (const auto& o : overrides) set_dotted(user, o.key, parse_value(o.value));
    return apply_document(user, base);
}

LoadedConfig load_config(const fs::path& path, const LoadedConfig& base,
                         const std::vector<Override>& overrides) {
    const std::string text = read_file(path);
    try {
        return parse_config(text, base, overrides);
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string config_to_json(const SimConfig& config, const SweepSpec* sweep) {
    return to_ordered(config, sweep).dump(2) + "\n";
}

std::string format_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

void write_network_csv(const std::vector<NetworkRow>& rows, const fs::path& path) {
    auto out = open_output(path);
    out << "window_length,window_index,start,end,edges,density,jaccard,lip_core_size,lip_error,lip_pvalue\n";
    for (const auto& r : rows) {
        out << r.window_length << ',' << r.window_index << ',' << r.start << ',' << r.end << ','
            << r.edge_count << ',' << format_number(r.density) << ',' << format_number(r.jaccard);
        if (r.core_periphery) {
            out << ',' << r.core_periphery->core.size() << ',' << r.core_periphery->error_count << ','
                << format_number(r.core_periphery->p_value) << '\n';
        } else {
            out << ",,,\n";
        }
    }
    finish_output(out, path);
}

void write_outputs(const RunResult& result, const fs::path& dir) {
    ensure_directory(dir);

    {
        const fs::path path = dir / "metrics.csv";
        auto out = open_output(path);
        out << "step,total_assets,cash,deposits,central_bank_funding,loans,own_funds,"
               "usable_securities,encumbered_securities,collateral_received,collateral_reused,"
               "repos,excess_liquidity,reuse_rate,new_repo_count,new_repo_notional,"
               "closed_repo_count,cb_fallback,average_maturity,open_contracts,"
               "cascade_depth_max,floor_events,status\n";
        for (const auto& m : result.metrics) {
            out << m.step;
            for (const double x : {m.total_assets, m.cash, m.deposits, m.central_bank_funding,
                                   m.loans, m.own_funds, m.usable_securities,
                                   m.encumbered_securities, m.collateral_received,
                                   m.collateral_reused, m.repos, m.excess_liquidity, m.reuse_rate})
                out << ',' << format_number(x);
            out << ',' << m.new_repo_count << ',' << format_number(m.new_repo_notional) << ','
                << m.closed_repo_count << ',' << format_number(m.cb_fallback) << ','
                << format_number(m.average_maturity) << ',' << m.open_contracts << ','
                << m.cascade_depth_max << ',' << m.floor_events << ",ok\n";
        }
        if (result.status == RunStatus::AbortedLoop)
            out << result.abort_step << std::string(21, ',') << ",aborted-loop\n";
        finish_output(out, path);
    }

    write_network_csv(result.network, dir / "network.csv");

    {
        const fs::path path = dir / "degrees.csv";
        auto out = open_output(path);
        out << "window_length,window_end,bank,in_degree,out_degree\n";
        for (const auto& snap : result.degrees)
            for (std::size_t i = 0; i < snap.degrees.in_degree.size(); ++i)
                out << snap.window_length << ',' << snap.end << ',' << i << ','
                    << snap.degrees.in_degree[i] << ',' << snap.degrees.out_degree[i] << '\n';
        finish_output(out, path);
    }

    {
        const fs::path path = dir / "edges.csv";
        auto out = open_output(path);
        out << "src,dst,first_step,last_step\n";
        for (const auto& e : result.edges)
            out << e.src << ',' << e.dst << ',' << e.first_step << ',' << e.last_step << '\n';
        finish_output(out, path);
    }

    {
        ordered_json summary;
        summary["status"] = result.status == RunStatus::Completed ? "completed" : "aborted-loop";
        summary["seed"] = result.seed;
        summary["steps_completed"] = result.metrics.empty() ? 0 : result.metrics.back().step;
        if (result.status == RunStatus::AbortedLoop) {
            summary["abort_step"] = result.abort_step;
            summary["abort_reason"] = result.abort_reason;
        }
        summary["floor_events"] = result.floor_events;
        summary["bank_steps"] = result.bank_steps;
        summary["config"] = to_ordered(result.config, nullptr);
        ordered_json stationary = ordered_json::object();
        for (const auto& [key, value] : stationary_metrics(result)) stationary[key] = rounded(value);
        summary["stationary"] = stationary;

        const fs::path path = dir / "summary.json";
        auto out = open_output(path);
        out << summary.dump(2) << '\n';
        finish_output(out, path);
    }
}

std::vector<EdgeInterval> read_edges(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "src,dst,first_step,last_step")
        throw IoError(path.string() + ": expected header src,dst,first_step,last_step");
    std::vector<EdgeInterval> edges;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        EdgeInterval e;
        unsigned long long src = 0, dst = 0;
        long long first = 0, last = 0;
        char tail = 0;
        if (std::sscanf(line.c_str(), "%llu,%llu,%lld,%lld%c", &src, &dst, &first, &last, &tail) != 4 ||
            first > last)
            throw IoError(path.string() + ":" + std::to_string(line_no) + ": malformed edge row");
        e.src = src;
        e.dst = dst;
        e.first_step = first;
        e.last_step = last;
        edges.push_back(e);
    }
    return edges;
}

std::vector<NetworkRow> analyze_edges(const std::vector<EdgeInterval>& edges,
                                      const NetworkTrackerConfig& tracker, Step last_step) {
    for (const auto& e : edges)
        if (e.src >= tracker.n || e.dst >= tracker.n || e.src == e.dst)
            throw std::invalid_argument("analyze: edge endpoint outside 0.." + std::to_string(tracker.n - 1));
    NetworkTracker replay(tracker);
    replay_edges(edges, last_step, [&](Step s, std::span<const Edge> open) { replay.observe(s, open); });
    return replay.rows();
}

BundleInfo read_bundle_info(const fs::path& dir) {
    const fs::path path = dir / "summary.json";
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("config") || !doc.contains("seed") ||
        !doc.contains("steps_completed"))
        throw IoError(path.string() + ": not a run summary");
    BundleInfo info;
    info.config = parse_config(doc["config"].dump(), LoadedConfig{}).config;
    info.seed = read_unsigned(doc["seed"], "seed");
    info.steps_completed = static_cast<Step>(read_unsigned(doc["steps_completed"], "steps_completed"));
    return info;
}

void write_sweep_outputs(const std::vector<SweepPointSummary>& points, const SweepSpec& sweep,
                         const SimConfig& base, const fs::path& dir) {
    ensure_directory(dir);
    {
        const fs::path path = dir / "sweep.csv";
        auto out = open_output(path);
        out << "parameter,value,metric,robust_mean,runs_completed,runs_aborted\n";
        for (const auto& p : points)
            for (const auto& [metric, mean] : p.robust_means)
                out << sweep.parameter << ',' << format_number(p.value) << ',' << metric << ','
                    << format_number(mean) << ',' << p.runs_completed << ',' << p.runs_aborted << '\n';
        finish_output(out, path);
    }
    {
        ordered_json summary;
        summary["config"] = to_ordered(base, &sweep);
        ordered_json list = ordered_json::array();
        for (const auto& p : points) {
            ordered_json block;
            block["value"] = p.value;
            block["available"] = p.available;
            block["runs_completed"] = p.runs_completed;
            block["runs_aborted"] = p.runs_aborted;
            block["abort_rate"] = rounded(static_cast<double>(p.runs_aborted) /
                                          static_cast<double>(p.runs_completed + p.runs_aborted));
            ordered_json means = ordered_json::object();
            for (const auto& [metric, mean] : p.robust_means) means[metric] = rounded(mean);
            block["robust_means"] = means;
            list.push_back(block);
        }
        summary["points"] = list;
        const fs::path path = dir / "summary.json";
        auto out = open_output(path);
        out << summary.dump(2) << '\n';
        finish_output(out, path);
    }
}

}  // namespace repoabm
