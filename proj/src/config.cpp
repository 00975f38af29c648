#include "fgmopt/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace fgmopt::cli {

namespace {

std::string trim(const std::string& s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& value)
{
    std::vector<std::string> out;
    std::istringstream in(value);
    std::string item;
    while (std::getline(in, item, ','))
        if (auto t = trim(item); !t.empty())
            out.push_back(t);
    return out;
}

double to_double(const std::string& v)
{
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size())
        throw std::invalid_argument("not a number");
    return x;
}

long to_long(const std::string& v)
{
    std::size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size())
        throw std::invalid_argument("not an integer");
    return x;
}

int to_int(const std::string& v)
{
    return static_cast<int>(to_long(v));
}

bool to_bool(const std::string& v)
{
    if (v == "true" || v == "yes" || v == "1")
        return true;
    if (v == "false" || v == "no" || v == "0")
        return false;
    throw std::invalid_argument("not a boolean");
}

std::vector<int> to_widths(const std::string& v)
{
    std::vector<int> out;
    for (const auto& item : split_list(v))
        out.push_back(to_int(item));
    return out;
}

ExperimentKind to_kind(const std::string& v)
{
    static const std::map<std::string, ExperimentKind> kinds{
        {"quadratic-cycle-regret", ExperimentKind::QuadraticCycleRegret},
        {"rbf-discovery", ExperimentKind::RbfDiscovery},
        {"rbf-optimize", ExperimentKind::RbfOptimize},
        {"transformed-pipeline", ExperimentKind::TransformedPipeline},
        {"coverage-demo", ExperimentKind::CoverageDemo},
        {"stein-check", ExperimentKind::SteinCheck},
    };
    const auto it = kinds.find(v);
    if (it == kinds.end())
        throw std::invalid_argument("unknown experiment kind '" + v + "'");
    return it->second;
}

struct ParseState {
    RunConfig config;
    bool has_kind = false;
    bool has_d = false;
    bool has_n = false;
    long seed_count = 1;
    std::uint64_t seed_base = 0;
    std::vector<std::uint64_t> seed_list;
    bool has_methods = false;
};

struct KeySpec {
    const char* section;
    const char* key;
    const char* default_text;
    const char* doc;
    std::function<void(ParseState&, const std::string&)> set;
};

const std::vector<KeySpec>& key_table()
{
    static const std::vector<KeySpec> table{
        {"experiment", "kind", "(required)",
         "quadratic-cycle-regret | rbf-discovery | rbf-optimize | transformed-pipeline | "
         "coverage-demo | stein-check",
         [](ParseState& s, const std::string& v) { s.config.kind = to_kind(v); s.has_kind = true; }},
        {"experiment", "d", "(required)", "problem dimension",
         [](ParseState& s, const std::string& v) { s.config.d = to_int(v); s.has_d = true; }},
        {"experiment", "n", "(required)", "dataset size (samples M for discovery and Stein checks)",
         [](ParseState& s, const std::string& v) { s.config.n = to_long(v); s.has_n = true; }},
        {"experiment", "seeds", "1", "number of seeds, run as seed_base .. seed_base + seeds - 1",
         [](ParseState& s, const std::string& v) { s.seed_count = to_long(v); }},
        {"experiment", "seed_base", "0", "first seed",
         [](ParseState& s, const std::string& v) { s.seed_base = static_cast<std::uint64_t>(to_long(v)); }},
        {"experiment", "seed_list", "", "explicit comma-separated seeds (overrides seeds)",
         [](ParseState& s, const std::string& v) {
             for (const auto& item : split_list(v))
                 s.seed_list.push_back(static_cast<std::uint64_t>(to_long(item)));
         }},
        {"experiment", "methods", "(per experiment)",
         "comma-separated subset of fgm, naive-full, best-in-dataset, rwr, vae-fgm, vae-ga",
         [](ParseState& s, const std::string& v) { s.config.methods = split_list(v); s.has_methods = true; }},
        {"experiment", "pattern", "triangle-chain (odd d) / overlapping-triangles (d = 4)",
         "RBF clique pattern",
         [](ParseState& s, const std::string& v) { s.config.pattern = v; }},
        {"output", "dir", "results", "output directory (overridden by --out)",
         [](ParseState& s, const std::string& v) { s.config.out_dir = v; }},

        {"discovery", "alpha", "0.05", "edge-test significance level",
         [](ParseState& s, const std::string& v) { s.config.discovery.alpha = to_double(v); }},
        {"discovery", "unit_sigma", "false", "use sigma = 1 in the edge test",
         [](ParseState& s, const std::string& v) { s.config.discovery.unit_sigma = to_bool(v); }},
        {"discovery", "ema_momentum", "0.99", "momentum of the interleaved EMA estimator",
         [](ParseState& s, const std::string& v) { s.config.discovery.ema_momentum = to_double(v); }},
        {"discovery", "ema_burn_in", "10", "EMA updates before the graph is trusted",
         [](ParseState& s, const std::string& v) { s.config.discovery.ema_burn_in = to_int(v); }},

        {"surrogate", "hidden", "64, 64", "hidden layer widths",
         [](ParseState& s, const std::string& v) { s.config.surrogate.hidden = to_widths(v); }},
        {"surrogate", "epochs", "200", "training epochs",
         [](ParseState& s, const std::string& v) { s.config.surrogate.epochs = to_int(v); }},
        {"surrogate", "lr", "0.001", "Adam learning rate",
         [](ParseState& s, const std::string& v) { s.config.surrogate.lr = to_double(v); }},
        {"surrogate", "batch", "128", "minibatch size",
         [](ParseState& s, const std::string& v) { s.config.surrogate.batch = to_int(v); }},
        {"surrogate", "lambda", "1e-6 * n", "one-hot ridge weight",
         [](ParseState& s, const std::string& v) { s.config.surrogate.lambda = to_double(v); }},
        {"surrogate", "shared", "true", "one masked network shared by all cliques",
         [](ParseState& s, const std::string& v) { s.config.surrogate.shared = to_bool(v); }},
        {"surrogate", "train_fraction", "0.9", "train share of the train/held-out split",
         [](ParseState& s, const std::string& v) { s.config.surrogate.train_fraction = to_double(v); }},

        {"optimize", "steps", "50", "policy ascent steps",
         [](ParseState& s, const std::string& v) { s.config.optimize.steps = to_int(v); }},
        {"optimize", "lr", "0.2", "policy ascent step size",
         [](ParseState& s, const std::string& v) { s.config.optimize.lr = to_double(v); }},
        {"optimize", "batch", "128", "policy samples per gradient step",
         [](ParseState& s, const std::string& v) { s.config.optimize.batch = to_int(v); }},
        {"optimize", "init_std", "0.5", "initial policy standard deviation",
         [](ParseState& s, const std::string& v) { s.config.optimize.init_std = to_double(v); }},
        {"optimize", "learn_std", "true", "also ascend the policy log-std",
         [](ParseState& s, const std::string& v) { s.config.optimize.learn_std = to_bool(v); }},
        {"optimize", "restarts", "8", "coordinate-ascent restarts for large discrete spaces",
         [](ParseState& s, const std::string& v) { s.config.optimize.restarts = to_int(v); }},
        {"optimize", "rwr_temperature", "0.05", "reward-weighted regression temperature",
         [](ParseState& s, const std::string& v) { s.config.optimize.rwr_temperature = to_double(v); }},
        {"optimize", "eval_samples", "256", "fixed policy samples used for reported values",
         [](ParseState& s, const std::string& v) { s.config.optimize.eval_samples = to_int(v); }},

        {"vae", "hidden", "64", "encoder/decoder hidden widths",
         [](ParseState& s, const std::string& v) { s.config.vae.hidden = to_widths(v); }},
        {"vae", "epochs", "100", "training epochs",
         [](ParseState& s, const std::string& v) { s.config.vae.epochs = to_int(v); }},
        {"vae", "lr", "0.001", "Adam learning rate",
         [](ParseState& s, const std::string& v) { s.config.vae.lr = to_double(v); }},
        {"vae", "batch", "128", "minibatch size",
         [](ParseState& s, const std::string& v) { s.config.vae.batch = to_int(v); }},
        {"vae", "noise_scale", "0.1", "decoder noise scale on standardised data",
         [](ParseState& s, const std::string& v) { s.config.vae.noise_scale = to_double(v); }},
        {"vae", "latent_dim", "d", "latent dimension",
         [](ParseState& s, const std::string& v) { s.config.vae.latent_dim = to_int(v); }},
        {"vae", "interleaved", "false", "track the graph with an EMA estimator during training",
         [](ParseState& s, const std::string& v) { s.config.vae.interleaved = to_bool(v); }},
        {"vae", "graph_interval", "100", "batches between EMA updates in interleaved mode",
         [](ParseState& s, const std::string& v) { s.config.vae.graph_interval = to_int(v); }},
    };
    return table;
}

std::vector<std::string> default_methods(ExperimentKind kind)
{
    switch (kind) {
    case ExperimentKind::QuadraticCycleRegret: return {"fgm", "best-in-dataset"};
    case ExperimentKind::RbfDiscovery: return {"fgm"};
    case ExperimentKind::RbfOptimize: return {"fgm", "naive-full"};
    case ExperimentKind::TransformedPipeline: return {"vae-fgm", "naive-full"};
    case ExperimentKind::CoverageDemo:
    case ExperimentKind::SteinCheck: return {"exact"};
    }
    return {};
}

std::vector<std::string> allowed_methods(ExperimentKind kind)
{
    switch (kind) {
    case ExperimentKind::QuadraticCycleRegret: return {"fgm", "best-in-dataset", "naive-full"};
    case ExperimentKind::RbfDiscovery: return {"fgm"};
    case ExperimentKind::RbfOptimize: return {"fgm", "naive-full", "best-in-dataset", "rwr"};
    case ExperimentKind::TransformedPipeline:
        return {"vae-fgm", "vae-ga", "naive-full", "best-in-dataset", "rwr"};
    case ExperimentKind::CoverageDemo:
    case ExperimentKind::SteinCheck: return {"exact"};
    }
    return {};
}

void validate(RunConfig& c)
{
    if (c.d < 1 || c.n < 1)
        throw ConfigError("d and n must be at least 1");
    if (c.seeds.empty())
        throw ConfigError("seed list is empty");
    const auto allowed = allowed_methods(c.kind);
    for (const auto& m : c.methods) {
        if (std::find(known_methods().begin(), known_methods().end(), m) == known_methods().end() &&
            m != "exact")
            throw ConfigError("unknown method '" + m + "'");
        if (std::find(allowed.begin(), allowed.end(), m) == allowed.end())
            throw ConfigError("method '" + m + "' is not available for experiment " +
                              to_string(c.kind));
    }
    if (c.methods.empty())
        throw ConfigError("method list is empty");
    switch (c.kind) {
    case ExperimentKind::QuadraticCycleRegret:
    case ExperimentKind::CoverageDemo:
        if (c.d < 3)
            throw ConfigError("quadratic-cycle experiments need d >= 3");
        if (c.kind == ExperimentKind::CoverageDemo && c.d > 16)
            throw ConfigError("coverage-demo enumerates 2^d states; d must be <= 16");
        break;
    case ExperimentKind::RbfDiscovery:
    case ExperimentKind::RbfOptimize:
    case ExperimentKind::TransformedPipeline:
        if (c.pattern.empty())
            c.pattern = (c.d == 4) ? "overlapping-triangles" : "triangle-chain";
        if (c.pattern == "triangle-chain" && (c.d < 3 || c.d % 2 == 0))
            throw ConfigError("triangle-chain pattern needs odd d >= 3");
        if (c.pattern == "overlapping-triangles" && c.d != 4)
            throw ConfigError("overlapping-triangles pattern needs d = 4");
        if (c.pattern != "triangle-chain" && c.pattern != "overlapping-triangles")
            throw ConfigError("unknown pattern '" + c.pattern + "'");
        break;
    case ExperimentKind::SteinCheck:
        if (c.n < 2)
            throw ConfigError("stein-check needs n >= 2");
        break;
    }
    if (!(c.discovery.alpha > 0.0 && c.discovery.alpha < 1.0))
        throw ConfigError("discovery.alpha must lie in (0, 1)");
    if (!(c.surrogate.train_fraction > 0.0 && c.surrogate.train_fraction <= 1.0))
        throw ConfigError("surrogate.train_fraction must lie in (0, 1]");
    if (c.optimize.steps < 1 || !(c.optimize.lr >= 0.0) || !(c.optimize.init_std > 0.0))
        throw ConfigError("optimize.steps >= 1, optimize.lr >= 0 and optimize.init_std > 0 required");
}

}  // namespace

std::string to_string(ExperimentKind kind)
{
    switch (kind) {
    case ExperimentKind::QuadraticCycleRegret: return "quadratic-cycle-regret";
    case ExperimentKind::RbfDiscovery: return "rbf-discovery";
    case ExperimentKind::RbfOptimize: return "rbf-optimize";
    case ExperimentKind::TransformedPipeline: return "transformed-pipeline";
    case ExperimentKind::CoverageDemo: return "coverage-demo";
    case ExperimentKind::SteinCheck: return "stein-check";
    }
    return "unknown";
}

const std::vector<std::string>& known_methods()
{
    static const std::vector<std::string> methods{"fgm",  "naive-full", "best-in-dataset",
                                                  "rwr",  "vae-fgm",    "vae-ga"};
    return methods;
}

RunConfig parse_config(const std::string& text)
{
    ParseState state;
    state.config.source = text;
    std::map<std::string, int> seen;  // qualified key -> line
    std::string section = "experiment";
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3)
                throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            const bool known = std::any_of(key_table().begin(), key_table().end(),
                                           [&](const KeySpec& k) { return section == k.section; });
            if (!known)
                throw ConfigError("line " + std::to_string(lineno) + ": unknown section [" +
                                  section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": missing key");
        const auto spec = std::find_if(key_table().begin(), key_table().end(), [&](const KeySpec& k) {
            return section == k.section && key == k.key;
        });
        if (spec == key_table().end())
            throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key +
                              "' in [" + section + "]");
        const std::string qualified = section + "." + key;
        if (const auto prev = seen.find(qualified); prev != seen.end())
            throw ConfigError("duplicate key '" + qualified + "' on lines " +
                              std::to_string(prev->second) + " and " + std::to_string(lineno));
        seen.emplace(qualified, lineno);
        try {
            spec->set(state, value);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": bad value '" + value +
                              "' for '" + key + "': " + e.what());
        }
    }

    if (!state.has_kind)
        throw ConfigError("experiment kind required");
    if (!state.has_d)
        throw ConfigError("experiment dimension 'd' required");
    if (!state.has_n)
        throw ConfigError("experiment size 'n' required");
    RunConfig config = std::move(state.config);
    if (!state.seed_list.empty()) {
        config.seeds = state.seed_list;
    } else {
        if (state.seed_count < 1)
            throw ConfigError("seeds must be at least 1");
        for (long k = 0; k < state.seed_count; ++k)
            config.seeds.push_back(state.seed_base + static_cast<std::uint64_t>(k));
    }
    if (!state.has_methods)
        config.methods = default_methods(config.kind);
    validate(config);
    return config;
}

RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read config file " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

std::string config_reference()
{
    std::ostringstream out;
    std::string section;
    for (const auto& k : key_table()) {
        if (section != k.section) {
            section = k.section;
            out << "\n[" << section << "]\n";
        }
        out << "  " << k.key << " = " << k.default_text << "\n      " << k.doc << '\n';
    }
    return out.str();
}

}  // namespace fgmopt::cli
