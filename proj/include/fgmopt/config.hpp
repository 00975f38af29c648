#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fgmopt::cli {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ExperimentKind {
    QuadraticCycleRegret,
    RbfDiscovery,
    RbfOptimize,
    TransformedPipeline,
    CoverageDemo,
    SteinCheck,
};

std::string to_string(ExperimentKind kind);

struct DiscoveryConfig {
    double alpha = 0.05;
    bool unit_sigma = false;
    double ema_momentum = 0.99;
    int ema_burn_in = 10;
};

struct SurrogateConfig {
    std::vector<int> hidden{64, 64};
    int epochs = 200;
    double lr = 1e-3;
    int batch = 128;
    std::optional<double> lambda;  // default 1e-6 * n
    bool shared = true;
    double train_fraction = 0.9;
};

struct OptimizeConfig {
    int steps = 50;
    double lr = 0.2;
    int batch = 128;
    double init_std = 0.5;
    bool learn_std = true;
    int restarts = 8;
    double rwr_temperature = 0.05;
    int eval_samples = 256;
};

struct VaeConfig {
    std::vector<int> hidden{64};
    int epochs = 100;
    double lr = 1e-3;
    int batch = 128;
    double noise_scale = 0.1;
    int latent_dim = 0;  // 0: use the benchmark's ground-truth dimension
    bool interleaved = false;
    int graph_interval = 100;
};

struct RunConfig {
    ExperimentKind kind = ExperimentKind::QuadraticCycleRegret;
    int d = 0;
    long n = 0;
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> methods;
    std::string pattern;  // RBF clique pattern; empty picks the default for d
    std::filesystem::path out_dir = "results";
    DiscoveryConfig discovery;
    SurrogateConfig surrogate;
    OptimizeConfig optimize;
    VaeConfig vae;
    /// Source text, echoed into meta.txt.
    std::string source;
};

/// Line-oriented "key = value" with "[section]" headers and '#' comments.
/// Keys before any header belong to [experiment].
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Every recognised key with its default, for --help.
std::string config_reference();

const std::vector<std::string>& known_methods();

}  // namespace fgmopt::cli
