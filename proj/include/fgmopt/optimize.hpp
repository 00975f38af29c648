#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "fgmopt/bench.hpp"
#include "fgmopt/dataset.hpp"
#include "fgmopt/numkit.hpp"
#include "fgmopt/surrogate.hpp"

namespace fgmopt::optimize {

/// Design distribution N(mean, diag(std^2)).
struct GaussianPolicy {
    Vector mean;
    Vector std;

    static constexpr double kStdFloor = 1e-6;
    int dimension() const { return static_cast<int>(mean.size()); }
    Vector sample(numkit::Rng& rng) const;
};

struct TraceRecord {
    int step = 0;
    double surrogate_value = 0.0;
    double true_value = 0.0;  // NaN when no oracle is attached
    /// Share of evaluation samples inside the oracle's valid region.
    double valid_fraction = 1.0;
    Vector mean;
};

struct OptimizationTrace {
    std::vector<TraceRecord> records;
};

/// CSV "step,surrogate_value,true_value,policy_mean_norm".
void write_csv(std::ostream& out, const OptimizationTrace& trace);

struct Design {
    Vector x;
    double value = 0.0;
    Eigen::Index row = -1;
};

/// Row with the largest y; ties go to the lowest row index.
Design best_in_dataset(const Dataset& data);

using SurrogateFn = std::function<double(const Vector&)>;

enum class ArgmaxMode { Auto, Exhaustive, CoordinateAscent };

struct ArgmaxOptions {
    ArgmaxMode mode = ArgmaxMode::Auto;
    int restarts = 8;
    int max_sweeps = 100;
    std::uint64_t seed = 0;
    static constexpr std::uint64_t kExhaustiveLimit = std::uint64_t{1} << 20;
};

/// Maximises a surrogate over a discrete space. Exhaustive mode returns the
/// lexicographically smallest global maximiser; coordinate ascent returns
/// the best local maximiser over random restarts. Auto picks exhaustive when
/// the space has at most 2^20 points.
Design argmax_discrete(const SurrogateFn& model, const Space& space,
                       const ArgmaxOptions& options = {});
Design argmax_discrete(const surrogate::OneHotCliqueModel& model,
                       const ArgmaxOptions& options = {});

/// Value and gradient of a differentiable surrogate.
struct DifferentiableSurrogate {
    SurrogateFn value;
    std::function<Vector(const Vector&)> gradient;
};
DifferentiableSurrogate as_differentiable(const surrogate::MaskedMlpModel& model);

struct AscentOptions {
    int steps = 50;
    double lr = 0.2;
    int batch = 128;
    bool learn_std = true;
    /// Fixed noise draws used for the trace values (common random numbers).
    int eval_samples = 256;
};

struct AscentResult {
    GaussianPolicy policy;
    OptimizationTrace trace;
};

/// Pathwise (reparameterised) gradient ascent on E_{x~pi}[model(x)] over the
/// policy mean and, optionally, log-std. Trace record k evaluates the policy
/// after k updates. `oracle`, when given, fills the true values; designs
/// outside `valid` (when given) are counted and skipped for the true value.
struct AscentHooks {
    SurrogateFn oracle;
    std::function<bool(const Vector&)> valid;
    /// Maps policy samples to the space the oracle reads (e.g. a decoder).
    std::function<Vector(const Vector&)> to_oracle_space;
};
AscentResult ascend_policy(const DifferentiableSurrogate& model, const GaussianPolicy& init,
                           const AscentOptions& options, numkit::Rng& rng,
                           const AscentHooks& hooks = {});

/// Exponentiated-advantage weighted Gaussian fit, w_i = exp((y_i - max y) / T).
GaussianPolicy rwr_baseline(const Dataset& data, double temperature);

/// f(x*) - f(x) for a point design.
double regret(const Vector& design, const bench::Benchmark& bench);
/// f(x*) - Monte Carlo E_{x~pi} f(x) with `samples` draws from a fixed seed.
double regret(const GaussianPolicy& policy, const bench::Benchmark& bench,
              int samples = 10000, std::uint64_t seed = 0);

}  // namespace fgmopt::optimize
