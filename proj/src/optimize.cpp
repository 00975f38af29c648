#include "fgmopt/optimize.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace fgmopt::optimize {

Vector GaussianPolicy::sample(numkit::Rng& rng) const
{
    return mean + std.cwiseProduct(rng.normal_vector(mean.size()));
}

void write_csv(std::ostream& out, const OptimizationTrace& trace)
{
    out << "step,surrogate_value,true_value,policy_mean_norm\n";
    char buf[160];
    for (const auto& r : trace.records) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", r.step, r.surrogate_value,
                      r.true_value, r.mean.norm());
        out << buf;
    }
}

Design best_in_dataset(const Dataset& data)
{
    if (data.size() < 1)
        throw std::invalid_argument("best_in_dataset: empty dataset");
    Eigen::Index best = 0;
    for (Eigen::Index r = 1; r < data.size(); ++r)
        if (data.y(r) > data.y(best))
            best = r;
    return {data.X.row(best).transpose(), data.y(best), best};
}

namespace {

Design exhaustive_argmax(const SurrogateFn& model, const Space& space)
{
    const int d = space.d;
    Vector x = Vector::Zero(d);
    Design best{x, model(x), -1};
    for (;;) {
        // Odometer with the last coordinate fastest: lexicographic order, so a
        // strict comparison keeps the smallest maximiser.
        int k = d - 1;
        for (; k >= 0; --k) {
            if (x(k) + 1 < space.categories[static_cast<std::size_t>(k)]) {
                x(k) += 1;
                break;
            }
            x(k) = 0;
        }
        if (k < 0)
            break;
        const double v = model(x);
        if (v > best.value) {
            best.x = x;
            best.value = v;
        }
    }
    return best;
}

Design coordinate_ascent(const SurrogateFn& model, const Space& space, const ArgmaxOptions& opt)
{
    numkit::Rng rng(opt.seed);
    const int d = space.d;
    Design best{Vector(), -std::numeric_limits<double>::infinity(), -1};
    for (int restart = 0; restart < std::max(1, opt.restarts); ++restart) {
        Vector x(d);
        for (int k = 0; k < d; ++k)
            x(k) = static_cast<double>(
                rng.below(static_cast<std::uint64_t>(space.categories[static_cast<std::size_t>(k)])));
        double value = model(x);
        for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
            bool improved = false;
            for (int k = 0; k < d; ++k) {
                const double keep = x(k);
                double best_level = keep;
                for (int level = 0; level < space.categories[static_cast<std::size_t>(k)]; ++level) {
                    if (level == keep)
                        continue;
                    x(k) = level;
                    const double v = model(x);
                    if (v > value) {
                        value = v;
                        best_level = level;
                        improved = true;
                    }
                }
                x(k) = best_level;
            }
            if (!improved)
                break;
        }
        if (value > best.value || (value == best.value && std::lexicographical_compare(
                                                              x.begin(), x.end(),
                                                              best.x.begin(), best.x.end()))) {
            best.x = x;
            best.value = value;
        }
    }
    return best;
}

}  // namespace

Design argmax_discrete(const SurrogateFn& model, const Space& space, const ArgmaxOptions& options)
{
    if (!space.is_discrete())
        throw std::invalid_argument("argmax_discrete: space is not discrete");
    const bool fits = space.cardinality() <= ArgmaxOptions::kExhaustiveLimit;
    switch (options.mode) {
    case ArgmaxMode::Exhaustive:
        if (!fits)
            throw std::invalid_argument("argmax_discrete: space of " +
                                        std::to_string(space.cardinality()) +
                                        " points is too large for exhaustive search");
        return exhaustive_argmax(model, space);
    case ArgmaxMode::CoordinateAscent:
        return coordinate_ascent(model, space, options);
    case ArgmaxMode::Auto:
        return fits ? exhaustive_argmax(model, space) : coordinate_ascent(model, space, options);
    }
    throw std::logic_error("argmax_discrete: unknown mode");
}

Design argmax_discrete(const surrogate::OneHotCliqueModel& model, const ArgmaxOptions& options)
{
    return argmax_discrete([&model](const Vector& x) { return model.predict(x); },
                           Space::discrete(model.categories()), options);
}

DifferentiableSurrogate as_differentiable(const surrogate::MaskedMlpModel& model)
{
    return {[&model](const Vector& x) { return model.predict(x); },
            [&model](const Vector& x) { return model.gradient(x); }};
}

AscentResult ascend_policy(const DifferentiableSurrogate& model, const GaussianPolicy& init,
                           const AscentOptions& options, numkit::Rng& rng,
                           const AscentHooks& hooks)
{
    if (options.steps < 1)
        throw std::invalid_argument("ascend_policy: steps must be at least 1");
    if (!(options.lr >= 0.0))
        throw std::invalid_argument("ascend_policy: lr must be nonnegative");
    if (options.batch < 1 || options.eval_samples < 1)
        throw std::invalid_argument("ascend_policy: batch and eval_samples must be positive");
    const int d = init.dimension();
    if (init.std.size() != d)
        throw std::invalid_argument("ascend_policy: mean and std differ in length");

    GaussianPolicy policy = init;
    policy.std = policy.std.cwiseMax(GaussianPolicy::kStdFloor);
    Vector log_std = policy.std.array().log();

    numkit::Rng eval_rng = rng.split(0xE7A1);
    std::vector<Vector> eval_noise;
    for (int k = 0; k < options.eval_samples; ++k)
        eval_noise.push_back(eval_rng.normal_vector(d));

    AscentResult result;
    auto record = [&](int step) {
        TraceRecord r;
        r.step = step;
        r.mean = policy.mean;
        double surrogate_total = 0.0, true_total = 0.0;
        int valid = 0;
        for (const auto& eps : eval_noise) {
            const Vector x = policy.mean + policy.std.cwiseProduct(eps);
            surrogate_total += model.value(x);
            if (hooks.oracle) {
                const Vector xo = hooks.to_oracle_space ? hooks.to_oracle_space(x) : x;
                if (!hooks.valid || hooks.valid(xo)) {
                    true_total += hooks.oracle(xo);
                    ++valid;
                }
            }
        }
        r.surrogate_value = surrogate_total / static_cast<double>(eval_noise.size());
        r.true_value = valid > 0 ? true_total / valid : std::numeric_limits<double>::quiet_NaN();
        if (hooks.oracle)
            r.valid_fraction = static_cast<double>(valid) / static_cast<double>(eval_noise.size());
        result.trace.records.push_back(std::move(r));
    };

    record(0);
    for (int step = 0; step < options.steps; ++step) {
        Vector grad_mean = Vector::Zero(d);
        Vector grad_log_std = Vector::Zero(d);
        for (int b = 0; b < options.batch; ++b) {
            const Vector eps = rng.normal_vector(d);
            const Vector x = policy.mean + policy.std.cwiseProduct(eps);
            const Vector g = model.gradient(x);
            grad_mean += g;
            grad_log_std += g.cwiseProduct(eps).cwiseProduct(policy.std);
        }
        grad_mean /= options.batch;
        grad_log_std /= options.batch;
        if (!grad_mean.allFinite() || !grad_log_std.allFinite())
            throw std::runtime_error("ascend_policy: non-finite gradient at step " +
                                     std::to_string(step));
        policy.mean += options.lr * grad_mean;
        if (options.learn_std) {
            log_std += options.lr * grad_log_std;
            log_std = log_std.cwiseMax(std::log(GaussianPolicy::kStdFloor));
            policy.std = log_std.array().exp();
        }
        record(step + 1);
    }
    result.policy = std::move(policy);
    return result;
}

GaussianPolicy rwr_baseline(const Dataset& data, double temperature)
{
    if (!(temperature > 0.0))
        throw std::invalid_argument("rwr_baseline: temperature must be positive");
    if (data.size() < 1)
        throw std::invalid_argument("rwr_baseline: empty dataset");
    const double top = data.y.maxCoeff();
    const Vector w = ((data.y.array() - top) / temperature).exp();
    const double total = w.sum();
    GaussianPolicy policy;
    policy.mean = (data.X.transpose() * w) / total;
    const DenseMatrix centered = data.X.rowwise() - policy.mean.transpose();
    const Vector var = (centered.array().square().matrix().transpose() * w) / total;
    policy.std = var.cwiseSqrt().cwiseMax(GaussianPolicy::kStdFloor);
    return policy;
}

double regret(const Vector& design, const bench::Benchmark& bench)
{
    if (!bench.optimum)
        throw std::invalid_argument("regret: benchmark has no known optimum");
    return bench.optimum->value - bench.evaluate(design);
}

double regret(const GaussianPolicy& policy, const bench::Benchmark& bench, int samples,
              std::uint64_t seed)
{
    if (!bench.optimum)
        throw std::invalid_argument("regret: benchmark has no known optimum");
    if (samples < 1)
        throw std::invalid_argument("regret: samples must be positive");
    numkit::Rng rng(seed);
    double total = 0.0;
    for (int k = 0; k < samples; ++k)
        total += bench.evaluate(policy.sample(rng));
    return bench.optimum->value - total / samples;
}

}  // namespace fgmopt::optimize
