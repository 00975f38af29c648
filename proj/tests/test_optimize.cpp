#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fgmopt/bench.hpp"
#include "fgmopt/optimize.hpp"
#include "fgmopt/surrogate.hpp"

using namespace fgmopt;
using optimize::GaussianPolicy;

namespace {

/// One-hot model whose table encodes the quadratic cycle exactly.
surrogate::OneHotCliqueModel cycle_model(int d)
{
    const auto bench = bench::gen_quadratic_cycle(d);
    surrogate::OneHotCliqueModel model(bench.cliques, std::vector<int>(d, 2));
    for (std::size_t c = 0; c < bench.cliques.size(); ++c)
        model.theta(model.clique_offset(c) + 3) = 1.0;
    return model;
}

/// Visits every point of a mixed-radix space in lexicographic order.
template <class F>
void for_each_point(const std::vector<int>& categories, F&& visit)
{
    const int d = static_cast<int>(categories.size());
    Vector x = Vector::Zero(d);
    for (;;) {
        visit(x);
        int k = d - 1;
        while (k >= 0 && x(k) + 1 >= categories[static_cast<std::size_t>(k)])
            x(k--) = 0;
        if (k < 0)
            return;
        x(k) += 1;
    }
}

optimize::DifferentiableSurrogate neg_square_norm()
{
    return {[](const Vector& x) { return -x.squaredNorm(); },
            [](const Vector& x) -> Vector { return -2.0 * x; }};
}

}  // namespace

TEST_CASE("best_in_dataset examples")
{
    Dataset single{DenseMatrix::Constant(1, 2, 0.5), Vector::Constant(1, -4.0), Space::continuous(2)};
    const auto one = optimize::best_in_dataset(single);
    CHECK(one.row == 0);
    CHECK(one.value == -4.0);

    Dataset three{DenseMatrix(3, 1), Vector{{1.0, 3.0, 2.0}}, Space::continuous(1)};
    three.X << 10, 20, 30;
    const auto best = optimize::best_in_dataset(three);
    CHECK(best.row == 1);
    CHECK(best.value == 3.0);
    CHECK(best.x(0) == 20.0);

    three.y << 5.0, 1.0, 5.0;
    CHECK(optimize::best_in_dataset(three).row == 0);
}

TEST_CASE("best_in_dataset on the 12-d quadratic cycle finds the optimum at the binomial rate")
{
    // P(some row is all-ones) = 1 - (1 - 2^-12)^1000.
    const double p = 1.0 - std::pow(1.0 - std::ldexp(1.0, -12), 1000.0);
    CHECK(p == doctest::Approx(0.217).epsilon(0.01));
    const auto bench = bench::gen_quadratic_cycle(12);
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        numkit::Rng rng(seed);
        const auto data = bench::sample_dataset(bench, 1000, rng);
        if (optimize::best_in_dataset(data).value == 12.0)
            ++hits;
    }
    CHECK(std::abs(hits / 50.0 - p) <= 0.15);
}

TEST_CASE("argmax examples")
{
    const Space space = Space::discrete({3, 2, 4});
    const auto flat = optimize::argmax_discrete([](const Vector&) { return 1.5; }, space);
    CHECK(flat.x == Vector::Zero(3));
    CHECK(flat.value == 1.5);

    const auto cycle = optimize::argmax_discrete(cycle_model(4));
    CHECK(cycle.x == Vector::Ones(4));
    CHECK(cycle.value == doctest::Approx(4.0).epsilon(1e-12));

    // Brute force over the 16 binary inputs of the true objective.
    const auto bench = bench::gen_quadratic_cycle(4);
    double top = -INFINITY;
    int maximisers = 0;
    for_each_point({2, 2, 2, 2}, [&](const Vector& x) {
        const double v = bench.evaluate(x);
        if (v > top) {
            top = v;
            maximisers = 1;
        } else if (v == top) {
            ++maximisers;
        }
    });
    CHECK(top == 4.0);
    CHECK(maximisers == 1);
}

TEST_CASE("argmax rejects continuous and oversize spaces")
{
    auto zero = [](const Vector&) { return 0.0; };
    CHECK_THROWS(optimize::argmax_discrete(zero, Space::continuous(3)));
    optimize::ArgmaxOptions exhaustive;
    exhaustive.mode = optimize::ArgmaxMode::Exhaustive;
    CHECK_THROWS_WITH(optimize::argmax_discrete(zero, Space::binary(21), exhaustive),
                      doctest::Contains("too large"));
    CHECK_NOTHROW(optimize::argmax_discrete(zero, Space::binary(21)));
}

TEST_CASE("coordinate ascent finds the quadratic-cycle optimum from random starts")
{
    const auto model = cycle_model(4);
    int hits = 0;
    for (std::uint64_t trial = 0; trial < 100; ++trial) {
        optimize::ArgmaxOptions opt;
        opt.mode = optimize::ArgmaxMode::CoordinateAscent;
        opt.restarts = 8;
        opt.seed = trial;
        if (optimize::argmax_discrete(model, opt).x == Vector::Ones(4))
            ++hits;
    }
    CHECK(hits >= 95);
}

TEST_CASE("exhaustive argmax equals brute force; coordinate ascent never exceeds it")
{
    numkit::Rng rng(7);
    for (int trial = 0; trial < 60; ++trial) {
        const int d = 2 + static_cast<int>(rng.below(5));
        std::vector<int> categories(static_cast<std::size_t>(d));
        for (auto& c : categories)
            c = 2 + static_cast<int>(rng.below(3));
        std::vector<fgm::Clique> cl;
        for (int k = 0; k + 1 < d; ++k)
            cl.push_back({k, k + 1});
        surrogate::OneHotCliqueModel model(fgm::make_clique_set(d, cl), categories);
        model.theta = rng.normal_vector(static_cast<Eigen::Index>(model.feature_count()));
        if (trial % 4 == 0)
            model.theta = model.theta.array().round();  // force ties

        Vector arg;
        double top = -INFINITY;
        for_each_point(categories, [&](const Vector& x) {
            const double v = model.predict(x);
            if (v > top) {
                top = v;
                arg = x;
            }
        });

        optimize::ArgmaxOptions exhaustive;
        exhaustive.mode = optimize::ArgmaxMode::Exhaustive;
        const auto ex = optimize::argmax_discrete(model, exhaustive);
        CHECK(ex.value == top);
        CHECK(ex.x == arg);
        CHECK(optimize::argmax_discrete(model, exhaustive).x == ex.x);

        optimize::ArgmaxOptions ca;
        ca.mode = optimize::ArgmaxMode::CoordinateAscent;
        ca.seed = static_cast<std::uint64_t>(trial);
        const auto local = optimize::argmax_discrete(model, ca);
        CHECK(local.value <= ex.value);
        // Local optimality: no single-coordinate change improves.
        for (int k = 0; k < d; ++k)
            for (int level = 0; level < categories[static_cast<std::size_t>(k)]; ++level) {
                Vector x = local.x;
                x(k) = level;
                CHECK(model.predict(x) <= local.value);
            }
    }
}

TEST_CASE("ascend_policy on -|x|^2 converges toward the origin")
{
    GaussianPolicy init{Vector::Constant(3, 4.0), Vector::Constant(3, 0.3)};
    optimize::AscentOptions opt;
    opt.steps = 500;
    opt.lr = 0.05;
    opt.batch = 16;
    opt.learn_std = false;
    numkit::Rng rng(1);
    const auto result = optimize::ascend_policy(neg_square_norm(), init, opt, rng);
    CHECK(result.policy.mean.norm() <= 0.1);
    CHECK(result.policy.std == init.std);
    CHECK(result.trace.records.size() == 501);
    CHECK(result.trace.records.back().surrogate_value > result.trace.records.front().surrogate_value);
    // Without sampling noise the mean contracts by (1 - 2 lr) per step.
    CHECK(result.trace.records[10].mean.norm() <=
          4.0 * std::sqrt(3.0) * std::pow(0.9, 10) + 0.1);
}

TEST_CASE("zero model and zero learning rate leave the policy unchanged")
{
    GaussianPolicy init{Vector{{0.5, -1.0}}, Vector{{0.2, 0.7}}};
    optimize::DifferentiableSurrogate zero{[](const Vector&) { return 0.0; },
                                           [](const Vector& x) -> Vector { return Vector::Zero(x.size()); }};
    numkit::Rng rng(2);
    const auto a = optimize::ascend_policy(zero, init, {}, rng);
    CHECK(a.policy.mean == init.mean);
    CHECK((a.policy.std - init.std).norm() <= 1e-15);

    optimize::AscentOptions opt;
    opt.lr = 0.0;
    opt.steps = 20;
    const auto b = optimize::ascend_policy(neg_square_norm(), init, opt, rng);
    CHECK(b.policy.mean == init.mean);
    for (const auto& r : b.trace.records)
        CHECK(r.surrogate_value == b.trace.records.front().surrogate_value);
}

TEST_CASE("ascend_policy errors")
{
    GaussianPolicy init{Vector::Zero(2), Vector::Ones(2)};
    numkit::Rng rng(3);
    optimize::DifferentiableSurrogate blowup{
        [](const Vector&) { return 0.0; },
        [](const Vector& x) -> Vector { return Vector::Constant(x.size(), NAN); }};
    CHECK_THROWS_WITH(optimize::ascend_policy(blowup, init, {}, rng),
                      doctest::Contains("non-finite gradient at step 0"));

    optimize::AscentOptions none;
    none.steps = 0;
    CHECK_THROWS(optimize::ascend_policy(neg_square_norm(), init, none, rng));
}

TEST_CASE("ascent trace oracle hooks and csv")
{
    GaussianPolicy init{Vector::Zero(2), Vector::Ones(2)};
    optimize::AscentOptions opt;
    opt.steps = 3;
    opt.eval_samples = 400;
    numkit::Rng rng(4);
    optimize::AscentHooks hooks;
    hooks.oracle = [](const Vector& x) { return x(0); };
    hooks.valid = [](const Vector& x) { return x(0) > 0.0; };
    const auto result = optimize::ascend_policy(neg_square_norm(), init, opt, rng, hooks);
    const auto& first = result.trace.records.front();
    CHECK(first.valid_fraction == doctest::Approx(0.5).epsilon(0.15));
    CHECK(first.true_value > 0.0);

    std::ostringstream csv;
    optimize::write_csv(csv, result.trace);
    std::istringstream lines(csv.str());
    std::string header;
    std::getline(lines, header);
    CHECK(header == "step,surrogate_value,true_value,policy_mean_norm");
    int rows = 0;
    for (std::string line; std::getline(lines, line);)
        ++rows;
    CHECK(rows == 4);

    numkit::Rng no_oracle(5);
    const auto bare = optimize::ascend_policy(neg_square_norm(), init, opt, no_oracle);
    CHECK(std::isnan(bare.trace.records.front().true_value));
}

TEST_CASE("rwr baseline limits and example")
{
    Dataset two{DenseMatrix(2, 1), Vector{{0.0, 1.0}}, Space::continuous(1)};
    two.X << 0.0, 2.0;
    const auto p = optimize::rwr_baseline(two, 1.0);
    CHECK(p.mean(0) == doctest::Approx(2.0 / (std::exp(-1.0) + 1.0)).epsilon(1e-12));
    CHECK(p.mean(0) == doctest::Approx(1.462).epsilon(1e-3));

    numkit::Rng rng(6);
    Dataset data{rng.normal_matrix(50, 3), rng.normal_vector(50), Space::continuous(3)};
    const auto hot = optimize::rwr_baseline(data, 1e6);
    CHECK((hot.mean - data.X.colwise().mean().transpose()).cwiseAbs().maxCoeff() <= 1e-3);
    const auto cold = optimize::rwr_baseline(data, 1e-6);
    const auto best = optimize::best_in_dataset(data);
    CHECK((cold.mean - best.x).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(cold.std.minCoeff() >= GaussianPolicy::kStdFloor);

    CHECK_THROWS(optimize::rwr_baseline(data, 0.0));
}

TEST_CASE("regret examples")
{
    const auto qc4 = bench::gen_quadratic_cycle(4);
    CHECK(optimize::regret(Vector::Ones(4), qc4) == 0.0);
    CHECK(optimize::regret(Vector::Zero(4), qc4) == 4.0);

    const auto qc8 = bench::gen_quadratic_cycle(8);
    CHECK(optimize::regret(Vector{{1, 0, 1, 0, 1, 0, 1, 0}}, qc8) == 8.0);

    // A point-mass policy has the point regret.
    GaussianPolicy point{Vector::Ones(4), Vector::Zero(4)};
    CHECK(optimize::regret(point, qc4) == 0.0);

    const auto rbf = bench::gen_rbf_mixture(5, "triangle-chain", 0);
    CHECK_THROWS_WITH(optimize::regret(Vector::Zero(5), rbf), doctest::Contains("known optimum"));
}

TEST_CASE("interpolating fgm argmax never loses to best-in-dataset on the quadratic cycle")
{
    for (int d : {4, 6, 8}) {
        const auto bench = bench::gen_quadratic_cycle(d);
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            numkit::Rng rng(seed);
            const auto data = bench::sample_dataset(bench, 300, rng);
            const auto model = surrogate::fit_onehot(data, bench.cliques, 1e-9);
            double worst = 0.0;
            for (Eigen::Index r = 0; r < data.size(); ++r)
                worst = std::max(worst, std::abs(model.predict(Vector(data.X.row(r).transpose())) - data.y(r)));
            if (worst > 1e-4)
                continue;
            const double fgm_regret = optimize::regret(optimize::argmax_discrete(model).x, bench);
            const double naive_regret = optimize::regret(optimize::best_in_dataset(data).x, bench);
            CHECK(fgm_regret >= 0.0);
            CHECK(naive_regret >= fgm_regret);
        }
    }
}
