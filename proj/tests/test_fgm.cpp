#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fgmopt/fgm.hpp"
#include "oracles.hpp"

using namespace fgmopt;
using fgm::Clique;
using fgm::FgmGraph;

namespace {

FgmGraph random_graph(int d, double density, numkit::Rng& rng)
{
    FgmGraph g(d);
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j)
            if (rng.uniform() < density)
                g.add_edge(i, j);
    return g;
}

fgm::CliqueSet fig1_cliques()
{
    return fgm::make_clique_set(7, {{0, 1, 2}, {2, 3, 4}, {4, 5, 6}});
}

// Pairwise products within a clique plus a smooth per-variable term.
double clique_quadratic(const Vector& z)
{
    double total = 0.0;
    for (Eigen::Index a = 0; a < z.size(); ++a) {
        total += std::sin(z(a));
        for (Eigen::Index b = a + 1; b < z.size(); ++b)
            total += z(a) * z(b);
    }
    return total;
}

fgm::DecomposedFunction fig1_function()
{
    return fgm::DecomposedFunction(fig1_cliques(), {clique_quadratic, clique_quadratic, clique_quadratic});
}

// Random smooth component: sum of tanh ridges over the clique coordinates.
fgm::ScalarFunction random_component(int size, numkit::Rng& rng)
{
    const Matrix W = rng.normal_matrix(3, size);
    const Vector b = rng.normal_vector(3);
    const Vector a = rng.normal_vector(3);
    return [W, b, a](const Vector& z) {
        return a.dot((W * z + b).array().tanh().matrix());
    };
}

fgm::DecomposedFunction random_decomposed(numkit::Rng& rng)
{
    const int d = 2 + static_cast<int>(rng.below(6));
    std::vector<Clique> cliques;
    const int count = 1 + static_cast<int>(rng.below(4));
    for (int c = 0; c < count; ++c) {
        Clique clique;
        for (int v = 0; v < d; ++v)
            if (rng.uniform() < 0.4)
                clique.push_back(v);
        if (clique.empty())
            clique.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(d))));
        cliques.push_back(clique);
    }
    auto set = fgm::make_clique_set(d, cliques);
    std::vector<fgm::ScalarFunction> components;
    for (const auto& c : set)
        components.push_back(random_component(static_cast<int>(c.size()), rng));
    return fgm::DecomposedFunction(set, components);
}

}  // namespace

TEST_CASE("graph basics")
{
    FgmGraph g(4);
    g.add_edge(2, 0);
    g.add_edge(1, 3);
    CHECK(g.has_edge(0, 2));
    CHECK(g.has_edge(2, 0));
    CHECK(g.edge_count() == 2);
    CHECK(g.edges() == std::vector<fgm::Edge>{{0, 2}, {1, 3}});
    CHECK_THROWS_AS(g.add_edge(1, 1), std::invalid_argument);
    CHECK_THROWS_AS(g.add_edge(0, 4), std::out_of_range);
    g.remove_edge(0, 2);
    CHECK_FALSE(g.has_edge(0, 2));
    CHECK(FgmGraph::complete(5).edge_count() == 10);
}

TEST_CASE("normalized ged")
{
    const FgmGraph empty(5);
    CHECK(fgm::normalized_ged(empty, empty) == 0.0);
    CHECK(fgm::normalized_ged(empty, FgmGraph::complete(5)) == 1.0);
    FgmGraph one(5);
    one.add_edge(1, 4);
    CHECK(fgm::normalized_ged(empty, one) == doctest::Approx(0.1));
    CHECK_THROWS(fgm::normalized_ged(empty, FgmGraph(4)));
}

TEST_CASE("edge list round trip")
{
    numkit::Rng rng(4);
    const FgmGraph g = random_graph(9, 0.4, rng);
    std::stringstream buffer;
    fgm::write_edge_list(buffer, g);
    CHECK(buffer.str().rfind("d=9\n", 0) == 0);
    CHECK(fgm::read_edge_list(buffer) == g);

    std::istringstream bad("d=3\n0 x\n");
    CHECK_THROWS_WITH(fgm::read_edge_list(bad), doctest::Contains("line"));
}

TEST_CASE("maximal cliques examples")
{
    const FgmGraph path(3, {{0, 1}, {1, 2}});
    CHECK(fgm::maximal_cliques(path).cliques == std::vector<Clique>{{0, 1}, {1, 2}});

    const auto fig1 = FgmGraph::from_cliques(7, fig1_cliques().cliques);
    CHECK(fgm::maximal_cliques(fig1).cliques == std::vector<Clique>{{0, 1, 2}, {2, 3, 4}, {4, 5, 6}});

    CHECK(fgm::maximal_cliques(FgmGraph::complete(4)).cliques == std::vector<Clique>{{0, 1, 2, 3}});

    const FgmGraph sparse(4, {{0, 1}});
    CHECK(fgm::maximal_cliques(sparse).cliques == std::vector<Clique>{{0, 1}, {2}, {3}});
}

TEST_CASE("maximal cliques match brute force on every graph with d <= 5")
{
    for (int d = 1; d <= 5; ++d) {
        const int pairs = d * (d - 1) / 2;
        for (unsigned mask = 0; mask < (1u << pairs); ++mask) {
            FgmGraph g(d);
            int bit = 0;
            for (int i = 0; i < d; ++i)
                for (int j = i + 1; j < d; ++j, ++bit)
                    if (mask >> bit & 1u)
                        g.add_edge(i, j);
            REQUIRE(fgm::maximal_cliques(g).cliques == oracle::brute_force_maximal_cliques(g));
        }
    }
}

TEST_CASE("maximal cliques match brute force on graphs with d = 6 and 7")
{
    // d = 6 is exhaustive (2^15 graphs); d = 7 has 2^21 labelled graphs, so
    // every 7th mask is visited.
    for (int d = 6; d <= 7; ++d) {
        const int pairs = d * (d - 1) / 2;
        const unsigned stride = d == 6 ? 1u : 7u;
        for (unsigned mask = 0; mask < (1u << pairs); mask += stride) {
            FgmGraph g(d);
            int bit = 0;
            for (int i = 0; i < d; ++i)
                for (int j = i + 1; j < d; ++j, ++bit)
                    if (mask >> bit & 1u)
                        g.add_edge(i, j);
            REQUIRE(fgm::maximal_cliques(g).cliques == oracle::brute_force_maximal_cliques(g));
        }
    }
}

TEST_CASE("maximal cliques match brute force on 200 random graphs with d <= 12")
{
    numkit::Rng rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        const int d = 1 + static_cast<int>(rng.below(12));
        const FgmGraph g = random_graph(d, rng.uniform(0.1, 0.9), rng);
        const auto got = fgm::maximal_cliques(g);
        REQUIRE(got.cliques == oracle::brute_force_maximal_cliques(g));
        // Coverage of every vertex.
        std::vector<bool> seen(static_cast<std::size_t>(d), false);
        for (const auto& c : got)
            for (int v : c)
                seen[static_cast<std::size_t>(v)] = true;
        CHECK(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }));
    }
}

TEST_CASE("make_clique_set validation")
{
    CHECK(fgm::make_clique_set(4, {{2, 3}, {1, 0}}).cliques == std::vector<Clique>{{0, 1}, {2, 3}});
    CHECK_THROWS(fgm::make_clique_set(3, {{0, 0}}));
    CHECK_THROWS(fgm::make_clique_set(3, {{0, 3}}));
    CHECK_THROWS(fgm::make_clique_set(3, {{}}));
}

TEST_CASE("independence test examples")
{
    numkit::Rng rng(1);
    const auto probes = fgm::normal_probes(2, 16, rng);
    CHECK(fgm::independence_test([](const Vector& x) { return x(0) * x(0) + x(1) * x(1); }, 0, 1, probes));

    const std::vector<Vector> origin{Vector::Zero(2)};
    auto product = [](const Vector& x) { return x(0) * x(1); };
    CHECK_FALSE(fgm::independence_test(product, 0, 1, origin));
    CHECK(fgm::mixed_partial(product, Vector::Zero(2), 0, 1, 1e-3) == doctest::Approx(1.0).epsilon(1e-9));

    const auto f = fig1_function();
    auto fn = [&f](const Vector& x) { return f(x); };
    const auto probes7 = fgm::normal_probes(7, 16, rng);
    CHECK(fgm::independence_test(fn, 0, 5, probes7));
    CHECK_FALSE(fgm::independence_test(fn, 2, 3, probes7));

    CHECK_THROWS_AS(fgm::independence_test([](const Vector&) { return NAN; }, 0, 1, origin),
                    std::domain_error);
    CHECK_THROWS(fgm::independence_test(product, 1, 1, origin));
}

TEST_CASE("recover graph from oracle examples")
{
    numkit::Rng rng(2);
    const auto probes = fgm::normal_probes(4, 16, rng);
    auto additive = [](const Vector& x) {
        return std::sin(x(0)) + x(1) * x(1) + std::exp(0.3 * x(2)) + x(3);
    };
    CHECK(fgm::recover_graph_from_oracle(additive, 4, probes).edge_count() == 0);

    auto chain = [](const Vector& x) { return x(0) * x(1) + x(1) * x(2); };
    const auto probes3 = fgm::normal_probes(3, 16, rng);
    CHECK(fgm::recover_graph_from_oracle(chain, 3, probes3) == FgmGraph(3, {{0, 1}, {1, 2}}));

    const auto f = fig1_function();
    const auto probes7 = fgm::normal_probes(7, 16, rng);
    CHECK(fgm::recover_graph_from_oracle([&f](const Vector& x) { return f(x); }, 7, probes7) ==
          FgmGraph::from_cliques(7, fig1_cliques().cliques));
}

TEST_CASE("eval_decomposed examples")
{
    const auto singles = fgm::make_clique_set(2, {{0}, {1}});
    const fgm::DecomposedFunction zero(singles, {[](const Vector&) { return 0.0; },
                                                 [](const Vector&) { return 0.0; }});
    CHECK(fgm::eval_decomposed(zero, Vector{{5.0, -1.0}}) == 0.0);

    const fgm::DecomposedFunction linear(singles, {[](const Vector& z) { return z(0); },
                                                   [](const Vector& z) { return 2.0 * z(0); }});
    CHECK(fgm::eval_decomposed(linear, Vector{{3.0, 4.0}}) == 11.0);
    CHECK_THROWS(fgm::eval_decomposed(linear, Vector{{3.0, 4.0, 5.0}}));

    const auto f = fig1_function();
    numkit::Rng rng(6);
    for (int k = 0; k < 20; ++k) {
        const Vector x = rng.normal_vector(7);
        double direct = 0.0;
        for (const auto& [a, b, c] : {std::array{0, 1, 2}, std::array{2, 3, 4}, std::array{4, 5, 6}})
            direct += std::sin(x(a)) + std::sin(x(b)) + std::sin(x(c)) + x(a) * x(b) + x(a) * x(c) +
                      x(b) * x(c);
        CHECK(std::abs(fgm::eval_decomposed(f, x) - direct) <= 1e-12);
    }
}

TEST_CASE("decomposed functions never gain cross-clique edges")
{
    numkit::Rng rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        const auto df = random_decomposed(rng);
        const int d = df.dimension();
        const auto probes = fgm::normal_probes(d, 16, rng);
        const auto recovered =
            fgm::recover_graph_from_oracle([&df](const Vector& x) { return df(x); }, d, probes);
        const auto allowed = FgmGraph::from_cliques(d, df.cliques().cliques);
        for (const auto& [i, j] : recovered.edges())
            CHECK(allowed.has_edge(i, j));
    }
}

TEST_CASE("eval_decomposed is linear in each component")
{
    numkit::Rng rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        const auto df = random_decomposed(rng);
        const double scale = rng.uniform(-3.0, 3.0);
        std::vector<fgm::ScalarFunction> scaled;
        for (std::size_t c = 0; c < df.cliques().size(); ++c) {
            if (c == 0)
                scaled.push_back([&df, scale](const Vector& z) {
                    Vector x = Vector::Zero(df.dimension());
                    for (std::size_t k = 0; k < df.cliques()[0].size(); ++k)
                        x(df.cliques()[0][k]) = z(static_cast<Eigen::Index>(k));
                    return scale * df.component(0, x);
                });
            else
                scaled.push_back([&df, c](const Vector& z) {
                    Vector x = Vector::Zero(df.dimension());
                    for (std::size_t k = 0; k < df.cliques()[c].size(); ++k)
                        x(df.cliques()[c][k]) = z(static_cast<Eigen::Index>(k));
                    return df.component(c, x);
                });
        }
        const fgm::DecomposedFunction g(df.cliques(), scaled);
        const Vector x = rng.normal_vector(df.dimension());
        const double expected = fgm::eval_decomposed(df, x) + (scale - 1.0) * df.component(0, x);
        CHECK(fgm::eval_decomposed(g, x) == doctest::Approx(expected).epsilon(1e-12));
    }
}
