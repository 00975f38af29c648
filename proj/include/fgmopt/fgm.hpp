#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "fgmopt/numkit.hpp"

namespace fgmopt::fgm {

using Clique = std::vector<int>;
using Edge = std::pair<int, int>;

/// Undirected simple graph over variable indices 0..d-1.
class FgmGraph {
public:
    FgmGraph() = default;
    explicit FgmGraph(int d);
    FgmGraph(int d, const std::vector<Edge>& edges);

    static FgmGraph complete(int d);
    /// Union of all within-clique pairs.
    static FgmGraph from_cliques(int d, const std::vector<Clique>& cliques);

    int dimension() const { return d_; }
    void add_edge(int i, int j);
    void remove_edge(int i, int j);
    bool has_edge(int i, int j) const;
    /// Edges as (i, j) with i < j, sorted.
    std::vector<Edge> edges() const;
    std::size_t edge_count() const;
    std::vector<int> neighbours(int i) const;

    friend bool operator==(const FgmGraph&, const FgmGraph&) = default;

private:
    void check_pair(int i, int j) const;

    int d_ = 0;
    std::vector<std::uint8_t> adjacency_;  // d x d, symmetric
};

/// |E_a symmetric-difference E_b| / (d (d - 1) / 2).
double normalized_ged(const FgmGraph& a, const FgmGraph& b);

/// Plain-text edge list: header "d=<n>" then one "i j" pair per line.
void write_edge_list(std::ostream& out, const FgmGraph& g);
FgmGraph read_edge_list(std::istream& in);

/// Maximal cliques of a graph; isolated vertices appear as singletons.
struct CliqueSet {
    int d = 0;
    std::vector<Clique> cliques;

    std::size_t size() const { return cliques.size(); }
    const Clique& operator[](std::size_t i) const { return cliques[i]; }
    auto begin() const { return cliques.begin(); }
    auto end() const { return cliques.end(); }
    std::size_t max_clique_size() const;

    friend bool operator==(const CliqueSet&, const CliqueSet&) = default;
};

/// Bron-Kerbosch with Tomita pivoting; output sorted lexicographically.
CliqueSet maximal_cliques(const FgmGraph& g);

/// Validates a user-supplied clique list over d variables (sorted, in range,
/// no duplicates within a clique) and returns it in canonical order.
CliqueSet make_clique_set(int d, std::vector<Clique> cliques);

using ScalarFunction = std::function<double(const Vector&)>;

struct IndependenceOptions {
    double step = 1e-3;
    double tolerance = 1e-4;  // relative to max(1, |f(x)|)
};

/// Central-difference estimate of d^2 f / dx_i dx_j at x.
double mixed_partial(const ScalarFunction& f, const Vector& x, int i, int j, double h);

/// True iff the mixed partial in (i, j) vanishes (within tolerance) at every probe.
bool independence_test(const ScalarFunction& f, int i, int j, const std::vector<Vector>& probes,
                       const IndependenceOptions& options = {});

FgmGraph recover_graph_from_oracle(const ScalarFunction& f, int d,
                                   const std::vector<Vector>& probes,
                                   const IndependenceOptions& options = {});

/// Standard-normal probe points.
std::vector<Vector> normal_probes(int d, int count, numkit::Rng& rng);

/// f(x) = sum over cliques of f_C(x_C); each component receives only its
/// clique's coordinates, in clique order.
class DecomposedFunction {
public:
    DecomposedFunction(CliqueSet cliques, std::vector<ScalarFunction> components);

    const CliqueSet& cliques() const { return cliques_; }
    int dimension() const { return cliques_.d; }
    double component(std::size_t c, const Vector& x) const;
    double operator()(const Vector& x) const;

private:
    CliqueSet cliques_;
    std::vector<ScalarFunction> components_;
};

double eval_decomposed(const DecomposedFunction& df, const Vector& x);

Vector gather(const Vector& x, const Clique& clique);

}  // namespace fgmopt::fgm
