#include "fgmopt/fgm.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace fgmopt::fgm {

FgmGraph::FgmGraph(int d) : d_(d)
{
    if (d < 0)
        throw std::invalid_argument("FgmGraph: negative dimension");
    adjacency_.assign(static_cast<std::size_t>(d) * d, 0);
}

FgmGraph::FgmGraph(int d, const std::vector<Edge>& edges) : FgmGraph(d)
{
    for (const auto& [i, j] : edges)
        add_edge(i, j);
}

FgmGraph FgmGraph::complete(int d)
{
    FgmGraph g(d);
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j)
            g.add_edge(i, j);
    return g;
}

FgmGraph FgmGraph::from_cliques(int d, const std::vector<Clique>& cliques)
{
    FgmGraph g(d);
    for (const auto& c : cliques)
        for (std::size_t a = 0; a < c.size(); ++a)
            for (std::size_t b = a + 1; b < c.size(); ++b)
                g.add_edge(c[a], c[b]);
    return g;
}

void FgmGraph::check_pair(int i, int j) const
{
    if (i < 0 || j < 0 || i >= d_ || j >= d_)
        throw std::out_of_range("FgmGraph: vertex index out of range");
    if (i == j)
        throw std::invalid_argument("FgmGraph: self-loops are not allowed");
}

void FgmGraph::add_edge(int i, int j)
{
    check_pair(i, j);
    adjacency_[static_cast<std::size_t>(i) * d_ + j] = 1;
    adjacency_[static_cast<std::size_t>(j) * d_ + i] = 1;
}

void FgmGraph::remove_edge(int i, int j)
{
    check_pair(i, j);
    adjacency_[static_cast<std::size_t>(i) * d_ + j] = 0;
    adjacency_[static_cast<std::size_t>(j) * d_ + i] = 0;
}

bool FgmGraph::has_edge(int i, int j) const
{
    if (i == j)
        return false;
    check_pair(i, j);
    return adjacency_[static_cast<std::size_t>(i) * d_ + j] != 0;
}

std::vector<Edge> FgmGraph::edges() const
{
    std::vector<Edge> out;
    for (int i = 0; i < d_; ++i)
        for (int j = i + 1; j < d_; ++j)
            if (has_edge(i, j))
                out.emplace_back(i, j);
    return out;
}

std::size_t FgmGraph::edge_count() const
{
    return static_cast<std::size_t>(std::count(adjacency_.begin(), adjacency_.end(), 1)) / 2;
}

std::vector<int> FgmGraph::neighbours(int i) const
{
    std::vector<int> out;
    for (int j = 0; j < d_; ++j)
        if (j != i && has_edge(i, j))
            out.push_back(j);
    return out;
}

double normalized_ged(const FgmGraph& a, const FgmGraph& b)
{
    if (a.dimension() != b.dimension())
        throw std::invalid_argument("normalized_ged: graphs have different dimensions");
    const int d = a.dimension();
    if (d < 2)
        return 0.0;
    int diff = 0;
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j)
            diff += a.has_edge(i, j) != b.has_edge(i, j);
    return static_cast<double>(diff) / (0.5 * d * (d - 1));
}

void write_edge_list(std::ostream& out, const FgmGraph& g)
{
    out << "d=" << g.dimension() << '\n';
    for (const auto& [i, j] : g.edges())
        out << i << ' ' << j << '\n';
}

FgmGraph read_edge_list(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || line.rfind("d=", 0) != 0)
        throw std::runtime_error("edge list: missing 'd=<n>' header");
    const int d = std::stoi(line.substr(2));
    FgmGraph g(d);
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        std::istringstream fields(line);
        int i = 0, j = 0;
        std::string rest;
        if (!(fields >> i >> j) || (fields >> rest))
            throw std::runtime_error("edge list: malformed pair on line " +
                                     std::to_string(lineno));
        g.add_edge(i, j);
    }
    return g;
}

std::size_t CliqueSet::max_clique_size() const
{
    std::size_t m = 0;
    for (const auto& c : cliques)
        m = std::max(m, c.size());
    return m;
}

namespace {

using VertexSet = std::vector<int>;  // sorted

VertexSet intersect(const VertexSet& a, const VertexSet& b)
{
    VertexSet out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

void bron_kerbosch(const std::vector<VertexSet>& adj, VertexSet& r, VertexSet p, VertexSet x,
                   std::vector<Clique>& out)
{
    if (p.empty() && x.empty()) {
        Clique c = r;
        std::sort(c.begin(), c.end());
        out.push_back(std::move(c));
        return;
    }
    // Pivot: vertex of P u X with the most neighbours in P.
    int pivot = -1;
    std::size_t best = 0;
    for (const auto* set : {&p, &x})
        for (int u : *set) {
            const std::size_t k = intersect(p, adj[u]).size();
            if (pivot < 0 || k > best) {
                pivot = u;
                best = k;
            }
        }
    VertexSet candidates;
    std::set_difference(p.begin(), p.end(), adj[pivot].begin(), adj[pivot].end(),
                        std::back_inserter(candidates));
    for (int v : candidates) {
        r.push_back(v);
        bron_kerbosch(adj, r, intersect(p, adj[v]), intersect(x, adj[v]), out);
        r.pop_back();
        p.erase(std::find(p.begin(), p.end(), v));
        x.insert(std::upper_bound(x.begin(), x.end(), v), v);
    }
}

}  // namespace

CliqueSet maximal_cliques(const FgmGraph& g)
{
    const int d = g.dimension();
    if (d < 1)
        throw std::invalid_argument("maximal_cliques: graph must have at least one vertex");
    std::vector<VertexSet> adj(d);
    for (int i = 0; i < d; ++i)
        adj[i] = g.neighbours(i);
    VertexSet p(d);
    for (int i = 0; i < d; ++i)
        p[i] = i;
    VertexSet r;
    CliqueSet out{d, {}};
    bron_kerbosch(adj, r, p, {}, out.cliques);
    std::sort(out.cliques.begin(), out.cliques.end());
    return out;
}

CliqueSet make_clique_set(int d, std::vector<Clique> cliques)
{
    if (d < 1)
        throw std::invalid_argument("make_clique_set: dimension must be positive");
    for (auto& c : cliques) {
        if (c.empty())
            throw std::invalid_argument("make_clique_set: empty clique");
        std::sort(c.begin(), c.end());
        if (std::adjacent_find(c.begin(), c.end()) != c.end())
            throw std::invalid_argument("make_clique_set: repeated index within a clique");
        if (c.front() < 0 || c.back() >= d)
            throw std::out_of_range("make_clique_set: clique references index " +
                                    std::to_string(c.front() < 0 ? c.front() : c.back()) +
                                    " outside 0.." + std::to_string(d - 1));
    }
    std::sort(cliques.begin(), cliques.end());
    return {d, std::move(cliques)};
}

double mixed_partial(const ScalarFunction& f, const Vector& x, int i, int j, double h)
{
    Vector pp = x, pm = x, mp = x, mm = x;
    pp(i) += h; pp(j) += h;
    pm(i) += h; pm(j) -= h;
    mp(i) -= h; mp(j) += h;
    mm(i) -= h; mm(j) -= h;
    const double fpp = f(pp), fpm = f(pm), fmp = f(mp), fmm = f(mm);
    if (!std::isfinite(fpp) || !std::isfinite(fpm) || !std::isfinite(fmp) ||
        !std::isfinite(fmm))
        throw std::domain_error("mixed_partial: function returned a non-finite value");
    return (fpp - fpm - fmp + fmm) / (4.0 * h * h);
}

bool independence_test(const ScalarFunction& f, int i, int j, const std::vector<Vector>& probes,
                       const IndependenceOptions& options)
{
    if (i == j)
        throw std::invalid_argument("independence_test: indices must differ");
    if (probes.empty())
        throw std::invalid_argument("independence_test: no probe points");
    if (!(options.step > 0.0))
        throw std::invalid_argument("independence_test: step must be positive");
    for (const auto& x : probes) {
        if (i < 0 || j < 0 || i >= x.size() || j >= x.size())
            throw std::out_of_range("independence_test: index outside probe dimension");
        const double fx = f(x);
        if (!std::isfinite(fx))
            throw std::domain_error("independence_test: function returned a non-finite value");
        const double est = mixed_partial(f, x, i, j, options.step);
        if (std::abs(est) > options.tolerance * std::max(1.0, std::abs(fx)))
            return false;
    }
    return true;
}

FgmGraph recover_graph_from_oracle(const ScalarFunction& f, int d,
                                   const std::vector<Vector>& probes,
                                   const IndependenceOptions& options)
{
    if (d < 2)
        throw std::invalid_argument("recover_graph_from_oracle: need at least two variables");
    FgmGraph g(d);
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j)
            if (!independence_test(f, i, j, probes, options))
                g.add_edge(i, j);
    return g;
}

std::vector<Vector> normal_probes(int d, int count, numkit::Rng& rng)
{
    std::vector<Vector> probes;
    probes.reserve(count);
    for (int k = 0; k < count; ++k)
        probes.push_back(rng.normal_vector(d));
    return probes;
}

Vector gather(const Vector& x, const Clique& clique)
{
    Vector out(static_cast<Eigen::Index>(clique.size()));
    for (std::size_t k = 0; k < clique.size(); ++k)
        out(static_cast<Eigen::Index>(k)) = x(clique[k]);
    return out;
}

DecomposedFunction::DecomposedFunction(CliqueSet cliques, std::vector<ScalarFunction> components)
    : cliques_(std::move(cliques)), components_(std::move(components))
{
    if (cliques_.size() != components_.size())
        throw std::invalid_argument("DecomposedFunction: one component per clique required");
}

double DecomposedFunction::component(std::size_t c, const Vector& x) const
{
    return components_.at(c)(gather(x, cliques_[c]));
}

double DecomposedFunction::operator()(const Vector& x) const
{
    if (x.size() != cliques_.d)
        throw std::invalid_argument("DecomposedFunction: input has dimension " +
                                    std::to_string(x.size()) + ", expected " +
                                    std::to_string(cliques_.d));
    double total = 0.0;
    for (std::size_t c = 0; c < components_.size(); ++c)
        total += component(c, x);
    return total;
}

double eval_decomposed(const DecomposedFunction& df, const Vector& x)
{
    return df(x);
}

}  // namespace fgmopt::fgm
