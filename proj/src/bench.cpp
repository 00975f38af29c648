#include "fgmopt/bench.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace fgmopt::bench {

double softplus(double z)
{
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double softplus_inverse(double u)
{
    if (!(u > 0.0))
        throw std::domain_error("softplus_inverse: argument must be positive");
    // log(exp(u) - 1) = u + log(1 - exp(-u))
    return u + std::log(-std::expm1(-u));
}

SoftplusMap SoftplusMap::make(double a, Matrix M, Vector b)
{
    if (!(a > 0.0))
        throw std::invalid_argument("SoftplusMap: scale a must be positive");
    if (M.rows() != M.cols() || M.rows() != b.size())
        throw std::invalid_argument("SoftplusMap: M must be square and match b");
    Eigen::FullPivLU<Matrix> lu(M);
    if (!lu.isInvertible())
        throw std::invalid_argument("SoftplusMap: M is singular");
    SoftplusMap map;
    map.a = a;
    map.M_inverse = lu.inverse();
    map.M = std::move(M);
    map.b = std::move(b);
    return map;
}

Vector SoftplusMap::forward(const Vector& x) const
{
    Vector z = M * x;
    for (Eigen::Index k = 0; k < z.size(); ++k)
        z(k) = a * softplus(z(k)) + b(k);
    return z;
}

DenseMatrix SoftplusMap::forward(const DenseMatrix& X) const
{
    DenseMatrix out(X.rows(), X.cols());
    for (Eigen::Index r = 0; r < X.rows(); ++r)
        out.row(r) = forward(Vector(X.row(r).transpose())).transpose();
    return out;
}

bool SoftplusMap::is_valid(const Vector& x_obs) const
{
    if (x_obs.size() != b.size())
        return false;
    for (Eigen::Index k = 0; k < x_obs.size(); ++k)
        if (!((x_obs(k) - b(k)) / a > 0.0))
            return false;
    return true;
}

Vector SoftplusMap::inverse(const Vector& x_obs) const
{
    if (x_obs.size() != b.size())
        throw std::invalid_argument("SoftplusMap::inverse: dimension mismatch");
    if (!is_valid(x_obs))
        throw std::domain_error("SoftplusMap::inverse: design lies outside the softplus image");
    Vector u(x_obs.size());
    for (Eigen::Index k = 0; k < u.size(); ++k)
        u(k) = softplus_inverse((x_obs(k) - b(k)) / a);
    return M_inverse * u;
}

double Benchmark::evaluate_latent(const Vector& x) const
{
    if (x.size() != space.d)
        throw std::invalid_argument("Benchmark: input has dimension " + std::to_string(x.size()) +
                                    ", expected " + std::to_string(space.d));
    switch (kind) {
    case BenchmarkKind::QuadraticCycle: {
        double total = 0.0;
        for (int i = 0; i < space.d; ++i)
            total += x(i) * x((i + 1) % space.d);
        return total;
    }
    case BenchmarkKind::RbfMixture: {
        double total = 0.0;
        for (std::size_t c = 0; c < cliques.size(); ++c) {
            const Vector diff = fgm::gather(x, cliques[c]) - centers[c];
            total += weights(static_cast<Eigen::Index>(c)) * std::exp(-diff.squaredNorm());
        }
        return total;
    }
    }
    throw std::logic_error("Benchmark: unknown kind");
}

double Benchmark::evaluate(const Vector& x) const
{
    if (transform)
        return evaluate_latent(transform->inverse(x));
    return evaluate_latent(x);
}

bool Benchmark::is_valid(const Vector& x) const
{
    if (transform)
        return transform->is_valid(x);
    if (x.size() != space.d)
        return false;
    if (space.is_discrete())
        for (int k = 0; k < space.d; ++k) {
            const double v = x(k);
            if (v != std::floor(v) || v < 0 || v >= space.categories[static_cast<std::size_t>(k)])
                return false;
        }
    return x.allFinite();
}

fgm::FgmGraph Benchmark::ground_truth() const
{
    return fgm::FgmGraph::from_cliques(space.d, cliques.cliques);
}

Benchmark gen_quadratic_cycle(int d)
{
    if (d < 3)
        throw std::invalid_argument("gen_quadratic_cycle: d must be at least 3");
    Benchmark b;
    b.kind = BenchmarkKind::QuadraticCycle;
    b.space = Space::binary(d);
    b.pattern = "cycle";
    fgm::FgmGraph cycle(d);
    for (int i = 0; i < d; ++i)
        cycle.add_edge(i, (i + 1) % d);
    b.cliques = fgm::maximal_cliques(cycle);
    b.optimum = KnownOptimum{Vector::Ones(d), static_cast<double>(d)};
    b.upper_bound = d;
    return b;
}

fgm::CliqueSet triangle_chain(int d)
{
    if (d < 3 || d % 2 == 0)
        throw std::invalid_argument("triangle_chain: d must be odd and at least 3");
    std::vector<fgm::Clique> cliques;
    for (int s = 0; s + 2 < d; s += 2)
        cliques.push_back({s, s + 1, s + 2});
    return fgm::make_clique_set(d, std::move(cliques));
}

fgm::CliqueSet overlapping_triangles()
{
    return fgm::make_clique_set(4, {{0, 1, 2}, {1, 2, 3}});
}

Benchmark gen_rbf_mixture(int d, const std::string& pattern, std::uint64_t seed,
                          std::optional<fgm::CliqueSet> custom)
{
    fgm::CliqueSet cliques;
    if (pattern == "triangle-chain") {
        cliques = triangle_chain(d);
    } else if (pattern == "overlapping-triangles") {
        if (d != 4)
            throw std::invalid_argument("gen_rbf_mixture: overlapping-triangles requires d = 4");
        cliques = overlapping_triangles();
    } else {
        if (!custom)
            throw std::invalid_argument("gen_rbf_mixture: unknown pattern '" + pattern +
                                        "' and no cliques given");
        cliques = fgm::make_clique_set(d, custom->cliques);
    }
    std::vector<bool> covered(static_cast<std::size_t>(d), false);
    for (const auto& c : cliques)
        for (int k : c)
            covered[static_cast<std::size_t>(k)] = true;
    if (std::find(covered.begin(), covered.end(), false) != covered.end())
        throw std::invalid_argument("gen_rbf_mixture: clique pattern does not cover every coordinate");

    Benchmark b;
    b.kind = BenchmarkKind::RbfMixture;
    b.space = Space::continuous(d);
    b.pattern = pattern;
    b.seed = seed;
    b.cliques = std::move(cliques);
    numkit::Rng rng(seed);
    const auto k = static_cast<Eigen::Index>(b.cliques.size());
    b.weights.resize(k);
    for (Eigen::Index c = 0; c < k; ++c)
        b.weights(c) = std::abs(rng.normal()) + 0.1;
    for (const auto& c : b.cliques)
        b.centers.push_back(rng.normal_vector(static_cast<Eigen::Index>(c.size())));
    b.upper_bound = b.weights.sum();
    return b;
}

Benchmark transform_observable(const Benchmark& base, std::uint64_t seed)
{
    if (base.space.is_discrete())
        throw std::invalid_argument("transform_observable: benchmark space is discrete");
    if (base.transform)
        throw std::invalid_argument("transform_observable: benchmark is already transformed");
    const int d = base.dimension();
    numkit::Rng rng(seed);
    const double a = rng.uniform(0.5, 2.0);
    Vector bias = rng.normal_vector(d);
    Matrix M;
    for (;;) {
        M = rng.normal_matrix(d, d) / std::sqrt(static_cast<double>(d));
        M += Matrix::Identity(d, d);
        Eigen::JacobiSVD<Matrix> svd(M);
        const auto& s = svd.singularValues();
        if (s(s.size() - 1) > 0.0 && s(0) / s(s.size() - 1) <= 20.0)
            break;
    }
    Benchmark out = base;
    out.transform = SoftplusMap::make(a, std::move(M), std::move(bias));
    out.transform_seed = seed;
    return out;
}

Dataset sample_dataset(const Benchmark& bench, Eigen::Index n, numkit::Rng& rng)
{
    if (n < 1)
        throw std::invalid_argument("sample_dataset: n must be positive");
    const int d = bench.dimension();
    Dataset data;
    data.X.resize(n, d);
    data.y.resize(n);
    if (bench.space.is_discrete()) {
        data.space = bench.space;
        for (Eigen::Index r = 0; r < n; ++r)
            for (int k = 0; k < d; ++k)
                data.X(r, k) = static_cast<double>(
                    rng.below(static_cast<std::uint64_t>(bench.space.categories[static_cast<std::size_t>(k)])));
        for (Eigen::Index r = 0; r < n; ++r)
            data.y(r) = bench.evaluate_latent(data.X.row(r).transpose());
        return data;
    }
    data.space = Space::continuous(d);
    for (Eigen::Index r = 0; r < n; ++r) {
        const Vector latent = rng.normal_vector(d);
        data.y(r) = bench.evaluate_latent(latent);
        const Vector x = bench.transform ? bench.transform->forward(latent) : latent;
        data.X.row(r) = x.transpose();
    }
    return data;
}

void write_manifest(std::ostream& out, const Benchmark& bench)
{
    out << "kind=" << (bench.kind == BenchmarkKind::QuadraticCycle ? "quadratic_cycle" : "rbf_mixture")
        << '\n';
    out << "d=" << bench.dimension() << '\n';
    out << "seed=" << bench.seed << '\n';
    out << "pattern=" << bench.pattern << '\n';
    out << "cliques=";
    for (std::size_t c = 0; c < bench.cliques.size(); ++c) {
        if (c)
            out << ';';
        for (std::size_t k = 0; k < bench.cliques[c].size(); ++k)
            out << (k ? " " : "") << bench.cliques[c][k];
    }
    out << '\n';
    if (bench.transform)
        out << "transform_seed=" << bench.transform_seed << '\n';
}

Benchmark read_manifest(std::istream& in)
{
    std::map<std::string, std::string> fields;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("manifest: malformed line '" + line + "'");
        fields[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto need = [&](const std::string& key) -> const std::string& {
        const auto it = fields.find(key);
        if (it == fields.end())
            throw std::runtime_error("manifest: missing key '" + key + "'");
        return it->second;
    };
    const int d = std::stoi(need("d"));
    const std::string& kind = need("kind");
    if (kind == "quadratic_cycle")
        return gen_quadratic_cycle(d);
    if (kind != "rbf_mixture")
        throw std::runtime_error("manifest: unknown kind '" + kind + "'");

    std::vector<fgm::Clique> cliques;
    std::istringstream groups(need("cliques"));
    std::string group;
    while (std::getline(groups, group, ';')) {
        std::istringstream members(group);
        fgm::Clique c;
        int k;
        while (members >> k)
            c.push_back(k);
        cliques.push_back(std::move(c));
    }
    Benchmark b = gen_rbf_mixture(d, need("pattern"), std::stoull(need("seed")),
                                  fgm::make_clique_set(d, std::move(cliques)));
    if (const auto it = fields.find("transform_seed"); it != fields.end())
        b = transform_observable(b, std::stoull(it->second));
    return b;
}

CoverageReport coverage_ratios(const Vector& pi, const Vector& p,
                               const std::vector<int>& categories,
                               const fgm::CliqueSet& cliques)
{
    const Space space = Space::discrete(categories);
    const std::uint64_t size = space.cardinality();
    if (size > (std::uint64_t{1} << 16))
        throw std::invalid_argument("coverage_ratios: space larger than 2^16 states");
    if (static_cast<std::uint64_t>(pi.size()) != size || static_cast<std::uint64_t>(p.size()) != size)
        throw std::invalid_argument("coverage_ratios: tables do not match the space size");
    if ((pi.array() < 0.0).any() || (p.array() < 0.0).any() || !pi.allFinite() || !p.allFinite())
        throw std::invalid_argument("coverage_ratios: tables must be finite and nonnegative");
    if (cliques.d != space.d)
        throw std::invalid_argument("coverage_ratios: cliques do not match the space");

    auto ratio = [](double num, double den) {
        if (num == 0.0)
            return 0.0;
        if (den == 0.0)
            return std::numeric_limits<double>::infinity();
        return num / den;
    };

    CoverageReport report;
    for (Eigen::Index s = 0; s < pi.size(); ++s)
        report.full_max = std::max(report.full_max, ratio(pi(s), p(s)));

    // Digits of each state, variable 0 most significant.
    const int d = space.d;
    std::vector<int> digits(static_cast<std::size_t>(d), 0);
    for (const auto& clique : cliques) {
        std::size_t configs = 1;
        for (int k : clique)
            configs *= static_cast<std::size_t>(categories[static_cast<std::size_t>(k)]);
        std::vector<double> pi_c(configs, 0.0), p_c(configs, 0.0);
        std::fill(digits.begin(), digits.end(), 0);
        for (Eigen::Index s = 0; s < pi.size(); ++s) {
            std::size_t idx = 0;
            for (int k : clique)
                idx = idx * static_cast<std::size_t>(categories[static_cast<std::size_t>(k)]) +
                      static_cast<std::size_t>(digits[static_cast<std::size_t>(k)]);
            pi_c[idx] += pi(s);
            p_c[idx] += p(s);
            for (int k = d - 1; k >= 0; --k) {
                auto& digit = digits[static_cast<std::size_t>(k)];
                if (++digit < categories[static_cast<std::size_t>(k)])
                    break;
                digit = 0;
            }
        }
        double m = 0.0;
        for (std::size_t i = 0; i < configs; ++i)
            m = std::max(m, ratio(pi_c[i], p_c[i]));
        report.clique_max.push_back(m);
        report.clique_wise_max = std::max(report.clique_wise_max, m);
    }
    // Marginal ratios are weighted averages of full-space ratios; allow only
    // floating-point rounding in the summation.
    if (report.clique_wise_max > report.full_max * (1.0 + 1e-12))
        throw std::logic_error("coverage_ratios: clique-wise ratio exceeds full-space ratio");
    return report;
}

CorrelationReport clique_correlation(const std::vector<Component>& components,
                                     const Eigen::Ref<const DenseMatrix>& samples)
{
    const auto k = static_cast<Eigen::Index>(components.size());
    const Eigen::Index n = samples.rows();
    if (n < 2)
        throw std::invalid_argument("clique_correlation: need at least 2 samples");
    if (k < 2)
        throw std::invalid_argument("clique_correlation: need at least 2 cliques");
    Matrix values(n, k);
    for (Eigen::Index r = 0; r < n; ++r) {
        const Vector x = samples.row(r).transpose();
        for (Eigen::Index c = 0; c < k; ++c)
            values(r, c) = components[static_cast<std::size_t>(c)](x);
    }
    const Matrix centered = values.rowwise() - values.colwise().mean();
    const Matrix cov = centered.transpose() * centered / static_cast<double>(n - 1);
    CorrelationReport report;
    report.correlation = Matrix::Identity(k, k);
    report.degenerate.assign(static_cast<std::size_t>(k), false);
    for (Eigen::Index c = 0; c < k; ++c)
        report.degenerate[static_cast<std::size_t>(c)] = !(cov(c, c) > 0.0);
    for (Eigen::Index a = 0; a < k; ++a)
        for (Eigen::Index b = a + 1; b < k; ++b) {
            double rho = 0.0;
            if (!report.degenerate[static_cast<std::size_t>(a)] &&
                !report.degenerate[static_cast<std::size_t>(b)])
                rho = std::clamp(cov(a, b) / std::sqrt(cov(a, a) * cov(b, b)), -1.0, 1.0);
            report.correlation(a, b) = report.correlation(b, a) = rho;
            report.max_off_diagonal = std::max(report.max_off_diagonal, std::abs(rho));
        }
    return report;
}

CorrelationReport clique_correlation(const surrogate::OneHotCliqueModel& model,
                                     const Eigen::Ref<const DenseMatrix>& samples)
{
    std::vector<Component> components;
    for (std::size_t c = 0; c < model.cliques().size(); ++c)
        components.push_back([&model, c](const Vector& x) { return model.component(c, x); });
    return clique_correlation(components, samples);
}

CorrelationReport clique_correlation(const surrogate::MaskedMlpModel& model,
                                     const Eigen::Ref<const DenseMatrix>& samples)
{
    std::vector<Component> components;
    for (std::size_t c = 0; c < model.cliques().size(); ++c)
        components.push_back([&model, c](const Vector& x) { return model.component(c, x); });
    return clique_correlation(components, samples);
}

}  // namespace fgmopt::bench
