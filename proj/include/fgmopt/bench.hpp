#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fgmopt/dataset.hpp"
#include "fgmopt/fgm.hpp"
#include "fgmopt/numkit.hpp"
#include "fgmopt/surrogate.hpp"

namespace fgmopt::bench {

/// Observable map x_obs = a * softplus(M x) + b and its exact inverse.
struct SoftplusMap {
    double a = 1.0;
    Matrix M;
    Matrix M_inverse;
    Vector b;

    static SoftplusMap make(double a, Matrix M, Vector b);

    int dimension() const { return static_cast<int>(b.size()); }
    Vector forward(const Vector& x) const;
    DenseMatrix forward(const DenseMatrix& X) const;
    /// True iff every coordinate of (x_obs - b) / a is strictly positive.
    bool is_valid(const Vector& x_obs) const;
    /// Throws std::domain_error outside the softplus image.
    Vector inverse(const Vector& x_obs) const;
};

double softplus(double z);
double softplus_inverse(double u);

enum class BenchmarkKind { QuadraticCycle, RbfMixture };

struct KnownOptimum {
    Vector design;
    double value;
};

/// Synthetic objective with an exact oracle and a ground-truth FGM. When a
/// transform is present, `evaluate` and the dataset live in observable space
/// while cliques and the ground-truth graph refer to the latent variables.
struct Benchmark {
    BenchmarkKind kind = BenchmarkKind::QuadraticCycle;
    Space space;  // latent (ground-truth) space
    fgm::CliqueSet cliques;
    std::string pattern;
    std::uint64_t seed = 0;
    Vector weights;
    std::vector<Vector> centers;
    std::optional<KnownOptimum> optimum;
    double upper_bound = 0.0;
    std::optional<SoftplusMap> transform;
    std::uint64_t transform_seed = 0;

    int dimension() const { return space.d; }
    double evaluate_latent(const Vector& x) const;
    /// Oracle on the benchmark's input space (observables when transformed).
    double evaluate(const Vector& x) const;
    bool is_valid(const Vector& x) const;
    fgm::FgmGraph ground_truth() const;
};

Benchmark gen_quadratic_cycle(int d);

/// Cliques {0,1,2},{2,3,4},... for odd d >= 3.
fgm::CliqueSet triangle_chain(int d);
/// Two triangles sharing an edge on 4 variables: {0,1,2},{1,2,3}.
fgm::CliqueSet overlapping_triangles();

/// "triangle-chain" or "overlapping-triangles"; any other pattern requires
/// explicit cliques.
Benchmark gen_rbf_mixture(int d, const std::string& pattern, std::uint64_t seed,
                          std::optional<fgm::CliqueSet> custom = std::nullopt);

Benchmark transform_observable(const Benchmark& base, std::uint64_t seed);

/// Uniform rows for discrete spaces, standard-normal latents otherwise
/// (mapped to observables when the benchmark is transformed).
Dataset sample_dataset(const Benchmark& bench, Eigen::Index n, numkit::Rng& rng);

/// Plain-text manifest sufficient to regenerate the benchmark bit-identically.
void write_manifest(std::ostream& out, const Benchmark& bench);
Benchmark read_manifest(std::istream& in);

struct CoverageReport {
    double full_max = 0.0;
    std::vector<double> clique_max;
    double clique_wise_max = 0.0;
};

/// Exact coverage ratios max pi/p over the full table and over each clique
/// marginal. Tables are indexed in mixed radix with variable 0 most
/// significant. Entries with pi > 0 and p = 0 give +inf.
CoverageReport coverage_ratios(const Vector& pi, const Vector& p,
                               const std::vector<int>& categories,
                               const fgm::CliqueSet& cliques);

struct CorrelationReport {
    Matrix correlation;
    double max_off_diagonal = 0.0;  // max |rho| over pairs of distinct cliques
    std::vector<bool> degenerate;   // component with zero sample variance
};

using Component = std::function<double(const Vector&)>;
CorrelationReport clique_correlation(const std::vector<Component>& components,
                                     const Eigen::Ref<const DenseMatrix>& samples);
CorrelationReport clique_correlation(const surrogate::OneHotCliqueModel& model,
                                     const Eigen::Ref<const DenseMatrix>& samples);
CorrelationReport clique_correlation(const surrogate::MaskedMlpModel& model,
                                     const Eigen::Ref<const DenseMatrix>& samples);

}  // namespace fgmopt::bench
