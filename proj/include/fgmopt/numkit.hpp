#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fgmopt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
// Datasets are stored one design per row.
using DenseMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace numkit {

class SingularMatrixError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Deterministic 64-bit generator (SplitMix64). The output stream depends only
/// on the seed, so experiments replay bit-for-bit on any platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

    std::uint64_t next_u64();
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);
    /// Standard normal via the polar Box-Muller method.
    double normal();

    Vector normal_vector(Eigen::Index n);
    DenseMatrix normal_matrix(Eigen::Index rows, Eigen::Index cols);

    /// Independent child stream keyed by `stream`; does not advance this generator.
    Rng split(std::uint64_t stream) const;

    std::uint64_t state() const { return state_; }

private:
    std::uint64_t state_;
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

std::vector<std::size_t> permutation(std::size_t n, Rng& rng);

/// Solves (G + lambda I) theta = b for symmetric positive semi-definite G.
Vector solve_normal_equations(const Matrix& gram, const Vector& rhs, double lambda);

/// Ridge regression: argmin ||X theta - y||^2 + lambda ||theta||^2 via Cholesky.
/// Throws SingularMatrixError when lambda == 0 and X^T X is singular.
template <typename Derived>
Vector solve_ridge(const Eigen::MatrixBase<Derived>& X, const Vector& y, double lambda)
{
    if (X.rows() < 1 || X.cols() < 1)
        throw std::invalid_argument("solve_ridge: empty design matrix");
    if (X.rows() != y.size())
        throw std::invalid_argument("solve_ridge: design rows and targets differ in length");
    if (!(lambda >= 0.0))
        throw std::invalid_argument("solve_ridge: lambda must be nonnegative");
    const Matrix Xd = X;
    const Matrix gram = Xd.transpose() * Xd;
    const Vector rhs = Xd.transpose() * y;
    return solve_normal_equations(gram, rhs, lambda);
}

/// Feed-forward regressor with tanh hidden layers and an identity output layer.
/// Parameters live in one flat vector laid out layer by layer as
/// [W_0 (column-major, out x in), b_0, W_1, b_1, ...].
class Mlp {
public:
    Mlp() = default;
    explicit Mlp(std::vector<int> widths);

    static std::size_t parameter_count(std::span<const int> widths);

    const std::vector<int>& widths() const { return widths_; }
    int input_width() const { return widths_.front(); }
    int output_width() const { return widths_.back(); }
    std::size_t layer_count() const { return widths_.size() - 1; }

    Vector& parameters() { return params_; }
    const Vector& parameters() const { return params_; }

    Eigen::Map<Matrix> weight(std::size_t layer);
    Eigen::Map<const Matrix> weight(std::size_t layer) const;
    Eigen::Map<Vector> bias(std::size_t layer);
    Eigen::Map<const Vector> bias(std::size_t layer) const;

    /// Scaled-normal initialisation (std 1/sqrt(fan_in)); biases zero.
    void initialize(Rng& rng);

    /// Batch of row-major inputs -> batch x output_width outputs.
    Matrix forward(const Matrix& inputs) const;
    Vector forward(const Vector& x) const;
    /// Scalar output for single-output regressors.
    double predict(const Vector& x) const;

    struct Cache {
        // activations[l] is batch x widths[l]; activations[0] is the input.
        std::vector<Matrix> activations;
    };
    Matrix forward(const Matrix& inputs, Cache& cache) const;

    struct Gradients {
        Vector parameters;
        Matrix inputs;  // batch x input_width
    };
    /// Back-propagates dLoss/dOutput (batch x output_width) through a cached pass.
    Gradients backward(const Cache& cache, const Matrix& output_grad) const;

    /// d output / d x for a single-output network.
    Vector input_gradient(const Vector& x) const;

private:
    std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
    std::size_t bias_offset(std::size_t layer) const
    {
        return offsets_[layer] + static_cast<std::size_t>(widths_[layer + 1]) * widths_[layer];
    }

    std::vector<int> widths_;
    std::vector<std::size_t> offsets_;
    Vector params_;
};

/// Mean-squared-error loss and its gradient with respect to all parameters.
struct MseResult {
    double loss;
    Vector gradient;
};
MseResult mse_gradient(const Mlp& model, const Matrix& inputs, const Vector& targets);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    Vector m;
    Vector v;
    long step = 0;
};

/// One bias-corrected Adam update; initialises `state` on first use.
void adam_step(Eigen::Ref<Vector> params, const Vector& grads, AdamState& state,
               const AdamConfig& config);

bool all_finite(const Eigen::Ref<const Matrix>& m);

/// Standard normal CDF and its inverse (Acklam's rational approximation plus
/// one Halley refinement; absolute error below 1e-13 on (0, 1)).
double normal_cdf(double x);
double normal_quantile(double p);

}  // namespace numkit
}  // namespace fgmopt
