#include "fgmopt/numkit.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace fgmopt::numkit {

std::uint64_t Rng::next_u64()
{
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double Rng::uniform()
{
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t n)
{
    if (n == 0)
        throw std::invalid_argument("Rng::below: n must be positive");
    // Rejection sampling keeps the result exactly uniform.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t r;
    do {
        r = next_u64();
    } while (r >= limit);
    return r % n;
}

double Rng::normal()
{
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double scale = std::sqrt(-2.0 * std::log(s) / s);
    cached_normal_ = v * scale;
    has_cached_normal_ = true;
    return u * scale;
}

Vector Rng::normal_vector(Eigen::Index n)
{
    Vector out(n);
    for (Eigen::Index i = 0; i < n; ++i)
        out(i) = normal();
    return out;
}

DenseMatrix Rng::normal_matrix(Eigen::Index rows, Eigen::Index cols)
{
    DenseMatrix out(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
            out(r, c) = normal();
    return out;
}

Rng Rng::split(std::uint64_t stream) const
{
    Rng mixer(state_ ^ (0xD1B54A32D192ED03ULL * (stream + 1)));
    mixer.next_u64();
    return Rng(mixer.next_u64());
}

std::vector<std::size_t> permutation(std::size_t n, Rng& rng)
{
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = rng.below(i);
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

Vector solve_normal_equations(const Matrix& gram, const Vector& rhs, double lambda)
{
    if (gram.rows() != gram.cols() || gram.rows() != rhs.size())
        throw std::invalid_argument("solve_normal_equations: shape mismatch");
    if (!(lambda >= 0.0))
        throw std::invalid_argument("solve_normal_equations: lambda must be nonnegative");
    Matrix system = gram;
    system.diagonal().array() += lambda;
    Eigen::LLT<Matrix> llt(system);
    if (llt.info() != Eigen::Success)
        throw SingularMatrixError("singular design matrix: Cholesky factorisation failed");
    // A factorisation can succeed on a numerically singular matrix; reject it.
    if (llt.rcond() < 1e-13)
        throw SingularMatrixError("singular design matrix: reciprocal condition number " +
                                  std::to_string(llt.rcond()));
    Vector theta = llt.solve(rhs);
    if (!theta.allFinite())
        throw SingularMatrixError("singular design matrix: non-finite solution");
    return theta;
}

Mlp::Mlp(std::vector<int> widths) : widths_(std::move(widths))
{
    if (widths_.size() < 2)
        throw std::invalid_argument("Mlp: need at least input and output widths");
    for (int w : widths_)
        if (w < 1)
            throw std::invalid_argument("Mlp: layer widths must be positive");
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
        offsets_.push_back(offset);
        offset += static_cast<std::size_t>(widths_[l] + 1) * widths_[l + 1];
    }
    params_ = Vector::Zero(static_cast<Eigen::Index>(offset));
}

std::size_t Mlp::parameter_count(std::span<const int> widths)
{
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l)
        total += static_cast<std::size_t>(widths[l] + 1) * widths[l + 1];
    return total;
}

Eigen::Map<Matrix> Mlp::weight(std::size_t layer)
{
    return {params_.data() + weight_offset(layer), widths_[layer + 1], widths_[layer]};
}

Eigen::Map<const Matrix> Mlp::weight(std::size_t layer) const
{
    return {params_.data() + weight_offset(layer), widths_[layer + 1], widths_[layer]};
}

Eigen::Map<Vector> Mlp::bias(std::size_t layer)
{
    return {params_.data() + bias_offset(layer), widths_[layer + 1]};
}

Eigen::Map<const Vector> Mlp::bias(std::size_t layer) const
{
    return {params_.data() + bias_offset(layer), widths_[layer + 1]};
}

void Mlp::initialize(Rng& rng)
{
    for (std::size_t l = 0; l < layer_count(); ++l) {
        auto w = weight(l);
        const double scale = 1.0 / std::sqrt(static_cast<double>(widths_[l]));
        for (Eigen::Index j = 0; j < w.cols(); ++j)
            for (Eigen::Index i = 0; i < w.rows(); ++i)
                w(i, j) = scale * rng.normal();
        bias(l).setZero();
    }
}

Matrix Mlp::forward(const Matrix& inputs, Cache& cache) const
{
    if (inputs.cols() != input_width())
        throw std::invalid_argument("Mlp::forward: input has " + std::to_string(inputs.cols()) +
                                    " columns, network expects " +
                                    std::to_string(input_width()));
    cache.activations.clear();
    cache.activations.reserve(widths_.size());
    cache.activations.push_back(inputs);
    for (std::size_t l = 0; l < layer_count(); ++l) {
        Matrix z = cache.activations.back() * weight(l).transpose();
        z.rowwise() += bias(l).transpose();
        if (l + 1 < layer_count())
            z = z.array().tanh().matrix();
        cache.activations.push_back(std::move(z));
    }
    return cache.activations.back();
}

Matrix Mlp::forward(const Matrix& inputs) const
{
    Cache cache;
    return forward(inputs, cache);
}

Vector Mlp::forward(const Vector& x) const
{
    if (x.size() != input_width())
        throw std::invalid_argument("Mlp::forward: input length " + std::to_string(x.size()) +
                                    " does not match input width " +
                                    std::to_string(input_width()));
    Vector a = x;
    for (std::size_t l = 0; l < layer_count(); ++l) {
        Vector z = weight(l) * a + bias(l);
        a = (l + 1 < layer_count()) ? Vector(z.array().tanh()) : z;
    }
    return a;
}

double Mlp::predict(const Vector& x) const
{
    if (output_width() != 1)
        throw std::invalid_argument("Mlp::predict: network has more than one output");
    return forward(x)(0);
}

Mlp::Gradients Mlp::backward(const Cache& cache, const Matrix& output_grad) const
{
    if (cache.activations.size() != widths_.size())
        throw std::invalid_argument("Mlp::backward: cache does not match network");
    const auto& acts = cache.activations;
    if (output_grad.rows() != acts.front().rows() || output_grad.cols() != output_width())
        throw std::invalid_argument("Mlp::backward: output gradient shape mismatch");

    Gradients grads{Vector::Zero(params_.size()), Matrix()};
    Matrix delta = output_grad;  // dL/dz for the current layer
    for (std::size_t l = layer_count(); l-- > 0;) {
        const Matrix& a_in = acts[l];
        Eigen::Map<Matrix> gw(grads.parameters.data() + weight_offset(l), widths_[l + 1],
                              widths_[l]);
        Eigen::Map<Vector> gb(grads.parameters.data() + bias_offset(l), widths_[l + 1]);
        gw.noalias() = delta.transpose() * a_in;
        gb = delta.colwise().sum().transpose();
        Matrix upstream = delta * weight(l);
        if (l > 0) {
            // tanh'(z) = 1 - tanh(z)^2, and acts[l] holds tanh(z).
            upstream.array() *= 1.0 - a_in.array().square();
        }
        delta = std::move(upstream);
    }
    grads.inputs = std::move(delta);
    return grads;
}

Vector Mlp::input_gradient(const Vector& x) const
{
    if (output_width() != 1)
        throw std::invalid_argument("Mlp::input_gradient: network has more than one output");
    Cache cache;
    forward(Matrix(x.transpose()), cache);
    const Matrix seed = Matrix::Ones(1, 1);
    return backward(cache, seed).inputs.row(0).transpose();
}

MseResult mse_gradient(const Mlp& model, const Matrix& inputs, const Vector& targets)
{
    if (inputs.rows() == 0)
        throw std::invalid_argument("mse_gradient: empty batch");
    if (inputs.rows() != targets.size())
        throw std::invalid_argument("mse_gradient: inputs and targets differ in length");
    if (model.output_width() != 1)
        throw std::invalid_argument("mse_gradient: network must have a single output");
    Mlp::Cache cache;
    const Matrix out = model.forward(inputs, cache);
    const Vector residual = out.col(0) - targets;
    const double n = static_cast<double>(inputs.rows());
    const Matrix seed = (2.0 / n) * residual;
    return {residual.squaredNorm() / n, model.backward(cache, seed).parameters};
}

void adam_step(Eigen::Ref<Vector> params, const Vector& grads, AdamState& state,
               const AdamConfig& config)
{
    if (params.size() != grads.size())
        throw std::invalid_argument("adam_step: parameter and gradient sizes differ");
    if (state.m.size() != params.size()) {
        state.m = Vector::Zero(params.size());
        state.v = Vector::Zero(params.size());
        state.step = 0;
    }
    ++state.step;
    state.m = config.beta1 * state.m + (1.0 - config.beta1) * grads;
    state.v = config.beta2 * state.v + (1.0 - config.beta2) * grads.cwiseAbs2();
    const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
    params.array() -= config.lr * (state.m.array() / c1) /
                      ((state.v.array() / c2).sqrt() + config.eps);
}

bool all_finite(const Eigen::Ref<const Matrix>& m)
{
    return m.allFinite();
}

double normal_cdf(double x)
{
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

double normal_quantile(double p)
{
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("normal_quantile: p must lie in (0, 1)");
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // Halley step against the exact CDF.
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

}  // namespace fgmopt::numkit
