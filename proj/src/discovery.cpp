#include "fgmopt/discovery.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace fgmopt::discovery {

PseudoHessian estimate_pseudo_hessian(const Eigen::Ref<const DenseMatrix>& X, const Vector& y)
{
    const Eigen::Index n = X.rows();
    const int d = static_cast<int>(X.cols());
    if (n < 2)
        throw std::invalid_argument("estimate_pseudo_hessian: need at least 2 samples, got " +
                                    std::to_string(n));
    if (y.size() != n)
        throw std::invalid_argument("estimate_pseudo_hessian: X and y differ in length");

    const Vector centered = y.array() - y.mean();
    // Weighted second moments: sum_k w_k x_i x_j and sum_k w_k^2 x_i^2 x_j^2.
    const Matrix Xd = X;
    const Matrix sum = Xd.transpose() * centered.asDiagonal() * Xd;
    const Matrix Xsq = Xd.array().square().matrix();
    const Matrix sum_sq = Xsq.transpose() * centered.array().square().matrix().asDiagonal() * Xsq;

    PseudoHessian ph;
    ph.d = d;
    ph.samples = static_cast<long>(n);
    const double nn = static_cast<double>(n);
    ph.H = sum / nn;
    Matrix var = (sum_sq - nn * ph.H.array().square().matrix()) / (nn - 1.0);
    ph.sigma = var.cwiseMax(0.0).cwiseSqrt();
    // Exact symmetry regardless of summation order.
    ph.H = 0.5 * (ph.H + ph.H.transpose()).eval();
    ph.sigma = 0.5 * (ph.sigma + ph.sigma.transpose()).eval();
    return ph;
}

fgm::FgmGraph edge_test(const PseudoHessian& ph, const EdgeTestOptions& options)
{
    if (!(options.alpha > 0.0 && options.alpha < 1.0))
        throw std::invalid_argument("edge_test: alpha must lie in (0, 1)");
    if (ph.samples < 2)
        throw std::invalid_argument("edge_test: pseudo-Hessian needs at least 2 samples");
    const double c = numkit::normal_quantile(1.0 - options.alpha / 2.0);
    const double root_m = std::sqrt(static_cast<double>(ph.samples));
    fgm::FgmGraph g(ph.d);
    for (int i = 0; i < ph.d; ++i)
        for (int j = i + 1; j < ph.d; ++j) {
            const double h = std::abs(ph.H(i, j));
            const double s = options.unit_sigma ? 1.0 : ph.sigma(i, j);
            if (h == 0.0 && s == 0.0)
                continue;
            if (h >= c * s / root_m)
                g.add_edge(i, j);
        }
    return g;
}

Matrix z_scores(const PseudoHessian& ph)
{
    Matrix z = Matrix::Zero(ph.d, ph.d);
    const double root_m = std::sqrt(static_cast<double>(ph.samples));
    for (int i = 0; i < ph.d; ++i)
        for (int j = 0; j < ph.d; ++j) {
            if (i == j)
                continue;
            const double h = std::abs(ph.H(i, j));
            if (ph.sigma(i, j) > 0.0)
                z(i, j) = h * root_m / ph.sigma(i, j);
            else if (h > 0.0)
                z(i, j) = std::numeric_limits<double>::infinity();
        }
    return z;
}

void write_csv(std::ostream& out, const PseudoHessian& ph)
{
    out << "i,j,H,sigma,M\n";
    char buf[128];
    for (int i = 0; i < ph.d; ++i)
        for (int j = i + 1; j < ph.d; ++j) {
            std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%ld\n", i, j, ph.H(i, j),
                          ph.sigma(i, j), ph.samples);
            out << buf;
        }
}

EmaAccumulator::EmaAccumulator(int d, double momentum, int burn_in)
    : d_(d), momentum_(momentum), burn_in_(burn_in),
      mean_(Matrix::Zero(d, d)), mean_sq_(Matrix::Zero(d, d))
{
    if (d < 1)
        throw std::invalid_argument("EmaAccumulator: dimension must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0))
        throw std::invalid_argument("EmaAccumulator: momentum must lie in [0, 1)");
}

void EmaAccumulator::update(const Eigen::Ref<const DenseMatrix>& X, const Vector& y)
{
    const Eigen::Index n = X.rows();
    if (n == 0)
        throw std::invalid_argument("EmaAccumulator::update: empty batch");
    if (X.cols() != d_ || y.size() != n)
        throw std::invalid_argument("EmaAccumulator::update: batch shape mismatch");
    const Vector centered = y.array() - y.mean();
    const Matrix Xd = X;
    const Matrix Xsq = Xd.array().square().matrix();
    const double nn = static_cast<double>(n);
    const Matrix batch_mean = Xd.transpose() * centered.asDiagonal() * Xd / nn;
    const Matrix batch_sq =
        Xsq.transpose() * centered.array().square().matrix().asDiagonal() * Xsq / nn;
    if (updates_ == 0) {
        mean_ = batch_mean;
        mean_sq_ = batch_sq;
    } else {
        mean_ = momentum_ * mean_ + (1.0 - momentum_) * batch_mean;
        mean_sq_ = momentum_ * mean_sq_ + (1.0 - momentum_) * batch_sq;
    }
    ++updates_;
    samples_ += static_cast<long>(n);
}

PseudoHessian EmaAccumulator::estimate() const
{
    PseudoHessian ph;
    ph.d = d_;
    ph.samples = samples_;
    ph.H = 0.5 * (mean_ + mean_.transpose());
    Matrix var = (mean_sq_ - mean_.array().square().matrix()).cwiseMax(0.0);
    if (samples_ > 1)
        var *= static_cast<double>(samples_) / static_cast<double>(samples_ - 1);
    ph.sigma = var.cwiseSqrt();
    ph.sigma = 0.5 * (ph.sigma + ph.sigma.transpose()).eval();
    return ph;
}

DenseMatrix WhitenTransform::apply(const DenseMatrix& X) const
{
    if (X.cols() != mean.size())
        throw std::invalid_argument("WhitenTransform::apply: dimension mismatch");
    DenseMatrix centered = X.rowwise() - mean.transpose();
    return centered * transform.transpose();
}

Vector WhitenTransform::apply(const Vector& x) const
{
    if (x.size() != mean.size())
        throw std::invalid_argument("WhitenTransform::apply: dimension mismatch");
    return transform * (x - mean);
}

DenseMatrix WhitenTransform::invert(const DenseMatrix& Z) const
{
    if (Z.cols() != mean.size())
        throw std::invalid_argument("WhitenTransform::invert: dimension mismatch");
    DenseMatrix X = Z * inverse.transpose();
    X.rowwise() += mean.transpose();
    return X;
}

Vector WhitenTransform::invert(const Vector& z) const
{
    if (z.size() != mean.size())
        throw std::invalid_argument("WhitenTransform::invert: dimension mismatch");
    return inverse * z + mean;
}

WhitenTransform whiten_fit(const Eigen::Ref<const DenseMatrix>& X)
{
    const Eigen::Index n = X.rows();
    const Eigen::Index d = X.cols();
    if (d < 1 || n <= d)
        throw std::invalid_argument("whiten_fit: need more samples than dimensions");
    WhitenTransform w;
    w.mean = X.colwise().mean().transpose();
    const Matrix centered = (X.rowwise() - w.mean.transpose()).eval();
    const Matrix cov = centered.transpose() * centered / static_cast<double>(n - 1);
    Eigen::LLT<Matrix> llt(cov);
    const double scale = cov.diagonal().maxCoeff();
    if (llt.info() != Eigen::Success || !(scale > 0.0) || llt.rcond() < 1e-12)
        throw numkit::SingularMatrixError(
            "whiten_fit: sample covariance is singular; the data are rank deficient "
            "(constant or collinear columns)");
    w.inverse = llt.matrixL();
    w.transform = w.inverse.triangularView<Eigen::Lower>().solve(
        Matrix::Identity(d, d));
    return w;
}

}  // namespace fgmopt::discovery
