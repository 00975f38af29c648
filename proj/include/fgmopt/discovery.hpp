#pragma once

#include <iosfwd>

#include "fgmopt/fgm.hpp"
#include "fgmopt/numkit.hpp"

namespace fgmopt::discovery {

/// Monte Carlo estimate of the Gaussian-smoothed Hessian at the origin,
/// H_ij = mean_k x_i x_j (y - mean y), with per-entry sample deviations.
struct PseudoHessian {
    int d = 0;
    Matrix H;
    Matrix sigma;
    long samples = 0;
};

PseudoHessian estimate_pseudo_hessian(const Eigen::Ref<const DenseMatrix>& X, const Vector& y);

struct EdgeTestOptions {
    double alpha = 0.05;
    /// Replace sigma_ij with 1, giving the unnormalised |H_ij| >= c / sqrt(M) test.
    bool unit_sigma = false;
};

/// Two-sided Gaussian test: (i, j) is an edge iff |H_ij| >= c_{alpha/2} sigma_ij / sqrt(M).
fgm::FgmGraph edge_test(const PseudoHessian& ph, const EdgeTestOptions& options = {});

/// |H_ij| sqrt(M) / sigma_ij (off-diagonal); +inf where sigma is 0 and H is not.
Matrix z_scores(const PseudoHessian& ph);

/// PseudoHessian as CSV: header "i,j,H,sigma,M", one row per unordered pair i < j.
void write_csv(std::ostream& out, const PseudoHessian& ph);

/// Exponential moving average of the per-entry product mean and squared-product
/// mean. The sample count reported to the edge test is the raw cumulative count.
class EmaAccumulator {
public:
    explicit EmaAccumulator(int d, double momentum = 0.99, int burn_in = 10);

    void update(const Eigen::Ref<const DenseMatrix>& X, const Vector& y);

    bool ready() const { return updates_ >= burn_in_; }
    long updates() const { return updates_; }
    long samples() const { return samples_; }
    const Matrix& mean_products() const { return mean_; }
    const Matrix& mean_squared_products() const { return mean_sq_; }

    PseudoHessian estimate() const;

private:
    int d_;
    double momentum_;
    int burn_in_;
    long updates_ = 0;
    long samples_ = 0;
    Matrix mean_;
    Matrix mean_sq_;
};

/// z = transform * (x - mean); transform is the inverse Cholesky factor of the
/// sample covariance, so whitened fitting data has identity covariance.
struct WhitenTransform {
    Vector mean;
    Matrix transform;
    Matrix inverse;

    DenseMatrix apply(const DenseMatrix& X) const;
    Vector apply(const Vector& x) const;
    DenseMatrix invert(const DenseMatrix& Z) const;
    Vector invert(const Vector& z) const;
};

WhitenTransform whiten_fit(const Eigen::Ref<const DenseMatrix>& X);

}  // namespace fgmopt::discovery
