#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fgmopt/archive.hpp"
#include "fgmopt/numkit.hpp"

namespace fgmopt::vae {

/// Gaussian-prior VAE with a diagonal Gaussian encoder and a fixed isotropic
/// Gaussian decoder. Inputs are standardised per coordinate before encoding
/// and restored after decoding; an untrained model uses the identity scaling.
struct VaeModel {
    numkit::Mlp encoder;  // d_obs -> 2 d_z (means, then log-variances)
    numkit::Mlp decoder;  // d_z -> d_obs
    double noise_scale = 0.1;
    Vector data_mean;
    Vector data_scale;

    static VaeModel zeros(int d_obs, int d_z, const std::vector<int>& hidden);

    int observed_dimension() const { return encoder.input_width(); }
    int latent_dimension() const { return decoder.input_width(); }

    DenseMatrix standardize(const Eigen::Ref<const DenseMatrix>& X) const;
};

/// Posterior means, one row per input row.
DenseMatrix encode(const VaeModel& model, const DenseMatrix& X);
Vector encode(const VaeModel& model, const Vector& x);
/// Posterior log-variances.
DenseMatrix encode_log_variance(const VaeModel& model, const Eigen::Ref<const DenseMatrix>& X);
DenseMatrix decode(const VaeModel& model, const DenseMatrix& Z);
Vector decode(const VaeModel& model, const Vector& z);

/// KL(N(mu, diag exp(logvar)) || N(0, I)) = 1/2 sum(mu^2 + exp(logvar) - logvar - 1).
double kl_to_standard_normal(const Vector& mu, const Vector& log_variance);

struct ElboTerms {
    double loss = 0.0;           // mean negative ELBO per datum
    double reconstruction = 0.0; // mean ||x - x_hat||^2 / (2 noise^2)
    double kl = 0.0;             // mean KL per datum
    Vector encoder_gradient;
    Vector decoder_gradient;
};

/// Negative ELBO on standardised rows with explicit reparameterisation noise
/// (batch x d_z), and its exact gradient for that noise.
ElboTerms negative_elbo(const VaeModel& model, const Matrix& standardized, const Matrix& noise);

struct VaeHyper {
    std::vector<int> hidden{64};
    double lr = 1e-3;
    int epochs = 100;
    int batch = 128;
    double noise_scale = 0.1;
    std::uint64_t seed = 0;
};

struct VaeFit {
    VaeModel model;
    std::vector<double> batch_loss;
    std::vector<double> epoch_loss;
};

/// Called after every optimiser step with the batch's posterior means and its
/// row indices into the training data.
using BatchObserver = std::function<void(const DenseMatrix& latent_means,
                                         const std::vector<std::size_t>& rows)>;

VaeFit train_vae(const Eigen::Ref<const DenseMatrix>& data, int d_z, const VaeHyper& hyper,
                 const BatchObserver& observer = {});

Archive to_archive(const VaeModel& model);
VaeModel vae_from_archive(const Archive& archive);

}  // namespace fgmopt::vae
