#include "fgmopt/vae.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "fgmopt/surrogate.hpp"

namespace fgmopt::vae {

namespace {

std::vector<int> layer_widths(int in, const std::vector<int>& hidden, int out)
{
    std::vector<int> w{in};
    w.insert(w.end(), hidden.begin(), hidden.end());
    w.push_back(out);
    return w;
}

}  // namespace

VaeModel VaeModel::zeros(int d_obs, int d_z, const std::vector<int>& hidden)
{
    if (d_obs < 1 || d_z < 1)
        throw std::invalid_argument("VaeModel: dimensions must be positive");
    VaeModel m;
    m.encoder = numkit::Mlp(layer_widths(d_obs, hidden, 2 * d_z));
    m.decoder = numkit::Mlp(layer_widths(d_z, hidden, d_obs));
    m.data_mean = Vector::Zero(d_obs);
    m.data_scale = Vector::Ones(d_obs);
    return m;
}

DenseMatrix VaeModel::standardize(const Eigen::Ref<const DenseMatrix>& X) const
{
    if (X.cols() != observed_dimension())
        throw std::invalid_argument("VaeModel: input has " + std::to_string(X.cols()) +
                                    " columns, expected " + std::to_string(observed_dimension()));
    DenseMatrix out = X.rowwise() - data_mean.transpose();
    return out.array().rowwise() / data_scale.transpose().array();
}

DenseMatrix encode(const VaeModel& model, const DenseMatrix& X)
{
    const Matrix out = model.encoder.forward(Matrix(model.standardize(X)));
    return out.leftCols(model.latent_dimension());
}

Vector encode(const VaeModel& model, const Vector& x)
{
    const DenseMatrix row = x.transpose();
    return encode(model, row).row(0).transpose();
}

DenseMatrix encode_log_variance(const VaeModel& model, const Eigen::Ref<const DenseMatrix>& X)
{
    const Matrix out = model.encoder.forward(Matrix(model.standardize(X)));
    return out.rightCols(model.latent_dimension());
}

DenseMatrix decode(const VaeModel& model, const DenseMatrix& Z)
{
    if (Z.cols() != model.latent_dimension())
        throw std::invalid_argument("decode: latent has " + std::to_string(Z.cols()) +
                                    " columns, expected " +
                                    std::to_string(model.latent_dimension()));
    DenseMatrix out = model.decoder.forward(Matrix(Z));
    out = out.array().rowwise() * model.data_scale.transpose().array();
    out.rowwise() += model.data_mean.transpose();
    return out;
}

Vector decode(const VaeModel& model, const Vector& z)
{
    const DenseMatrix row = z.transpose();
    return decode(model, row).row(0).transpose();
}

double kl_to_standard_normal(const Vector& mu, const Vector& log_variance)
{
    return 0.5 * (mu.array().square() + log_variance.array().exp() - log_variance.array() - 1.0)
                     .sum();
}

ElboTerms negative_elbo(const VaeModel& model, const Matrix& standardized, const Matrix& noise)
{
    const int dz = model.latent_dimension();
    const Eigen::Index b = standardized.rows();
    if (b == 0)
        throw std::invalid_argument("negative_elbo: empty batch");
    if (noise.rows() != b || noise.cols() != dz)
        throw std::invalid_argument("negative_elbo: noise shape mismatch");
    const double bn = static_cast<double>(b);
    const double inv_var = 1.0 / (model.noise_scale * model.noise_scale);

    numkit::Mlp::Cache enc_cache, dec_cache;
    const Matrix enc = model.encoder.forward(standardized, enc_cache);
    const Matrix mu = enc.leftCols(dz);
    const Matrix logvar = enc.rightCols(dz);
    const Matrix sd = (0.5 * logvar.array()).exp();
    const Matrix z = mu + sd.cwiseProduct(noise);
    const Matrix recon = model.decoder.forward(z, dec_cache);
    const Matrix diff = recon - standardized;

    ElboTerms t;
    t.reconstruction = 0.5 * inv_var * diff.squaredNorm() / bn;
    t.kl = 0.5 * (mu.array().square() + logvar.array().exp() - logvar.array() - 1.0).sum() / bn;
    t.loss = t.reconstruction + t.kl;

    const auto dec_grads = model.decoder.backward(dec_cache, (inv_var / bn) * diff);
    t.decoder_gradient = dec_grads.parameters;
    const Matrix& dz_grad = dec_grads.inputs;
    Matrix enc_seed(b, 2 * dz);
    enc_seed.leftCols(dz) = dz_grad + mu / bn;
    enc_seed.rightCols(dz) = (dz_grad.array() * noise.array() * 0.5 * sd.array() +
                              0.5 * (logvar.array().exp() - 1.0) / bn)
                                 .matrix();
    t.encoder_gradient = model.encoder.backward(enc_cache, enc_seed).parameters;
    return t;
}

VaeFit train_vae(const Eigen::Ref<const DenseMatrix>& data, int d_z, const VaeHyper& hyper,
                 const BatchObserver& observer)
{
    const Eigen::Index n = data.rows();
    if (n < 100)
        throw std::invalid_argument("train_vae: need at least 100 rows, got " + std::to_string(n));
    if (d_z < 1)
        throw std::invalid_argument("train_vae: latent dimension must be positive");
    if (hyper.epochs < 1 || hyper.batch < 1 || !(hyper.lr > 0.0) || !(hyper.noise_scale > 0.0))
        throw std::invalid_argument("train_vae: epochs, batch, lr and noise scale must be positive");

    const int d_obs = static_cast<int>(data.cols());
    VaeFit fit{VaeModel::zeros(d_obs, d_z, hyper.hidden), {}, {}};
    VaeModel& model = fit.model;
    model.noise_scale = hyper.noise_scale;
    model.data_mean = data.colwise().mean().transpose();
    const DenseMatrix centered = data.rowwise() - model.data_mean.transpose();
    model.data_scale = (centered.array().square().colwise().sum() / static_cast<double>(n - 1))
                           .sqrt()
                           .transpose();
    for (Eigen::Index k = 0; k < d_obs; ++k)
        if (!(model.data_scale(k) > 1e-12))
            model.data_scale(k) = 1.0;

    numkit::Rng rng(hyper.seed);
    numkit::Rng init_enc = rng.split(1), init_dec = rng.split(2);
    model.encoder.initialize(init_enc);
    model.decoder.initialize(init_dec);
    numkit::Rng shuffle = rng.split(3), noise_rng = rng.split(4);

    const DenseMatrix standardized = model.standardize(data);
    numkit::AdamState enc_state, dec_state;
    const numkit::AdamConfig adam{hyper.lr};
    const auto nn = static_cast<std::size_t>(n);
    long batch_index = 0;
    for (int epoch = 1; epoch <= hyper.epochs; ++epoch) {
        const auto order = numkit::permutation(nn, shuffle);
        double epoch_total = 0.0;
        for (std::size_t start = 0; start < nn; start += static_cast<std::size_t>(hyper.batch)) {
            const std::size_t stop = std::min(nn, start + static_cast<std::size_t>(hyper.batch));
            const auto b = static_cast<Eigen::Index>(stop - start);
            std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                          order.begin() + static_cast<std::ptrdiff_t>(stop));
            Matrix xb(b, d_obs);
            for (Eigen::Index r = 0; r < b; ++r)
                xb.row(r) = standardized.row(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)]));
            const Matrix noise = noise_rng.normal_matrix(b, d_z);
            const ElboTerms t = negative_elbo(model, xb, noise);
            if (!std::isfinite(t.loss) || !t.encoder_gradient.allFinite() ||
                !t.decoder_gradient.allFinite())
                throw std::runtime_error("train_vae: non-finite loss at batch " +
                                         std::to_string(batch_index));
            numkit::adam_step(model.encoder.parameters(), t.encoder_gradient, enc_state, adam);
            numkit::adam_step(model.decoder.parameters(), t.decoder_gradient, dec_state, adam);
            fit.batch_loss.push_back(t.loss);
            epoch_total += t.loss * static_cast<double>(b);
            ++batch_index;
            if (observer) {
                const Matrix enc = model.encoder.forward(xb);
                observer(DenseMatrix(enc.leftCols(d_z)), rows);
            }
        }
        fit.epoch_loss.push_back(epoch_total / static_cast<double>(n));
    }
    return fit;
}

Archive to_archive(const VaeModel& model)
{
    Archive a;
    a.put("kind", std::string("vae"));
    a.put("noise_scale", Archive::Reals{model.noise_scale});
    a.put("data_mean", Archive::Reals(model.data_mean.data(),
                                      model.data_mean.data() + model.data_mean.size()));
    a.put("data_scale", Archive::Reals(model.data_scale.data(),
                                       model.data_scale.data() + model.data_scale.size()));
    surrogate::put_mlp(a, "encoder", model.encoder);
    surrogate::put_mlp(a, "decoder", model.decoder);
    return a;
}

VaeModel vae_from_archive(const Archive& a)
{
    if (a.text("kind") != "vae")
        throw std::runtime_error("archive does not hold a VAE");
    VaeModel m;
    m.encoder = surrogate::get_mlp(a, "encoder");
    m.decoder = surrogate::get_mlp(a, "decoder");
    m.noise_scale = a.reals("noise_scale").at(0);
    const auto& mean = a.reals("data_mean");
    const auto& scale = a.reals("data_scale");
    m.data_mean = Eigen::Map<const Vector>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    m.data_scale = Eigen::Map<const Vector>(scale.data(), static_cast<Eigen::Index>(scale.size()));
    if (m.data_mean.size() != m.encoder.input_width() || m.data_scale.size() != m.data_mean.size() ||
        m.decoder.output_width() != m.encoder.input_width() ||
        m.encoder.output_width() != 2 * m.decoder.input_width())
        throw std::runtime_error("archive: inconsistent VAE shapes");
    return m;
}

}  // namespace fgmopt::vae
