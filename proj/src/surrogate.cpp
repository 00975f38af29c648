#include "fgmopt/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace fgmopt::surrogate {

namespace {

constexpr std::size_t kMaxOneHotFeatures = 4096;

void check_cliques_fit(const fgm::CliqueSet& cliques, int d)
{
    if (cliques.d != d)
        throw std::invalid_argument("clique set is over " + std::to_string(cliques.d) +
                                    " variables but the data have " + std::to_string(d));
    if (cliques.size() == 0)
        throw std::invalid_argument("clique set is empty");
    for (const auto& c : cliques)
        for (int k : c)
            if (k < 0 || k >= d)
                throw std::out_of_range("clique references index " + std::to_string(k) +
                                        " outside 0.." + std::to_string(d - 1));
}

}  // namespace

OneHotCliqueModel::OneHotCliqueModel(fgm::CliqueSet cliques, std::vector<int> categories)
    : cliques_(std::move(cliques)), categories_(std::move(categories))
{
    check_cliques_fit(cliques_, static_cast<int>(categories_.size()));
    for (int k : categories_)
        if (k < 2)
            throw std::invalid_argument("OneHotCliqueModel: every variable needs >= 2 categories");
    for (const auto& c : cliques_) {
        std::size_t configs = 1;
        for (int k : c) {
            configs *= static_cast<std::size_t>(categories_[k]);
            if (configs > kMaxOneHotFeatures)
                throw std::invalid_argument("OneHotCliqueModel: clique too large for one-hot features");
        }
        offsets_.push_back(offsets_.back() + configs);
    }
    if (offsets_.back() > kMaxOneHotFeatures)
        throw std::invalid_argument("OneHotCliqueModel: " + std::to_string(offsets_.back()) +
                                    " features exceed the dense limit of " +
                                    std::to_string(kMaxOneHotFeatures));
    theta = Vector::Zero(static_cast<Eigen::Index>(offsets_.back()));
}

std::size_t OneHotCliqueModel::feature_index(std::size_t c, const Vector& x) const
{
    if (x.size() != static_cast<Eigen::Index>(categories_.size()))
        throw std::invalid_argument("OneHotCliqueModel: input has dimension " +
                                    std::to_string(x.size()) + ", expected " +
                                    std::to_string(categories_.size()));
    std::size_t index = 0;
    for (int k : cliques_[c]) {
        const double v = x(k);
        const auto level = static_cast<long>(v);
        if (v != static_cast<double>(level) || level < 0 || level >= categories_[k])
            throw std::out_of_range("OneHotCliqueModel: value " + std::to_string(v) +
                                    " of variable " + std::to_string(k) +
                                    " is outside its domain {0.." +
                                    std::to_string(categories_[k] - 1) + "}");
        index = index * static_cast<std::size_t>(categories_[k]) + static_cast<std::size_t>(level);
    }
    return offsets_[c] + index;
}

double OneHotCliqueModel::component(std::size_t c, const Vector& x) const
{
    return theta(static_cast<Eigen::Index>(feature_index(c, x)));
}

double OneHotCliqueModel::predict(const Vector& x) const
{
    double total = y_offset;
    for (std::size_t c = 0; c < cliques_.size(); ++c)
        total += component(c, x);
    return total;
}

OneHotCliqueModel fit_onehot(const Dataset& data, const fgm::CliqueSet& cliques,
                             std::optional<double> lambda)
{
    if (!data.space.is_discrete())
        throw std::invalid_argument("fit_onehot: dataset space is not discrete");
    if (data.size() < 1)
        throw std::invalid_argument("fit_onehot: empty dataset");
    OneHotCliqueModel model(cliques, data.space.categories);
    const double n = static_cast<double>(data.size());
    model.lambda = lambda.value_or(1e-6 * n);
    if (!(model.lambda > 0.0))
        throw std::invalid_argument("fit_onehot: lambda must be positive (stacked one-hot "
                                    "features are always rank deficient)");

    // Rows are accumulated in sorted (x, y) order so the sums, and hence
    // theta, do not depend on the order of the training rows.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(data.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&data](Eigen::Index a, Eigen::Index b) {
        for (Eigen::Index k = 0; k < data.X.cols(); ++k)
            if (data.X(a, k) != data.X(b, k))
                return data.X(a, k) < data.X(b, k);
        return data.y(a) < data.y(b);
    });
    double total = 0.0;
    for (auto r : order)
        total += data.y(r);
    model.y_offset = total / n;

    // Each row activates exactly one feature per clique, so X^T X and X^T y
    // accumulate from the active index lists.
    const auto p = static_cast<Eigen::Index>(model.feature_count());
    Matrix gram = Matrix::Zero(p, p);
    Vector rhs = Vector::Zero(p);
    std::vector<Eigen::Index> active(cliques.size());
    for (auto r : order) {
        const Vector x = data.X.row(r).transpose();
        for (std::size_t c = 0; c < cliques.size(); ++c)
            active[c] = static_cast<Eigen::Index>(model.feature_index(c, x));
        const double target = data.y(r) - model.y_offset;
        for (auto a : active) {
            rhs(a) += target;
            for (auto b : active)
                gram(a, b) += 1.0;
        }
    }
    model.theta = numkit::solve_normal_equations(gram, rhs, model.lambda);
    return model;
}

MaskedMlpModel::MaskedMlpModel(fgm::CliqueSet cliques, std::vector<numkit::Mlp> nets,
                               double y_offset)
    : cliques_(std::move(cliques)), nets_(std::move(nets)), y_offset_(y_offset)
{
    check_cliques_fit(cliques_, cliques_.d);
    if (nets_.size() != 1 && nets_.size() != cliques_.size())
        throw std::invalid_argument("MaskedMlpModel: need one shared network or one per clique");
    for (const auto& net : nets_)
        if (net.input_width() != cliques_.d || net.output_width() != 1)
            throw std::invalid_argument("MaskedMlpModel: network shape does not match dimension");
    masks_ = Matrix::Zero(static_cast<Eigen::Index>(cliques_.size()), cliques_.d);
    for (std::size_t c = 0; c < cliques_.size(); ++c)
        for (int k : cliques_[c])
            masks_(static_cast<Eigen::Index>(c), k) = 1.0;
}

Vector MaskedMlpModel::mask(std::size_t c) const
{
    return masks_.row(static_cast<Eigen::Index>(c)).transpose();
}

double MaskedMlpModel::component(std::size_t c, const Vector& x) const
{
    if (x.size() != cliques_.d)
        throw std::invalid_argument("MaskedMlpModel: input has dimension " +
                                    std::to_string(x.size()) + ", expected " +
                                    std::to_string(cliques_.d));
    const Vector masked = x.cwiseProduct(mask(c));
    return net_for(c).predict(masked);
}

double MaskedMlpModel::predict(const Vector& x) const
{
    double sum = 0.0;
    for (std::size_t c = 0; c < cliques_.size(); ++c)
        sum += component(c, x);
    const double k = static_cast<double>(cliques_.size());
    return y_offset_ + k * (sum / k);
}

Vector MaskedMlpModel::predict(const DenseMatrix& X) const
{
    if (X.cols() != cliques_.d)
        throw std::invalid_argument("MaskedMlpModel: batch has wrong dimension");
    Vector sum = Vector::Zero(X.rows());
    for (std::size_t c = 0; c < cliques_.size(); ++c) {
        const Matrix masked = X.array().rowwise() * masks_.row(static_cast<Eigen::Index>(c)).array();
        sum += net_for(c).forward(masked).col(0);
    }
    const double k = static_cast<double>(cliques_.size());
    return (y_offset_ + k * (sum.array() / k)).matrix();
}

Vector MaskedMlpModel::gradient(const Vector& x) const
{
    if (x.size() != cliques_.d)
        throw std::invalid_argument("MaskedMlpModel::gradient: dimension mismatch");
    Vector g = Vector::Zero(cliques_.d);
    for (std::size_t c = 0; c < cliques_.size(); ++c) {
        const Vector m = mask(c);
        g += net_for(c).input_gradient(x.cwiseProduct(m)).cwiseProduct(m);
    }
    return g;
}

double mean_squared_error(const MaskedMlpModel& model, const Dataset& data)
{
    if (data.size() == 0)
        throw std::invalid_argument("mean_squared_error: empty dataset");
    return (model.predict(data.X) - data.y).squaredNorm() / static_cast<double>(data.size());
}

double mean_squared_error(const OneHotCliqueModel& model, const Dataset& data)
{
    if (data.size() == 0)
        throw std::invalid_argument("mean_squared_error: empty dataset");
    double total = 0.0;
    for (Eigen::Index r = 0; r < data.size(); ++r) {
        const double e = model.predict(data.X.row(r).transpose()) - data.y(r);
        total += e * e;
    }
    return total / static_cast<double>(data.size());
}

MlpFit fit_masked_mlp(const Dataset& data, const fgm::CliqueSet& cliques, const MlpHyper& hyper)
{
    const int d = data.dimension();
    if (data.size() < 1)
        throw std::invalid_argument("fit_masked_mlp: empty dataset");
    if (data.X.cols() != d)
        throw std::invalid_argument("fit_masked_mlp: dataset columns do not match its space");
    check_cliques_fit(cliques, d);
    if (hyper.epochs < 1 || hyper.batch < 1 || !(hyper.lr > 0.0))
        throw std::invalid_argument("fit_masked_mlp: epochs, batch and lr must be positive");
    for (int w : hyper.hidden)
        if (w < 1)
            throw std::invalid_argument("fit_masked_mlp: hidden widths must be positive");

    numkit::Rng rng(hyper.seed);
    std::vector<int> widths{d};
    widths.insert(widths.end(), hyper.hidden.begin(), hyper.hidden.end());
    widths.push_back(1);
    const std::size_t n_nets = hyper.shared ? 1 : cliques.size();
    std::vector<numkit::Mlp> nets;
    for (std::size_t k = 0; k < n_nets; ++k) {
        numkit::Mlp net(widths);
        numkit::Rng init = rng.split(k);
        net.initialize(init);
        nets.push_back(std::move(net));
    }
    MlpFit fit{MaskedMlpModel(cliques, std::move(nets), data.y.mean()), 0.0, {}, 0.0};
    MaskedMlpModel& model = fit.model;
    fit.initial_mse = mean_squared_error(model, data);

    const Vector target = data.y.array() - model.y_offset();
    const auto n = static_cast<std::size_t>(data.size());
    const std::size_t n_cliques = cliques.size();
    std::vector<numkit::AdamState> adam(n_nets);
    const numkit::AdamConfig adam_config{hyper.lr};
    numkit::Rng shuffle = rng.split(1000003);

    for (int epoch = 1; epoch <= hyper.epochs; ++epoch) {
        const auto order = numkit::permutation(n, shuffle);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(hyper.batch)) {
            const std::size_t stop = std::min(n, start + static_cast<std::size_t>(hyper.batch));
            const auto b = static_cast<Eigen::Index>(stop - start);
            Matrix xb(b, d);
            Vector yb(b);
            for (Eigen::Index r = 0; r < b; ++r) {
                const auto src = static_cast<Eigen::Index>(order[start + static_cast<std::size_t>(r)]);
                xb.row(r) = data.X.row(src);
                yb(r) = target(src);
            }
            // One forward pass per network over the masked copies of the batch.
            std::vector<numkit::Mlp::Cache> caches(n_nets);
            std::vector<Matrix> outputs(n_nets);
            Vector pred = Vector::Zero(b);
            if (hyper.shared) {
                Matrix stacked(b * static_cast<Eigen::Index>(n_cliques), d);
                for (std::size_t c = 0; c < n_cliques; ++c)
                    stacked.middleRows(static_cast<Eigen::Index>(c) * b, b) =
                        xb.array().rowwise() * model.mask(c).transpose().array();
                outputs[0] = model.nets()[0].forward(stacked, caches[0]);
                for (std::size_t c = 0; c < n_cliques; ++c)
                    pred += outputs[0].col(0).segment(static_cast<Eigen::Index>(c) * b, b);
            } else {
                for (std::size_t c = 0; c < n_cliques; ++c) {
                    const Matrix masked = xb.array().rowwise() * model.mask(c).transpose().array();
                    outputs[c] = model.nets()[c].forward(masked, caches[c]);
                    pred += outputs[c].col(0);
                }
            }
            const Vector residual = pred - yb;
            const double loss = residual.squaredNorm() / static_cast<double>(b);
            if (!std::isfinite(loss))
                throw std::runtime_error("fit_masked_mlp: non-finite loss in epoch " +
                                         std::to_string(epoch));
            loss_sum += loss * static_cast<double>(b);
            const Vector seed = (2.0 / static_cast<double>(b)) * residual;
            if (hyper.shared) {
                Matrix seeds(b * static_cast<Eigen::Index>(n_cliques), 1);
                for (std::size_t c = 0; c < n_cliques; ++c)
                    seeds.col(0).segment(static_cast<Eigen::Index>(c) * b, b) = seed;
                const auto grads = model.nets()[0].backward(caches[0], seeds);
                numkit::adam_step(model.nets()[0].parameters(), grads.parameters, adam[0],
                                  adam_config);
            } else {
                for (std::size_t c = 0; c < n_cliques; ++c) {
                    const auto grads = model.nets()[c].backward(caches[c], Matrix(seed));
                    numkit::adam_step(model.nets()[c].parameters(), grads.parameters, adam[c],
                                      adam_config);
                }
            }
        }
        fit.epoch_mse.push_back(loss_sum / static_cast<double>(n));
    }
    fit.final_mse = mean_squared_error(model, data);
    if (!std::isfinite(fit.final_mse))
        throw std::runtime_error("fit_masked_mlp: non-finite loss after epoch " +
                                 std::to_string(hyper.epochs));
    return fit;
}

MlpFit fit_full_mlp(const Dataset& data, const MlpHyper& hyper)
{
    const int d = data.dimension();
    fgm::Clique all(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k)
        all[static_cast<std::size_t>(k)] = k;
    return fit_masked_mlp(data, fgm::CliqueSet{d, {all}}, hyper);
}

void put_cliques(Archive& archive, const std::string& prefix, const fgm::CliqueSet& cliques)
{
    Archive::Ints sizes, members;
    for (const auto& c : cliques) {
        sizes.push_back(static_cast<long long>(c.size()));
        members.insert(members.end(), c.begin(), c.end());
    }
    archive.put(prefix + ".d", Archive::Ints{cliques.d});
    archive.put(prefix + ".sizes", std::move(sizes));
    archive.put(prefix + ".members", std::move(members));
}

fgm::CliqueSet get_cliques(const Archive& archive, const std::string& prefix)
{
    const auto& d = archive.ints(prefix + ".d");
    const auto& sizes = archive.ints(prefix + ".sizes");
    const auto& members = archive.ints(prefix + ".members");
    if (d.size() != 1)
        throw std::runtime_error("archive: malformed clique dimension");
    fgm::CliqueSet out{static_cast<int>(d[0]), {}};
    std::size_t pos = 0;
    for (auto s : sizes) {
        if (s < 1 || pos + static_cast<std::size_t>(s) > members.size())
            throw std::runtime_error("archive: malformed clique list");
        out.cliques.emplace_back(members.begin() + static_cast<std::ptrdiff_t>(pos),
                                 members.begin() + static_cast<std::ptrdiff_t>(pos + s));
        pos += static_cast<std::size_t>(s);
    }
    if (pos != members.size())
        throw std::runtime_error("archive: trailing clique members");
    return out;
}

void put_mlp(Archive& archive, const std::string& prefix, const numkit::Mlp& net)
{
    archive.put(prefix + ".widths", Archive::Ints(net.widths().begin(), net.widths().end()));
    const auto& p = net.parameters();
    archive.put(prefix + ".params", Archive::Reals(p.data(), p.data() + p.size()));
}

numkit::Mlp get_mlp(const Archive& archive, const std::string& prefix)
{
    const auto& w = archive.ints(prefix + ".widths");
    numkit::Mlp net(std::vector<int>(w.begin(), w.end()));
    const auto& p = archive.reals(prefix + ".params");
    if (static_cast<Eigen::Index>(p.size()) != net.parameters().size())
        throw std::runtime_error("archive: parameter count does not match widths for " + prefix);
    net.parameters() = Eigen::Map<const Vector>(p.data(), static_cast<Eigen::Index>(p.size()));
    return net;
}

Archive to_archive(const OneHotCliqueModel& model)
{
    Archive a;
    a.put("kind", std::string("onehot_clique"));
    put_cliques(a, "cliques", model.cliques());
    a.put("categories", Archive::Ints(model.categories().begin(), model.categories().end()));
    a.put("theta", Archive::Reals(model.theta.data(), model.theta.data() + model.theta.size()));
    a.put("lambda", Archive::Reals{model.lambda});
    a.put("y_offset", Archive::Reals{model.y_offset});
    return a;
}

Archive to_archive(const MaskedMlpModel& model)
{
    Archive a;
    a.put("kind", std::string("masked_mlp"));
    put_cliques(a, "cliques", model.cliques());
    a.put("y_offset", Archive::Reals{model.y_offset()});
    a.put("nets", Archive::Ints{static_cast<long long>(model.nets().size())});
    for (std::size_t k = 0; k < model.nets().size(); ++k)
        put_mlp(a, "net" + std::to_string(k), model.nets()[k]);
    return a;
}

OneHotCliqueModel onehot_from_archive(const Archive& a)
{
    if (a.text("kind") != "onehot_clique")
        throw std::runtime_error("archive does not hold a one-hot clique model");
    const auto& cats = a.ints("categories");
    OneHotCliqueModel model(get_cliques(a, "cliques"), std::vector<int>(cats.begin(), cats.end()));
    const auto& theta = a.reals("theta");
    if (static_cast<Eigen::Index>(theta.size()) != model.theta.size())
        throw std::runtime_error("archive: theta length does not match cliques");
    model.theta = Eigen::Map<const Vector>(theta.data(), static_cast<Eigen::Index>(theta.size()));
    model.lambda = a.reals("lambda").at(0);
    model.y_offset = a.reals("y_offset").at(0);
    return model;
}

MaskedMlpModel masked_mlp_from_archive(const Archive& a)
{
    if (a.text("kind") != "masked_mlp")
        throw std::runtime_error("archive does not hold a masked MLP model");
    const auto count = a.ints("nets").at(0);
    std::vector<numkit::Mlp> nets;
    for (long long k = 0; k < count; ++k)
        nets.push_back(get_mlp(a, "net" + std::to_string(k)));
    return MaskedMlpModel(get_cliques(a, "cliques"), std::move(nets), a.reals("y_offset").at(0));
}

}  // namespace fgmopt::surrogate
