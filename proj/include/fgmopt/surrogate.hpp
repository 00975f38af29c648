#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fgmopt/archive.hpp"
#include "fgmopt/dataset.hpp"
#include "fgmopt/fgm.hpp"
#include "fgmopt/numkit.hpp"

namespace fgmopt::surrogate {

/// Clique-decomposed regression over a discrete space. Each clique has one
/// indicator feature per joint configuration of its variables:
///   predict(x) = y_offset + sum_C theta[offset_C + config_C(x)].
class OneHotCliqueModel {
public:
    OneHotCliqueModel() = default;
    OneHotCliqueModel(fgm::CliqueSet cliques, std::vector<int> categories);

    const fgm::CliqueSet& cliques() const { return cliques_; }
    const std::vector<int>& categories() const { return categories_; }
    std::size_t feature_count() const { return offsets_.back(); }
    /// Index into theta of x's configuration within clique c.
    std::size_t feature_index(std::size_t c, const Vector& x) const;
    std::size_t clique_offset(std::size_t c) const { return offsets_[c]; }

    Vector theta;
    double lambda = 0.0;
    double y_offset = 0.0;

    double component(std::size_t c, const Vector& x) const;
    double predict(const Vector& x) const;

private:
    fgm::CliqueSet cliques_;
    std::vector<int> categories_;
    std::vector<std::size_t> offsets_{0};
};

/// Default ridge weight 1e-6 * N.
OneHotCliqueModel fit_onehot(const Dataset& data, const fgm::CliqueSet& cliques,
                             std::optional<double> lambda = std::nullopt);

/// Hyperparameters shared by the masked and monolithic neural fitters.
struct MlpHyper {
    std::vector<int> hidden{64, 64};
    double lr = 1e-3;
    int epochs = 200;
    int batch = 128;
    std::uint64_t seed = 0;
    /// One network shared by all cliques (true) or one network per clique.
    bool shared = true;
};

/// Clique-decomposed neural regressor. Component C evaluates a network on x
/// with every coordinate outside C set to zero, so it reads only x_C.
class MaskedMlpModel {
public:
    MaskedMlpModel() = default;
    MaskedMlpModel(fgm::CliqueSet cliques, std::vector<numkit::Mlp> nets, double y_offset);

    const fgm::CliqueSet& cliques() const { return cliques_; }
    const std::vector<numkit::Mlp>& nets() const { return nets_; }
    std::vector<numkit::Mlp>& nets() { return nets_; }
    int dimension() const { return cliques_.d; }
    double y_offset() const { return y_offset_; }
    bool shared() const { return nets_.size() == 1 && cliques_.size() > 1; }

    const numkit::Mlp& net_for(std::size_t c) const { return nets_[nets_.size() == 1 ? 0 : c]; }
    Vector mask(std::size_t c) const;

    double component(std::size_t c, const Vector& x) const;
    /// y_offset + |C| * mean_C component_C(x).
    double predict(const Vector& x) const;
    Vector predict(const DenseMatrix& X) const;
    Vector gradient(const Vector& x) const;

private:
    fgm::CliqueSet cliques_;
    std::vector<numkit::Mlp> nets_;
    double y_offset_ = 0.0;
    Matrix masks_;  // |C| x d indicator rows
};

struct MlpFit {
    MaskedMlpModel model;
    double initial_mse = 0.0;
    /// Mean minibatch loss per epoch.
    std::vector<double> epoch_mse;
    double final_mse = 0.0;
};

MlpFit fit_masked_mlp(const Dataset& data, const fgm::CliqueSet& cliques, const MlpHyper& hyper);
/// Naive baseline: the single clique {0..d-1}.
MlpFit fit_full_mlp(const Dataset& data, const MlpHyper& hyper);

double mean_squared_error(const MaskedMlpModel& model, const Dataset& data);
double mean_squared_error(const OneHotCliqueModel& model, const Dataset& data);

inline double predict(const OneHotCliqueModel& m, const Vector& x) { return m.predict(x); }
inline double predict(const MaskedMlpModel& m, const Vector& x) { return m.predict(x); }
inline Vector predict_gradient(const MaskedMlpModel& m, const Vector& x) { return m.gradient(x); }

Archive to_archive(const OneHotCliqueModel& model);
Archive to_archive(const MaskedMlpModel& model);
OneHotCliqueModel onehot_from_archive(const Archive& archive);
MaskedMlpModel masked_mlp_from_archive(const Archive& archive);

// Helpers shared with other archive users.
void put_cliques(Archive& archive, const std::string& prefix, const fgm::CliqueSet& cliques);
fgm::CliqueSet get_cliques(const Archive& archive, const std::string& prefix);
void put_mlp(Archive& archive, const std::string& prefix, const numkit::Mlp& net);
numkit::Mlp get_mlp(const Archive& archive, const std::string& prefix);

}  // namespace fgmopt::surrogate
