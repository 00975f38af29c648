#include "fgmopt/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "fgmopt/bench.hpp"
#include "fgmopt/discovery.hpp"
#include "fgmopt/optimize.hpp"
#include "fgmopt/surrogate.hpp"
#include "fgmopt/vae.hpp"

namespace fgmopt::cli {

namespace {

// Per-seed stream identifiers. Every method of a seed sees the same data.
enum Stream : std::uint64_t {
    kData = 1,
    kSplit = 2,
    kFit = 3,
    kAscent = 4,
    kArgmax = 5,
    kVae = 6,
    kValue = 7,
    kProblem = 8,
};

constexpr int kPolicySamples = 10000;

std::string csv_escape(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += (c == '\n') ? ' ' : c;
    }
    return out + '"';
}

std::string format_value(double v)
{
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class RowSink {
public:
    RowSink(const RunConfig& config, const Cell& cell) : config_(config), cell_(cell) {}

    void add(const std::string& metric, double value)
    {
        rows.push_back({to_string(config_.kind), cell_.method, config_.d, config_.n, cell_.seed,
                        metric, value, {}});
    }

    std::vector<ResultRow> rows;

private:
    const RunConfig& config_;
    const Cell& cell_;
};

numkit::Rng stream(std::uint64_t seed, Stream s)
{
    return numkit::Rng(seed).split(s);
}

surrogate::MlpHyper mlp_hyper(const RunConfig& c, std::uint64_t seed)
{
    surrogate::MlpHyper h;
    h.hidden = c.surrogate.hidden;
    h.lr = c.surrogate.lr;
    h.epochs = c.surrogate.epochs;
    h.batch = c.surrogate.batch;
    h.shared = c.surrogate.shared;
    h.seed = stream(seed, kFit).next_u64();
    return h;
}

optimize::AscentOptions ascent_options(const RunConfig& c)
{
    optimize::AscentOptions o;
    o.steps = c.optimize.steps;
    o.lr = c.optimize.lr;
    o.batch = c.optimize.batch;
    o.learn_std = c.optimize.learn_std;
    o.eval_samples = c.optimize.eval_samples;
    return o;
}

// Monte Carlo policy value from a fixed seed; invalid designs are skipped
// and reported through `valid_fraction`.
struct PolicyValue {
    double value = 0.0;
    double valid_fraction = 1.0;
};

PolicyValue policy_value(const optimize::GaussianPolicy& policy, const optimize::AscentHooks& hooks,
                         std::uint64_t seed)
{
    numkit::Rng rng = stream(seed, kValue);
    double total = 0.0;
    int valid = 0;
    for (int k = 0; k < kPolicySamples; ++k) {
        const Vector x = policy.sample(rng);
        const Vector xo = hooks.to_oracle_space ? hooks.to_oracle_space(x) : x;
        if (hooks.valid && !hooks.valid(xo))
            continue;
        total += hooks.oracle(xo);
        ++valid;
    }
    return {valid > 0 ? total / valid : std::numeric_limits<double>::quiet_NaN(),
            static_cast<double>(valid) / kPolicySamples};
}

void write_trace(const std::filesystem::path& dir, const Cell& cell,
                 const optimize::OptimizationTrace& trace)
{
    if (dir.empty())
        return;
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / (cell.method + "_seed" + std::to_string(cell.seed) + ".csv"));
    optimize::write_csv(out, trace);
}

// Runs ascent and reports the standard metric block shared by the continuous
// experiments.
void ascend_and_report(RowSink& sink, const RunConfig& c, const Cell& cell,
                       const optimize::DifferentiableSurrogate& model,
                       const optimize::GaussianPolicy& init, const optimize::AscentHooks& hooks,
                       const std::filesystem::path& trace_dir)
{
    numkit::Rng rng = stream(cell.seed, kAscent);
    const auto result = optimize::ascend_policy(model, init, ascent_options(c), rng, hooks);
    const auto& records = result.trace.records;
    sink.add("surrogate_init", records.front().surrogate_value);
    sink.add("surrogate_final", records.back().surrogate_value);
    const PolicyValue before = policy_value(init, hooks, cell.seed);
    const PolicyValue after = policy_value(result.policy, hooks, cell.seed);
    sink.add("value_init", before.value);
    sink.add("value_final", after.value);
    if (hooks.valid) {
        double valid_total = 0.0;
        int invalid_batches = 0;
        for (const auto& r : records) {
            valid_total += r.valid_fraction;
            if (r.valid_fraction < 1.0)
                ++invalid_batches;
        }
        sink.add("valid_fraction", valid_total / static_cast<double>(records.size()));
        sink.add("invalid_batches", invalid_batches);
    }
    write_trace(trace_dir, cell, result.trace);
}

optimize::GaussianPolicy start_policy(const Vector& mean, double std)
{
    return {mean, Vector::Constant(mean.size(), std)};
}

fgm::CliqueSet discover(const DenseMatrix& X, const Vector& y, const RunConfig& c,
                        const fgm::FgmGraph& truth, RowSink& sink)
{
    const auto ph = discovery::estimate_pseudo_hessian(X, y);
    const auto graph = discovery::edge_test(ph, {c.discovery.alpha, c.discovery.unit_sigma});
    sink.add("ged", fgm::normalized_ged(graph, truth));
    return fgm::maximal_cliques(graph);
}

// --- experiments -----------------------------------------------------------

void quadratic_cycle_regret(RowSink& sink, const RunConfig& c, const Cell& cell)
{
    const auto bench = bench::gen_quadratic_cycle(c.d);
    numkit::Rng data_rng = stream(cell.seed, kData);
    const Dataset data = bench::sample_dataset(bench, c.n, data_rng);
    optimize::ArgmaxOptions argmax;
    argmax.restarts = c.optimize.restarts;
    argmax.seed = stream(cell.seed, kArgmax).next_u64();

    if (cell.method == "best-in-dataset") {
        sink.add("regret", optimize::regret(optimize::best_in_dataset(data).x, bench));
        return;
    }
    const fgm::CliqueSet cliques =
        cell.method == "fgm" ? bench.cliques : fgm::make_clique_set(c.d, {[&] {
                                   fgm::Clique all(static_cast<std::size_t>(c.d));
                                   for (int i = 0; i < c.d; ++i)
                                       all[static_cast<std::size_t>(i)] = i;
                                   return all;
                               }()});
    const auto model = surrogate::fit_onehot(data, cliques, c.surrogate.lambda);
    const auto design = optimize::argmax_discrete(model, argmax);
    sink.add("regret", optimize::regret(design.x, bench));
    if (cliques.size() > 1)
        sink.add("sigma_hat", bench::clique_correlation(model, data.X).max_off_diagonal);
}

void rbf_discovery(RowSink& sink, const RunConfig& c, const Cell& cell)
{
    const auto bench = bench::gen_rbf_mixture(c.d, c.pattern, cell.seed);
    numkit::Rng data_rng = stream(cell.seed, kData);
    const Dataset data = bench::sample_dataset(bench, c.n, data_rng);
    const auto ph = discovery::estimate_pseudo_hessian(data.X, data.y);
    const auto graph = discovery::edge_test(ph, {c.discovery.alpha, c.discovery.unit_sigma});
    sink.add("ged", fgm::normalized_ged(graph, bench.ground_truth()));
    sink.add("edges", static_cast<double>(graph.edge_count()));
}

void rbf_optimize(RowSink& sink, const RunConfig& c, const Cell& cell,
                  const std::filesystem::path& trace_dir)
{
    const auto bench = bench::gen_rbf_mixture(c.d, c.pattern, cell.seed);
    numkit::Rng data_rng = stream(cell.seed, kData);
    const Dataset data = bench::sample_dataset(bench, c.n, data_rng);
    const auto best = optimize::best_in_dataset(data);
    optimize::AscentHooks hooks;
    hooks.oracle = [&bench](const Vector& x) { return bench.evaluate(x); };

    if (cell.method == "best-in-dataset") {
        sink.add("value_final", best.value);
        return;
    }
    if (cell.method == "rwr") {
        const auto policy = optimize::rwr_baseline(data, c.optimize.rwr_temperature);
        sink.add("value_final", policy_value(policy, hooks, cell.seed).value);
        return;
    }
    numkit::Rng split_rng = stream(cell.seed, kSplit);
    const auto [train, held_out] = split_dataset(data, c.surrogate.train_fraction, split_rng);
    surrogate::MlpFit fit;
    if (cell.method == "fgm") {
        const auto cliques = discover(data.X, data.y, c, bench.ground_truth(), sink);
        fit = surrogate::fit_masked_mlp(train, cliques, mlp_hyper(c, cell.seed));
    } else {
        fit = surrogate::fit_full_mlp(train, mlp_hyper(c, cell.seed));
    }
    if (held_out.size() > 0)
        sink.add("heldout_mse", surrogate::mean_squared_error(fit.model, held_out));
    ascend_and_report(sink, c, cell, optimize::as_differentiable(fit.model),
                      start_policy(best.x, c.optimize.init_std), hooks, trace_dir);
}

void transformed_pipeline(RowSink& sink, const RunConfig& c, const Cell& cell,
                          const std::filesystem::path& trace_dir)
{
    const auto base = bench::gen_rbf_mixture(c.d, c.pattern, cell.seed);
    const auto bench = bench::transform_observable(base, cell.seed);
    numkit::Rng data_rng = stream(cell.seed, kData);
    const Dataset data = bench::sample_dataset(bench, c.n, data_rng);
    const auto best = optimize::best_in_dataset(data);
    optimize::AscentHooks hooks;
    hooks.oracle = [&bench](const Vector& x) { return bench.evaluate(x); };
    hooks.valid = [&bench](const Vector& x) { return bench.is_valid(x); };

    if (cell.method == "best-in-dataset") {
        sink.add("value_final", best.value);
        return;
    }
    if (cell.method == "rwr") {
        const auto policy = optimize::rwr_baseline(data, c.optimize.rwr_temperature);
        const auto pv = policy_value(policy, hooks, cell.seed);
        sink.add("value_final", pv.value);
        sink.add("valid_fraction", pv.valid_fraction);
        return;
    }
    numkit::Rng split_rng = stream(cell.seed, kSplit);
    if (cell.method == "naive-full") {
        const auto [train, held_out] = split_dataset(data, c.surrogate.train_fraction, split_rng);
        const auto fit = surrogate::fit_full_mlp(train, mlp_hyper(c, cell.seed));
        if (held_out.size() > 0)
            sink.add("heldout_mse", surrogate::mean_squared_error(fit.model, held_out));
        ascend_and_report(sink, c, cell, optimize::as_differentiable(fit.model),
                          start_policy(best.x, c.optimize.init_std), hooks, trace_dir);
        return;
    }

    // vae-fgm and vae-ga: encode, whiten, (discover), fit and ascend in latent space.
    const int dz = c.vae.latent_dim > 0 ? c.vae.latent_dim : c.d;
    vae::VaeHyper vh;
    vh.hidden = c.vae.hidden;
    vh.lr = c.vae.lr;
    vh.epochs = c.vae.epochs;
    vh.batch = c.vae.batch;
    vh.noise_scale = c.vae.noise_scale;
    vh.seed = stream(cell.seed, kVae).next_u64();

    std::optional<discovery::EmaAccumulator> ema;
    vae::BatchObserver observer;
    if (c.vae.interleaved && cell.method == "vae-fgm") {
        ema.emplace(dz, c.discovery.ema_momentum, c.discovery.ema_burn_in);
        auto counter = std::make_shared<long>(0);
        observer = [&ema, &data, counter, interval = c.vae.graph_interval](
                       const DenseMatrix& z, const std::vector<std::size_t>& rows) {
            if ((*counter)++ % interval != 0)
                return;
            Vector yb(static_cast<Eigen::Index>(rows.size()));
            for (std::size_t k = 0; k < rows.size(); ++k)
                yb(static_cast<Eigen::Index>(k)) = data.y(static_cast<Eigen::Index>(rows[k]));
            ema->update(z, yb);
        };
    }
    const auto vfit = vae::train_vae(data.X, dz, vh, observer);
    const auto& model = vfit.model;
    sink.add("vae_loss", vfit.epoch_loss.back());
    const DenseMatrix Z = vae::encode(model, data.X);
    const auto white = discovery::whiten_fit(Z);
    const DenseMatrix Zw = white.apply(Z);
    const Dataset latent{Zw, data.y, Space::continuous(dz)};

    numkit::Rng latent_split = stream(cell.seed, kSplit);
    const auto [train, held_out] = split_dataset(latent, c.surrogate.train_fraction, latent_split);
    surrogate::MlpFit fit;
    if (cell.method == "vae-fgm") {
        fgm::CliqueSet cliques;
        const auto truth = dz == c.d ? base.ground_truth() : fgm::FgmGraph(dz);
        if (ema && ema->ready()) {
            const auto graph = discovery::edge_test(ema->estimate(),
                                                    {c.discovery.alpha, c.discovery.unit_sigma});
            sink.add("ged", fgm::normalized_ged(graph, truth));
            cliques = fgm::maximal_cliques(graph);
        } else {
            cliques = discover(Zw, data.y, c, truth, sink);
        }
        fit = surrogate::fit_masked_mlp(train, cliques, mlp_hyper(c, cell.seed));
    } else {
        fit = surrogate::fit_full_mlp(train, mlp_hyper(c, cell.seed));
    }
    if (held_out.size() > 0)
        sink.add("heldout_mse", surrogate::mean_squared_error(fit.model, held_out));
    hooks.to_oracle_space = [&model, &white](const Vector& z) {
        return vae::decode(model, white.invert(z));
    };
    const Vector start = Zw.row(best.row).transpose();
    ascend_and_report(sink, c, cell, optimize::as_differentiable(fit.model),
                      start_policy(start, c.optimize.init_std), hooks, trace_dir);
}

// Point mass at the all-ones design against the empirical distribution of n
// uniform rows, on the quadratic-cycle cliques.
void coverage_demo(RowSink& sink, const RunConfig& c, const Cell& cell)
{
    const auto bench = bench::gen_quadratic_cycle(c.d);
    const std::size_t states = std::size_t{1} << c.d;
    Vector pi = Vector::Zero(static_cast<Eigen::Index>(states));
    pi(static_cast<Eigen::Index>(states - 1)) = 1.0;
    const Vector uniform = Vector::Constant(static_cast<Eigen::Index>(states), 1.0 / states);
    const auto exact = bench::coverage_ratios(pi, uniform, bench.space.categories, bench.cliques);
    sink.add("coverage_full_uniform", exact.full_max);
    sink.add("coverage_clique_uniform", exact.clique_wise_max);

    numkit::Rng data_rng = stream(cell.seed, kData);
    const Dataset data = bench::sample_dataset(bench, c.n, data_rng);
    Vector p = Vector::Zero(static_cast<Eigen::Index>(states));
    for (Eigen::Index r = 0; r < data.size(); ++r) {
        std::size_t index = 0;
        for (int k = 0; k < c.d; ++k)
            index = 2 * index + static_cast<std::size_t>(data.X(r, k));
        p(static_cast<Eigen::Index>(index)) += 1.0 / static_cast<double>(data.size());
    }
    const auto empirical = bench::coverage_ratios(pi, p, bench.space.categories, bench.cliques);
    sink.add("coverage_full", empirical.full_max);
    sink.add("coverage_clique", empirical.clique_wise_max);
}

// Pseudo-Hessian of f(x) = x^T Q x against its exact smoothed Hessian Q + Q^T.
void stein_check(RowSink& sink, const RunConfig& c, const Cell& cell)
{
    numkit::Rng problem = stream(cell.seed, kProblem);
    const Matrix Q = problem.normal_matrix(c.d, c.d);
    numkit::Rng data_rng = stream(cell.seed, kData);
    const DenseMatrix X = data_rng.normal_matrix(c.n, c.d);
    const Vector y = (X * Q).cwiseProduct(X).rowwise().sum();
    const auto ph = discovery::estimate_pseudo_hessian(X, y);
    const Matrix target = Q + Q.transpose();
    double z_max = 0.0;
    int violations = 0;
    for (int i = 0; i < c.d; ++i)
        for (int j = i + 1; j < c.d; ++j) {
            const double z = std::abs(ph.H(i, j) - target(i, j)) *
                             std::sqrt(static_cast<double>(ph.samples)) / ph.sigma(i, j);
            z_max = std::max(z_max, z);
            if (z > 4.0)
                ++violations;
        }
    sink.add("z_max", z_max);
    sink.add("violations", violations);
}

}  // namespace

const std::string& results_header()
{
    static const std::string header = "experiment,method,d,n,seed,metric,value,message";
    return header;
}

std::string format_row(const ResultRow& row)
{
    std::ostringstream out;
    out << row.experiment << ',' << row.method << ',' << row.d << ',' << row.n << ',' << row.seed
        << ',' << row.metric << ',' << (row.metric == "error" ? "" : format_value(row.value))
        << ',' << csv_escape(row.message);
    return out.str();
}

std::vector<Cell> plan_cells(const RunConfig& config)
{
    std::vector<Cell> cells;
    for (const auto seed : config.seeds)
        for (const auto& method : config.methods)
            cells.push_back({seed, method});
    return cells;
}

std::string describe_plan(const RunConfig& config)
{
    std::ostringstream out;
    out << "experiment " << to_string(config.kind) << ", d = " << config.d << ", n = " << config.n;
    if (!config.pattern.empty())
        out << ", pattern " << config.pattern;
    out << '\n' << config.seeds.size() << " seed(s) x " << config.methods.size()
        << " method(s) = " << config.seeds.size() * config.methods.size() << " cell(s)\n";
    out << "methods:";
    for (const auto& m : config.methods)
        out << ' ' << m;
    out << "\nseeds:";
    for (const auto s : config.seeds)
        out << ' ' << s;
    out << "\noutput: " << config.out_dir.string() << '\n';
    return out.str();
}

std::vector<ResultRow> run_cell(const RunConfig& config, const Cell& cell,
                                const std::filesystem::path& trace_dir)
{
    RowSink sink(config, cell);
    try {
        switch (config.kind) {
        case ExperimentKind::QuadraticCycleRegret: quadratic_cycle_regret(sink, config, cell); break;
        case ExperimentKind::RbfDiscovery: rbf_discovery(sink, config, cell); break;
        case ExperimentKind::RbfOptimize: rbf_optimize(sink, config, cell, trace_dir); break;
        case ExperimentKind::TransformedPipeline:
            transformed_pipeline(sink, config, cell, trace_dir);
            break;
        case ExperimentKind::CoverageDemo: coverage_demo(sink, config, cell); break;
        case ExperimentKind::SteinCheck: stein_check(sink, config, cell); break;
        }
    } catch (const std::exception& e) {
        ResultRow row{to_string(config.kind), cell.method, config.d, config.n, cell.seed, "error",
                      0.0, e.what()};
        return {row};
    }
    return sink.rows;
}

RunSummary run_pipeline(const RunConfig& config, std::ostream& results, int workers,
                        std::ostream* timings, const std::filesystem::path& trace_dir)
{
    const auto cells = plan_cells(config);
    struct Done {
        std::vector<ResultRow> rows;
        double seconds = 0.0;
    };
    std::vector<std::optional<Done>> done(cells.size());
    std::size_t flushed = 0;
    RunSummary summary{cells.size(), 0};
    std::mutex writer;
    std::atomic<std::size_t> next{0};

    results << results_header() << '\n';
    if (timings)
        *timings << "experiment,method,seed,seconds\n";

    auto work = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= cells.size())
                return;
            const auto start = std::chrono::steady_clock::now();
            auto rows = run_cell(config, cells[k], trace_dir);
            const double seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            std::lock_guard lock(writer);
            done[k] = Done{std::move(rows), seconds};
            // Single writer: emit the contiguous completed prefix in plan order.
            while (flushed < done.size() && done[flushed]) {
                const Cell& cell = cells[flushed];
                for (const auto& row : done[flushed]->rows) {
                    results << format_row(row) << '\n';
                    if (row.metric == "error")
                        ++summary.failed;
                }
                results.flush();
                if (timings) {
                    char buf[64];
                    std::snprintf(buf, sizeof buf, "%.3f", done[flushed]->seconds);
                    *timings << to_string(config.kind) << ',' << cell.method << ',' << cell.seed
                             << ',' << buf << '\n';
                }
                done[flushed].reset();
                ++flushed;
            }
        }
    };

    const int threads = std::max(1, std::min<int>(workers, static_cast<int>(cells.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t)
        pool.emplace_back(work);
    work();
    for (auto& t : pool)
        t.join();
    return summary;
}

}  // namespace fgmopt::cli
