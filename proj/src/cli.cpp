#include "gmmsom/cli.h"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gmmsom/artifacts.h"
#include "gmmsom/checkpoint.h"
#include "gmmsom/config.h"
#include "gmmsom/inference.h"
#include "gmmsom/io.h"
#include "gmmsom/som.h"
#include "gmmsom/trainer.h"

namespace gmmsom {

namespace {

constexpr double kEquivalenceTolerance = 1e-10;

DataSet truncate(DataSet data, std::size_t max_samples) {
    if (max_samples == 0 || max_samples >= data.count()) return data;
    Matrix head(max_samples, data.dim());
    std::copy_n(data.samples.values().begin(), max_samples * data.dim(), head.values().begin());
    DataSource meta = data.meta;
    if (!meta.idx_dims.empty()) meta.idx_dims[0] = static_cast<std::uint32_t>(max_samples);
    return DataSet(std::move(head), std::move(meta));
}

ImageShape image_shape(const RunConfig& rc, const DataSet& data) {
    if (rc.image_rows || rc.image_cols) return {rc.image_rows, rc.image_cols};
    const auto& dims = data.meta.idx_dims;
    if (dims.size() >= 3) return {dims[1], data.dim() / dims[1]};
    return {1, data.dim()};
}

int run_train(const std::string& config_path, std::optional<std::uint64_t> seed,
              const std::string& resume_path, std::ostream& out) {
    RunConfig rc = load_run_config(config_path);
    if (seed) {
        rc.train.seed = *seed;
        rc.has_seed = true;
    }
    if (!rc.has_seed) throw UsageError("train requires a seed (config key 'seed' or --seed)");
    if (rc.data.empty()) throw UsageError("config is missing 'data'");

    const DataSet data = truncate(load_dataset(rc.data, rc.data_format), rc.max_samples);
    data.validate();
    const ImageShape shape = image_shape(rc, data);
    std::filesystem::create_directories(rc.output_dir);

    const std::string config_text = render_run_config(rc);
    const std::string config_hash =
        crc32_hex({reinterpret_cast<const unsigned char*>(config_text.data()), config_text.size()});
    const std::string data_hash = hash_dataset(data);

    std::optional<Trainer> trainer;
    if (!resume_path.empty()) {
        const Checkpoint ckpt = load_checkpoint(resume_path);
        trainer.emplace(rc.train, data, restore_state(ckpt, rc.train));
    } else {
        trainer.emplace(rc.train, data);
    }
    try {
        trainer->run();
    } catch (const NumericAbort& abort) {
        TrainState snapshot = trainer->state();
        snapshot.model = abort.snapshot;
        snapshot.t = abort.iteration;
        save_checkpoint(rc.output_dir / "abort.ckpt",
                        make_checkpoint(rc.train, snapshot, data_hash, config_hash));
        emit_schedule_trace(trainer->state().history, rc.output_dir / "schedule.csv");
        throw;
    }

    const TrainState& state = trainer->state();
    save_checkpoint(rc.output_dir / "model.ckpt", make_checkpoint(rc.train, state, data_hash, config_hash));
    emit_centroid_grid(state.model, rc.train.topology(), shape, rc.output_dir / "centroids.pgm");
    emit_schedule_trace(state.history, rc.output_dir / "schedule.csv");

    const HistoryRow& last = state.history.back();
    out << "iterations " << state.t << '\n'
        << "loss " << format_double(last.loss) << '\n'
        << "diagnosis " << to_string(last.diagnosis) << '\n'
        << "checkpoint " << (rc.output_dir / "model.ckpt").string() << '\n';
    return kExitOk;
}

void print_matrix(std::ostream& out, const Matrix& m) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto row = m.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_double(row[c]);
        out << '\n';
    }
}

int run_score(const std::string& model_path, const std::string& data_path, std::size_t window,
              const std::string& reference_path, double percentile, std::ostream& out) {
    const Checkpoint ckpt = load_checkpoint(model_path);
    const DataSet data = load_dataset(data_path);
    std::optional<DataSet> reference;
    if (!reference_path.empty()) reference = load_dataset(reference_path);
    const OutlierReport report =
        score_batch(data, ckpt.model, window, reference ? &*reference : nullptr, percentile);
    out << "index,score,window_mean" << (report.threshold ? ",outlier" : "") << '\n';
    for (std::size_t n = 0; n < report.scores.size(); ++n) {
        out << n << ',' << format_double(report.scores[n]) << ',' << format_double(report.window_means[n]);
        if (report.threshold) out << ',' << (report.outlier[n] ? 1 : 0);
        out << '\n';
    }
    return kExitOk;
}

int run_cluster(const std::string& model_path, const std::string& data_path, std::ostream& out) {
    const Checkpoint ckpt = load_checkpoint(model_path);
    const DataSet data = load_dataset(data_path);
    out << "index,cluster\n";
    for (std::size_t n = 0; n < data.count(); ++n) out << n << ',' << assign_cluster(data[n], ckpt.model) << '\n';
    return kExitOk;
}

int run_sample(const std::string& model_path, long long count, std::uint64_t seed, std::ostream& out) {
    if (count < 1) throw UsageError("sample count must be >= 1");
    const Checkpoint ckpt = load_checkpoint(model_path);
    Rng rng(seed);
    print_matrix(out, sample(ckpt.model, static_cast<std::size_t>(count), rng));
    return kExitOk;
}

int run_verify(const std::string& model_path, const std::string& data_path, std::optional<double> sigma,
               std::ostream& out) {
    Checkpoint ckpt = load_checkpoint(model_path);
    if (!ckpt.model.tied_spherical) throw InputError("verify-equivalence needs a tied spherical model");
    const DataSet data = load_dataset(data_path);
    const double s = sigma.value_or(ckpt.kernel_sigma);
    const GridTopology topology = ckpt.topology();
    NeighborhoodKernel kernel =
        s > 0.0 ? build_kernel(topology, s) : NeighborhoodKernel::identity(ckpt.model.components());
    const SomView view(ckpt.model, topology, std::move(kernel));
    const EquivalenceReport r = verify_equivalence(data, view);
    out << "lhs " << format_double(r.lhs) << '\n'
        << "rhs " << format_double(r.rhs) << '\n'
        << "energy " << format_double(r.energy) << '\n'
        << "log_k_term " << format_double(r.log_k_term) << '\n'
        << "normalizer " << format_double(r.normalizer) << '\n'
        << "max_abs_err " << format_double(r.max_abs_err) << '\n';
    if (!(r.max_abs_err <= kEquivalenceTolerance)) {
        throw NumericError("equivalence discrepancy " + format_double(r.max_abs_err) + " exceeds 1e-10");
    }
    return kExitOk;
}

int run_inspect(const std::string& model_path, std::ostream& out) {
    const Checkpoint c = load_checkpoint(model_path);
    const MixtureModel& m = c.model;
    out << "version " << c.version << '\n'
        << "regime " << to_string(c.regime) << '\n'
        << "grid " << (c.grid == GridKind::Square ? "2d" : "1d") << (c.periodic ? " periodic" : "") << '\n'
        << "components " << m.components() << '\n'
        << "dim " << m.dim() << '\n'
        << "tied_spherical " << (m.tied_spherical ? "true" : "false") << '\n'
        << "iteration " << c.iteration << '\n'
        << "seed " << c.seed << '\n'
        << "kernel_sigma " << format_double(c.kernel_sigma) << '\n'
        << "data_hash " << c.data_hash << '\n'
        << "config_hash " << c.config_hash << '\n';
    out << "weights";
    for (double w : m.weights) out << ' ' << format_double(w);
    out << '\n';
    const auto d = m.precision_roots.values();
    const auto [lo, hi] = std::minmax_element(d.begin(), d.end());
    out << "precision_root_range " << format_double(*lo) << ' ' << format_double(*hi) << '\n';
    return kExitOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"SGD-trained Gaussian mixtures and self-organizing maps", "gmmsom"};
    app.require_subcommand(1);

    std::string config_path, resume_path, model_path, data_path, reference_path;
    std::optional<std::uint64_t> train_seed;
    std::optional<double> sigma;
    std::size_t window = 10;
    double percentile = 1.0;
    long long count = 0;
    std::uint64_t sample_seed = 0;

    auto* train = app.add_subcommand("train", "train a model from a run configuration");
    train->add_option("--config", config_path, "run configuration file")->required();
    train->add_option("--seed", train_seed, "override the configured seed");
    train->add_option("--resume", resume_path, "continue from a checkpoint");

    auto* score = app.add_subcommand("score", "per-sample outlier scores");
    score->add_option("--model", model_path)->required();
    score->add_option("--data", data_path)->required();
    score->add_option("--window", window, "samples per averaged score");
    score->add_option("--reference", reference_path, "inlier batch for threshold calibration");
    score->add_option("--percentile", percentile, "reference percentile used as threshold");

    auto* cluster = app.add_subcommand("cluster", "assign samples to components");
    cluster->add_option("--model", model_path)->required();
    cluster->add_option("--data", data_path)->required();

    auto* sample_cmd = app.add_subcommand("sample", "draw samples from a model");
    sample_cmd->add_option("--model", model_path)->required();
    sample_cmd->add_option("-n,--count", count)->required();
    sample_cmd->add_option("--seed", sample_seed)->required();

    auto* verify = app.add_subcommand("verify-equivalence", "check the SOM energy identity on data");
    verify->add_option("--model", model_path)->required();
    verify->add_option("--data", data_path)->required();
    verify->add_option("--sigma", sigma, "kernel radius (default: the checkpoint's)");

    auto* inspect = app.add_subcommand("inspect", "print checkpoint metadata");
    inspect->add_option("--model", model_path)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*train) return run_train(config_path, train_seed, resume_path, out);
        if (*score) return run_score(model_path, data_path, window, reference_path, percentile, out);
        if (*cluster) return run_cluster(model_path, data_path, out);
        if (*sample_cmd) return run_sample(model_path, count, sample_seed, out);
        if (*verify) return run_verify(model_path, data_path, sigma, out);
        if (*inspect) return run_inspect(model_path, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const NumericError& e) {
        err << "numeric abort: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const InputError& e) {
        err << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "data error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}

}  // namespace gmmsom
