#include "gmmsom/config.h"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "gmmsom/errors.h"
#include "gmmsom/io.h"

namespace gmmsom {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
    throw UsageError("config: invalid value '" + value + "' for key '" + key + "'");
}

double as_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v);
    return out;
}

std::size_t as_size(const std::string& key, const std::string& v) {
    std::size_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v);
    return out;
}

bool as_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    bad_value(key, v);
}

// Iteration value, absolute or as a fraction of T ("0.3T").
struct IterValue {
    double value = 0.0;
    bool relative = false;
};

IterValue as_iter(const std::string& key, const std::string& v) {
    if (!v.empty() && v.back() == 'T') return {as_double(key, v.substr(0, v.size() - 1)), true};
    return {as_double(key, v), false};
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir) {
    RunConfig rc;
    TrainConfig& tc = rc.train;
    std::optional<IterValue> t0, t_inf;
    std::optional<std::string> sigma_conv;

    using Setter = std::function<void(const std::string&, const std::string&)>;
    const std::map<std::string, Setter, std::less<>> setters = {
        {"data", [&](auto&, auto& v) { rc.data = base_dir / v; }},
        {"data_format", [&](auto& k, auto& v) {
             if (v != "auto" && v != "idx" && v != "csv") bad_value(k, v);
             rc.data_format = v;
         }},
        {"max_samples", [&](auto& k, auto& v) { rc.max_samples = as_size(k, v); }},
        {"output_dir", [&](auto&, auto& v) { rc.output_dir = base_dir / v; }},
        {"image_rows", [&](auto& k, auto& v) { rc.image_rows = as_size(k, v); }},
        {"image_cols", [&](auto& k, auto& v) { rc.image_cols = as_size(k, v); }},
        {"loss_regime", [&](auto&, auto& v) { tc.regime = parse_regime(v); }},
        {"components", [&](auto& k, auto& v) { tc.components = as_size(k, v); }},
        {"grid", [&](auto& k, auto& v) {
             if (v == "2d" || v == "square") {
                 tc.grid = GridKind::Square;
             } else if (v == "1d" || v == "line") {
                 tc.grid = GridKind::Line;
             } else {
                 bad_value(k, v);
             }
         }},
        {"periodic", [&](auto& k, auto& v) { tc.periodic = as_bool(k, v); }},
        {"batch_size", [&](auto& k, auto& v) { tc.batch_size = as_size(k, v); }},
        {"iterations", [&](auto& k, auto& v) { tc.iterations = as_size(k, v); }},
        {"t0", [&](auto& k, auto& v) { t0 = as_iter(k, v); }},
        {"t_inf", [&](auto& k, auto& v) { t_inf = as_iter(k, v); }},
        {"sigma0", [&](auto& k, auto& v) { tc.sigma.start = as_double(k, v); }},
        {"sigma_inf", [&](auto& k, auto& v) { tc.sigma.end = as_double(k, v); }},
        {"epsilon0", [&](auto& k, auto& v) { tc.epsilon.start = as_double(k, v); }},
        {"epsilon_inf", [&](auto& k, auto& v) { tc.epsilon.end = as_double(k, v); }},
        {"decay", [&](auto& k, auto& v) {
             if (v != "continuous" && v != "literal") bad_value(k, v);
             sigma_conv = v;
         }},
        {"annealing", [&](auto& k, auto& v) { tc.annealing = as_bool(k, v); }},
        {"init_centroids", [&](auto& k, auto& v) {
             if (v == "small_random") {
                 tc.init.centroids = CentroidInit::SmallRandom;
             } else if (v == "data_mean") {
                 tc.init.centroids = CentroidInit::DataMean;
             } else {
                 bad_value(k, v);
             }
         }},
        {"init_centroid_scale", [&](auto& k, auto& v) { tc.init.centroid_scale = as_double(k, v); }},
        {"init_precision_sq", [&](auto& k, auto& v) { tc.init.precision_sq = as_double(k, v); }},
        {"tied_spherical", [&](auto& k, auto& v) { tc.tied_spherical = as_bool(k, v); }},
        {"train_weights", [&](auto& k, auto& v) { tc.train_weights = as_bool(k, v); }},
        {"train_precisions", [&](auto& k, auto& v) { tc.train_precisions = as_bool(k, v); }},
        {"precision_min", [&](auto& k, auto& v) { tc.bounds.min = as_double(k, v); }},
        {"precision_max", [&](auto& k, auto& v) { tc.bounds.max = as_double(k, v); }},
        {"weight_floor", [&](auto& k, auto& v) { tc.weight_floor = as_double(k, v); }},
        {"seed", [&](auto& k, auto& v) {
             std::uint64_t s = 0;
             const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), s);
             if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(k, v);
             tc.seed = s;
             rc.has_seed = true;
         }},
        {"history_every", [&](auto& k, auto& v) { tc.history_every = as_size(k, v); }},
        {"sampling", [&](auto& k, auto& v) {
             if (v == "replacement") {
                 tc.sampling = BatchSampling::WithReplacement;
             } else if (v == "epoch") {
                 tc.sampling = BatchSampling::EpochPermutation;
             } else {
                 bad_value(k, v);
             }
         }},
        {"probe_size", [&](auto& k, auto& v) { tc.probe_size = as_size(k, v); }},
        {"collapse_degenerate_distance", [&](auto& k, auto& v) { tc.collapse.degenerate_distance = as_double(k, v); }},
        {"collapse_uniform_tolerance", [&](auto& k, auto& v) { tc.collapse.uniform_tolerance = as_double(k, v); }},
        {"collapse_single_weight", [&](auto& k, auto& v) { tc.collapse.single_weight = as_double(k, v); }},
        {"collapse_sparse_fraction", [&](auto& k, auto& v) { tc.collapse.sparse_fraction = as_double(k, v); }},
        {"kernel_rebuild_tolerance", [&](auto& k, auto& v) { tc.kernel_rebuild_tolerance = as_double(k, v); }},
    };

    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string value = trim(std::string_view(body).substr(eq + 1));
        const auto it = setters.find(key);
        if (it == setters.end()) {
            throw UsageError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
        if (!seen.insert(key).second) {
            throw UsageError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
        }
        it->second(key, value);
    }

    const double T = static_cast<double>(tc.iterations);
    auto resolve = [T](const IterValue& v) { return v.relative ? v.value * T : v.value; };
    const double first = resolve(t0.value_or(IterValue{0.3, true}));
    const double last = resolve(t_inf.value_or(IterValue{0.8, true}));
    tc.sigma.t0 = tc.epsilon.t0 = first;
    tc.sigma.t_inf = tc.epsilon.t_inf = last;
    const auto conv = sigma_conv == "literal" ? DecayConvention::Literal : DecayConvention::Continuous;
    tc.sigma.convention = tc.epsilon.convention = conv;

    tc.validate();
    return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str(), path.parent_path());
}

std::string render_run_config(const RunConfig& rc) {
    const TrainConfig& tc = rc.train;
    std::ostringstream out;
    auto b = [](bool v) { return v ? "true" : "false"; };
    out << "data = " << rc.data.string() << '\n'
        << "data_format = " << rc.data_format << '\n'
        << "max_samples = " << rc.max_samples << '\n'
        << "image_rows = " << rc.image_rows << '\n'
        << "image_cols = " << rc.image_cols << '\n'
        << "loss_regime = " << to_string(tc.regime) << '\n'
        << "components = " << tc.components << '\n'
        << "grid = " << (tc.grid == GridKind::Square ? "2d" : "1d") << '\n'
        << "periodic = " << b(tc.periodic) << '\n'
        << "batch_size = " << tc.batch_size << '\n'
        << "iterations = " << tc.iterations << '\n'
        << "t0 = " << format_double(tc.sigma.t0) << '\n'
        << "t_inf = " << format_double(tc.sigma.t_inf) << '\n'
        << "sigma0 = " << format_double(tc.sigma.start) << '\n'
        << "sigma_inf = " << format_double(tc.sigma.end) << '\n'
        << "epsilon0 = " << format_double(tc.epsilon.start) << '\n'
        << "epsilon_inf = " << format_double(tc.epsilon.end) << '\n'
        << "decay = " << (tc.sigma.convention == DecayConvention::Literal ? "literal" : "continuous") << '\n'
        << "annealing = " << b(tc.annealing) << '\n'
        << "init_centroids = " << (tc.init.centroids == CentroidInit::DataMean ? "data_mean" : "small_random") << '\n'
        << "init_centroid_scale = " << format_double(tc.init.centroid_scale) << '\n'
        << "init_precision_sq = " << format_double(tc.init.precision_sq) << '\n'
        << "tied_spherical = " << b(tc.tied_spherical) << '\n'
        << "train_weights = " << b(tc.train_weights) << '\n'
        << "train_precisions = " << b(tc.train_precisions) << '\n'
        << "precision_min = " << format_double(tc.bounds.min) << '\n'
        << "precision_max = " << format_double(tc.bounds.max) << '\n'
        << "weight_floor = " << format_double(tc.weight_floor) << '\n'
        << "seed = " << tc.seed << '\n'
        << "history_every = " << tc.history_every << '\n'
        << "sampling = " << (tc.sampling == BatchSampling::EpochPermutation ? "epoch" : "replacement") << '\n'
        << "probe_size = " << tc.probe_size << '\n'
        << "collapse_degenerate_distance = " << format_double(tc.collapse.degenerate_distance) << '\n'
        << "collapse_uniform_tolerance = " << format_double(tc.collapse.uniform_tolerance) << '\n'
        << "collapse_single_weight = " << format_double(tc.collapse.single_weight) << '\n'
        << "collapse_sparse_fraction = " << format_double(tc.collapse.sparse_fraction) << '\n'
        << "kernel_rebuild_tolerance = " << format_double(tc.kernel_rebuild_tolerance) << '\n';
    return out.str();
}

}  // namespace gmmsom
