#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>

#include "gmmsom/trainer.h"

namespace gmmsom {

/// Training run description read from a flat "key = value" file. Lines
/// starting with '#' are comments. Iteration-valued keys (t0, t_inf) accept
/// a fraction of the total written as e.g. "0.3T".
///
/// Precisions should start as large as the data allows: a broad initial
/// component gives a flat early landscape, a sharp one starts the maps in
/// a well-ordered state.
struct RunConfig {
    TrainConfig train;
    bool has_seed = false;
    std::filesystem::path data;
    std::string data_format = "auto";
    std::size_t max_samples = 0;  // 0 keeps every sample
    std::filesystem::path output_dir = ".";
    std::size_t image_rows = 0;   // 0: infer from IDX dims, else 1 x D
    std::size_t image_cols = 0;
};

/// Throws UsageError on unknown or duplicate keys, malformed values, or a
/// configuration that fails TrainConfig::validate().
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Canonical "key = value" rendering of every field, used for hashing.
std::string render_run_config(const RunConfig& config);

}  // namespace gmmsom
