#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "gmmsom/errors.h"
#include "gmmsom/model.h"
#include "gmmsom/topology.h"
#include "gmmsom/trainer.h"

namespace gmmsom {

class CheckpointError : public InputError {
public:
    enum class Kind { Io, Malformed, VersionMismatch, Checksum };

    CheckpointError(Kind kind, const std::string& what) : InputError(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Everything needed to resume or inspect a run. On disk: a text header of
/// "key value" lines terminated by "end", then the model parameters as raw
/// little-endian doubles (weights, centroids, precision roots). A CRC-32
/// covers the header lines above it and the whole payload.
struct Checkpoint {
    static constexpr int kFormatVersion = 1;

    int version = kFormatVersion;
    LossRegime regime = LossRegime::Smoothed;
    GridKind grid = GridKind::Square;
    bool periodic = true;
    MixtureModel model;
    AnnealingSchedule sigma;
    AnnealingSchedule epsilon;
    bool annealing = true;
    std::uint64_t iteration = 0;
    std::uint64_t seed = 0;
    std::string rng_state;      // textual std::mt19937_64 state
    double kernel_sigma = 0.0;  // radius of the cached kernel, 0 if none
    std::string data_hash;
    std::string config_hash;

    GridTopology topology() const { return {grid, model.components(), periodic}; }

    bool operator==(const Checkpoint&) const = default;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

Checkpoint make_checkpoint(const TrainConfig& config, const TrainState& state,
                           std::string data_hash = {}, std::string config_hash = {});

/// Rebuilds a TrainState (model, iteration, RNG, cached kernel). Throws
/// UsageError if `config` is incompatible with the checkpoint.
TrainState restore_state(const Checkpoint& checkpoint, const TrainConfig& config);

/// CRC-32 of arbitrary bytes, as eight lowercase hex digits.
std::string crc32_hex(std::span<const unsigned char> bytes);
std::string hash_dataset(const DataSet& data);

}  // namespace gmmsom
