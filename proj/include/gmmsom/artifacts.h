#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "gmmsom/model.h"
#include "gmmsom/topology.h"
#include "gmmsom/trainer.h"

namespace gmmsom {

struct ImageShape {
    std::size_t rows = 0;
    std::size_t cols = 0;
};

struct GrayImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;  // row-major

    std::uint8_t at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }
};

inline constexpr std::uint8_t kSeparatorPixel = 255;
inline constexpr std::uint8_t kFlatTilePixel = 128;

/// Maps one centroid to 0..255 linearly between its own min and max. A
/// centroid with zero range becomes a uniform mid-gray tile.
std::vector<std::uint8_t> render_tile(std::span<const double> centroid);

/// Tiles every centroid in grid order with one-pixel separators.
GrayImage render_centroid_grid(const MixtureModel& model, const GridTopology& topology, ImageShape shape);

/// Writes render_centroid_grid as a binary PGM (P5).
void emit_centroid_grid(const MixtureModel& model, const GridTopology& topology, ImageShape shape,
                        const std::filesystem::path& path);

void write_pgm(const std::filesystem::path& path, const GrayImage& image);
GrayImage read_pgm(const std::filesystem::path& path);

/// CSV with header "t,sigma,epsilon,loss,diagnosis"; floats round-trip
/// exactly.
void emit_schedule_trace(const std::vector<HistoryRow>& history, const std::filesystem::path& path);
std::vector<HistoryRow> load_schedule_trace(const std::filesystem::path& path);

}  // namespace gmmsom
