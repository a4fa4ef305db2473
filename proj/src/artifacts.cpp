#include "gmmsom/artifacts.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "gmmsom/errors.h"
#include "gmmsom/io.h"

namespace gmmsom {

std::vector<std::uint8_t> render_tile(std::span<const double> centroid) {
    const auto [lo, hi] = std::minmax_element(centroid.begin(), centroid.end());
    std::vector<std::uint8_t> out(centroid.size(), kFlatTilePixel);
    const double range = *hi - *lo;
    if (!(range > 0.0)) return out;
    for (std::size_t i = 0; i < centroid.size(); ++i) {
        out[i] = static_cast<std::uint8_t>(std::lround(255.0 * (centroid[i] - *lo) / range));
    }
    return out;
}

GrayImage render_centroid_grid(const MixtureModel& model, const GridTopology& topology, ImageShape shape) {
    if (shape.rows * shape.cols != model.dim()) {
        throw UsageError("image shape " + std::to_string(shape.rows) + "x" + std::to_string(shape.cols) +
                         " does not match dimension " + std::to_string(model.dim()));
    }
    if (topology.components() != model.components()) throw UsageError("topology size does not match model");
    GrayImage img;
    img.width = topology.cols() * shape.cols + (topology.cols() - 1);
    img.height = topology.rows() * shape.rows + (topology.rows() - 1);
    img.pixels.assign(img.width * img.height, kSeparatorPixel);
    for (std::size_t k = 0; k < model.components(); ++k) {
        const GridCoord c = topology.coord(k);
        const auto tile = render_tile(model.centroids.row(k));
        const std::size_t top = c.row * (shape.rows + 1);
        const std::size_t left = c.col * (shape.cols + 1);
        for (std::size_t r = 0; r < shape.rows; ++r) {
            std::copy_n(tile.begin() + static_cast<std::ptrdiff_t>(r * shape.cols), shape.cols,
                        img.pixels.begin() + static_cast<std::ptrdiff_t>((top + r) * img.width + left));
        }
    }
    return img;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
}

GrayImage read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::string magic;
    GrayImage img;
    int maxval = 0;
    in >> magic >> img.width >> img.height >> maxval;
    if (magic != "P5" || maxval != 255 || !in) throw InputError(path.string() + ": not an 8-bit P5 PGM");
    in.get();
    img.pixels.resize(img.width * img.height);
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (!in) throw InputError(path.string() + ": truncated PGM");
    return img;
}

void emit_centroid_grid(const MixtureModel& model, const GridTopology& topology, ImageShape shape,
                        const std::filesystem::path& path) {
    write_pgm(path, render_centroid_grid(model, topology, shape));
}

void emit_schedule_trace(const std::vector<HistoryRow>& history, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << "t,sigma,epsilon,loss,diagnosis\n";
    for (const auto& row : history) {
        out << row.t << ',' << format_double(row.sigma) << ',' << format_double(row.epsilon) << ','
            << format_double(row.loss) << ',' << to_string(row.diagnosis) << '\n';
    }
}

std::vector<HistoryRow> load_schedule_trace(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "t,sigma,epsilon,loss,diagnosis") {
        throw InputError(path.string() + ": missing trace header");
    }
    std::vector<HistoryRow> rows;
    while (std::getline(in, line)) {
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 5) throw InputError(path.string() + ": bad trace row '" + line + "'");
        HistoryRow row;
        auto num = [&](const std::string& s, auto& dst) {
            const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), dst);
            if (ec != std::errc() || ptr != s.data() + s.size()) throw InputError("bad trace value '" + s + "'");
        };
        num(f[0], row.t);
        num(f[1], row.sigma);
        num(f[2], row.epsilon);
        num(f[3], row.loss);
        row.diagnosis = parse_diagnosis(f[4]);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace gmmsom
