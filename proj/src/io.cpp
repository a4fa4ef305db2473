#include "gmmsom/io.h"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <sstream>
#include <vector>

namespace gmmsom {

namespace {

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IdxError(IdxError::Kind::Io, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const unsigned char* p) {
    return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
           std::uint32_t{p[3]};
}

void write_be32(std::ostream& out, std::uint32_t v) {
    const char bytes[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                           static_cast<char>(v >> 8), static_cast<char>(v)};
    out.write(bytes, 4);
}

double parse_double(std::string_view field, std::size_t line) {
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
        field.remove_suffix(1);
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
        throw InputError("line " + std::to_string(line) + ": cannot parse '" + std::string(field) + "'");
    }
    return v;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

DataSet load_idx(const std::filesystem::path& path) {
    const auto bytes = read_bytes(path);
    if (bytes.size() < 4 || bytes[0] != 0 || bytes[1] != 0) {
        throw IdxError(IdxError::Kind::BadMagic, path.string() + ": bad IDX magic");
    }
    const unsigned char type = bytes[2];
    const std::size_t ndims = bytes[3];
    if (type != 0x08) {
        throw IdxError(IdxError::Kind::UnsupportedType,
                       path.string() + ": unsupported IDX type code " + std::to_string(type));
    }
    if (ndims == 0) throw IdxError(IdxError::Kind::BadMagic, path.string() + ": IDX with zero dimensions");
    const std::size_t header = 4 + 4 * ndims;
    if (bytes.size() < header) throw IdxError(IdxError::Kind::Truncated, path.string() + ": truncated IDX header");

    std::vector<std::uint32_t> dims(ndims);
    for (std::size_t i = 0; i < ndims; ++i) dims[i] = read_be32(bytes.data() + 4 + 4 * i);
    const std::size_t N = dims[0];
    std::size_t D = 1;
    for (std::size_t i = 1; i < ndims; ++i) D *= dims[i];
    if (bytes.size() - header < N * D) {
        throw IdxError(IdxError::Kind::Truncated, path.string() + ": truncated IDX payload");
    }

    Matrix samples(N, D);
    auto values = samples.values();
    for (std::size_t i = 0; i < N * D; ++i) values[i] = bytes[header + i] / 255.0;
    DataSource meta{path.string(), "idx", "bytes/255", std::move(dims), type};
    return DataSet(std::move(samples), std::move(meta));
}

void write_idx(const std::filesystem::path& path, const DataSet& data) {
    std::vector<std::uint32_t> dims = data.meta.idx_dims;
    std::size_t product = dims.empty() ? 0 : 1;
    for (std::size_t i = 1; i < dims.size(); ++i) product *= dims[i];
    if (dims.empty() || dims[0] != data.count() || product != data.dim()) {
        dims = {static_cast<std::uint32_t>(data.count()), static_cast<std::uint32_t>(data.dim())};
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    const char magic[4] = {0, 0, 0x08, static_cast<char>(dims.size())};
    out.write(magic, 4);
    for (auto d : dims) write_be32(out, d);
    std::vector<char> payload;
    payload.reserve(data.samples.values().size());
    for (double v : data.samples.values()) {
        if (!(v >= 0.0 && v <= 1.0)) throw UsageError("IDX byte data must lie in [0, 1]");
        payload.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
    }
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw InputError("write failed for " + path.string());
}

DataSet load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    std::vector<double> values;
    std::size_t cols = 0;
    std::size_t rows = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        std::size_t count = 0;
        std::string_view rest(line);
        while (true) {
            const auto comma = rest.find(',');
            values.push_back(parse_double(rest.substr(0, comma), line_no));
            ++count;
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (rows == 0) {
            cols = count;
        } else if (count != cols) {
            throw InputError("line " + std::to_string(line_no) + ": expected " + std::to_string(cols) +
                             " fields, found " + std::to_string(count));
        }
        ++rows;
    }
    if (rows == 0) throw InputError(path.string() + ": no data rows");
    Matrix samples(rows, cols);
    std::copy(values.begin(), values.end(), samples.values().begin());
    DataSet data(std::move(samples), DataSource{path.string(), "csv", "none", {}, 0});
    data.validate();
    return data;
}

void save_csv(const std::filesystem::path& path, const Matrix& rows) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    for (std::size_t r = 0; r < rows.rows(); ++r) {
        const auto row = rows.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out << ',';
            out << format_double(row[c]);
        }
        out << '\n';
    }
}

DataSet load_dataset(const std::filesystem::path& path, const std::string& format) {
    if (format == "idx") return load_idx(path);
    if (format == "csv") return load_csv(path);
    if (format != "auto") throw UsageError("unknown data format '" + format + "'");
    const auto ext = path.extension().string();
    if (ext == ".csv" || ext == ".txt") return load_csv(path);
    std::ifstream in(path, std::ios::binary);
    char head[2] = {1, 1};
    in.read(head, 2);
    if (in && head[0] == 0 && head[1] == 0) return load_idx(path);
    return load_csv(path);
}

}  // namespace gmmsom
