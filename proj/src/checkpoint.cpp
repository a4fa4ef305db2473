#include "gmmsom/checkpoint.h"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <vector>

#include <zlib.h>

#include "gmmsom/io.h"

namespace gmmsom {

static_assert(std::endian::native == std::endian::little, "checkpoint payload assumes little-endian doubles");

namespace {

constexpr std::string_view kMagic = "gmmsom-checkpoint";

std::string_view convention_name(DecayConvention c) {
    return c == DecayConvention::Literal ? "literal" : "continuous";
}

std::string schedule_text(const AnnealingSchedule& s) {
    return format_double(s.start) + ' ' + format_double(s.end) + ' ' + format_double(s.t0) + ' ' +
           format_double(s.t_inf) + ' ' + std::string(convention_name(s.convention));
}

[[noreturn]] void malformed(const std::string& what) {
    throw CheckpointError(CheckpointError::Kind::Malformed, "malformed checkpoint: " + what);
}

double to_double(const std::string& s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) malformed("bad number '" + s + "'");
    return v;
}

std::uint64_t to_u64(const std::string& s) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) malformed("bad integer '" + s + "'");
    return v;
}

AnnealingSchedule parse_schedule(const std::string& text) {
    std::istringstream in(text);
    std::string a, b, c, d, conv;
    if (!(in >> a >> b >> c >> d >> conv)) malformed("bad schedule '" + text + "'");
    AnnealingSchedule s{to_double(a), to_double(b), to_double(c), to_double(d)};
    if (conv == "literal") {
        s.convention = DecayConvention::Literal;
    } else if (conv != "continuous") {
        malformed("unknown decay convention '" + conv + "'");
    }
    return s;
}

void append_doubles(std::vector<unsigned char>& out, std::span<const double> values) {
    const auto* p = reinterpret_cast<const unsigned char*>(values.data());
    out.insert(out.end(), p, p + values.size_bytes());
}

}  // namespace

std::string crc32_hex(std::span<const unsigned char> bytes) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed in chunks.
    std::size_t offset = 0;
    while (offset < bytes.size()) {
        const std::size_t n = std::min<std::size_t>(bytes.size() - offset, 1u << 30);
        crc = ::crc32(crc, bytes.data() + offset, static_cast<uInt>(n));
        offset += n;
    }
    char buf[9];
    std::snprintf(buf, sizeof(buf), "%08lx", static_cast<unsigned long>(crc));
    return buf;
}

std::string hash_dataset(const DataSet& data) {
    const auto values = data.samples.values();
    return crc32_hex({reinterpret_cast<const unsigned char*>(values.data()), values.size_bytes()});
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
    const MixtureModel& m = c.model;
    std::vector<unsigned char> payload;
    append_doubles(payload, m.weights);
    append_doubles(payload, m.centroids.values());
    append_doubles(payload, m.precision_roots.values());

    std::ostringstream header;
    header << kMagic << '\n'
           << "version " << c.version << '\n'
           << "regime " << to_string(c.regime) << '\n'
           << "grid " << (c.grid == GridKind::Square ? "square" : "line") << '\n'
           << "periodic " << (c.periodic ? 1 : 0) << '\n'
           << "components " << m.components() << '\n'
           << "dim " << m.dim() << '\n'
           << "tied " << (m.tied_spherical ? 1 : 0) << '\n'
           << "sigma_schedule " << schedule_text(c.sigma) << '\n'
           << "epsilon_schedule " << schedule_text(c.epsilon) << '\n'
           << "annealing " << (c.annealing ? 1 : 0) << '\n'
           << "iteration " << c.iteration << '\n'
           << "seed " << c.seed << '\n'
           << "kernel_sigma " << format_double(c.kernel_sigma) << '\n'
           << "rng " << c.rng_state << '\n'
           << "data_hash " << (c.data_hash.empty() ? "-" : c.data_hash) << '\n'
           << "config_hash " << (c.config_hash.empty() ? "-" : c.config_hash) << '\n'
           << "payload_bytes " << payload.size() << '\n';
    std::string head = header.str();
    std::vector<unsigned char> covered(head.begin(), head.end());
    covered.insert(covered.end(), payload.begin(), payload.end());
    head += "crc32 " + crc32_hex(covered) + "\nend\n";

    std::ofstream out(path, std::ios::binary);
    if (!out) throw CheckpointError(CheckpointError::Kind::Io, "cannot write " + path.string());
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    if (!out) throw CheckpointError(CheckpointError::Kind::Io, "write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError(CheckpointError::Kind::Io, "cannot open " + path.string());
    const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());

    const auto end_pos = text.find("\nend\n");
    if (text.substr(0, kMagic.size()) != kMagic || end_pos == std::string_view::npos) {
        if (text.substr(0, kMagic.size()) == kMagic) {
            throw CheckpointError(CheckpointError::Kind::Checksum, "checkpoint truncated in header");
        }
        malformed("missing magic line");
    }
    std::map<std::string, std::string> fields;
    std::size_t crc_line = std::string_view::npos;
    {
        std::size_t pos = kMagic.size() + 1;
        while (pos <= end_pos) {
            const auto nl = text.find('\n', pos);
            const std::string_view line = text.substr(pos, nl - pos);
            const auto space = line.find(' ');
            if (space == std::string_view::npos) malformed("bad header line");
            const std::string key(line.substr(0, space));
            if (key == "crc32") crc_line = pos;
            if (!fields.emplace(key, std::string(line.substr(space + 1))).second) malformed("duplicate key " + key);
            pos = nl + 1;
        }
    }
    auto field = [&](const std::string& key) -> const std::string& {
        const auto it = fields.find(key);
        if (it == fields.end()) malformed("missing key " + key);
        return it->second;
    };

    const auto version = to_u64(field("version"));
    if (version != static_cast<std::uint64_t>(Checkpoint::kFormatVersion)) {
        throw CheckpointError(CheckpointError::Kind::VersionMismatch,
                              "checkpoint version " + std::to_string(version) + " is not supported (expected " +
                                  std::to_string(Checkpoint::kFormatVersion) + ")");
    }

    const std::size_t payload_start = end_pos + 5;
    const std::size_t payload_bytes = to_u64(field("payload_bytes"));
    if (crc_line == std::string_view::npos) malformed("missing crc32");
    if (bytes.size() - payload_start != payload_bytes) {
        throw CheckpointError(CheckpointError::Kind::Checksum, "checkpoint payload length mismatch (truncated?)");
    }
    std::vector<unsigned char> covered(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(crc_line));
    covered.insert(covered.end(), bytes.begin() + static_cast<std::ptrdiff_t>(payload_start), bytes.end());
    if (crc32_hex(covered) != field("crc32")) {
        throw CheckpointError(CheckpointError::Kind::Checksum, "checkpoint checksum mismatch");
    }

    Checkpoint c;
    c.version = static_cast<int>(version);
    try {
        c.regime = parse_regime(field("regime"));
    } catch (const UsageError& e) {
        malformed(e.what());
    }
    const std::string& grid = field("grid");
    if (grid == "square") {
        c.grid = GridKind::Square;
    } else if (grid == "line") {
        c.grid = GridKind::Line;
    } else {
        malformed("unknown grid '" + grid + "'");
    }
    c.periodic = to_u64(field("periodic")) != 0;
    const std::size_t K = to_u64(field("components"));
    const std::size_t D = to_u64(field("dim"));
    if (K == 0 || D == 0 || payload_bytes != sizeof(double) * (K + 2 * K * D)) malformed("payload size disagrees with K, D");
    c.sigma = parse_schedule(field("sigma_schedule"));
    c.epsilon = parse_schedule(field("epsilon_schedule"));
    c.annealing = to_u64(field("annealing")) != 0;
    c.iteration = to_u64(field("iteration"));
    c.seed = to_u64(field("seed"));
    c.kernel_sigma = to_double(field("kernel_sigma"));
    c.rng_state = field("rng");
    c.data_hash = field("data_hash") == "-" ? "" : field("data_hash");
    c.config_hash = field("config_hash") == "-" ? "" : field("config_hash");

    MixtureModel m(K, D, 1.0, to_u64(field("tied")) != 0);
    const unsigned char* p = bytes.data() + payload_start;
    auto read_into = [&p](std::span<double> dst) {
        std::memcpy(dst.data(), p, dst.size_bytes());
        p += dst.size_bytes();
    };
    read_into(m.weights);
    read_into(m.centroids.values());
    read_into(m.precision_roots.values());
    c.model = std::move(m);
    return c;
}

Checkpoint make_checkpoint(const TrainConfig& config, const TrainState& state, std::string data_hash,
                           std::string config_hash) {
    Checkpoint c;
    c.regime = config.regime;
    c.grid = config.grid;
    c.periodic = config.periodic;
    c.model = state.model;
    c.sigma = config.sigma;
    c.epsilon = config.epsilon;
    c.annealing = config.annealing;
    c.iteration = state.t;
    c.seed = config.seed;
    std::ostringstream rng;
    rng << state.rng;
    c.rng_state = rng.str();
    c.kernel_sigma = state.kernel ? state.kernel->sigma() : 0.0;
    c.data_hash = std::move(data_hash);
    c.config_hash = std::move(config_hash);
    return c;
}

TrainState restore_state(const Checkpoint& c, const TrainConfig& config) {
    if (c.regime != config.regime || c.grid != config.grid || c.periodic != config.periodic ||
        c.model.components() != config.components || c.model.tied_spherical != config.tied_spherical ||
        c.sigma != config.sigma || c.epsilon != config.epsilon || c.annealing != config.annealing ||
        c.seed != config.seed) {
        throw UsageError("checkpoint does not match the training configuration");
    }
    TrainState state;
    state.model = c.model;
    state.t = c.iteration;
    std::istringstream rng(c.rng_state);
    rng >> state.rng;
    if (!rng) throw CheckpointError(CheckpointError::Kind::Malformed, "bad RNG state");
    if (c.regime == LossRegime::MaxComponent) {
        state.kernel = NeighborhoodKernel::identity(c.model.components());
    } else if (c.regime == LossRegime::Smoothed && c.kernel_sigma > 0.0) {
        state.kernel = build_kernel(c.topology(), c.kernel_sigma);
    }
    return state;
}

}  // namespace gmmsom
