#pragma once

#include <filesystem>
#include <string>

#include "gmmsom/errors.h"
#include "gmmsom/model.h"

namespace gmmsom {

class IdxError : public InputError {
public:
    enum class Kind { BadMagic, Truncated, UnsupportedType, Io };

    IdxError(Kind kind, const std::string& what) : InputError(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Reads an IDX container of unsigned bytes (type 0x08). The first
/// dimension is the sample count; the remaining ones are flattened.
/// Bytes are scaled to [0, 1] by dividing by 255.
DataSet load_idx(const std::filesystem::path& path);

/// Writes the unsigned-byte IDX container for data in [0, 1]. Uses the
/// dimensions recorded at load time when they match, else (N, D).
void write_idx(const std::filesystem::path& path, const DataSet& data);

/// Headerless comma-separated rows of equal length.
DataSet load_csv(const std::filesystem::path& path);
void save_csv(const std::filesystem::path& path, const Matrix& rows);

/// Picks the loader by format name ("idx", "csv") or, for "auto", by
/// extension and magic bytes.
DataSet load_dataset(const std::filesystem::path& path, const std::string& format = "auto");

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace gmmsom
