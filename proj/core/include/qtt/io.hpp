#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "qtt/dense.hpp"
#include "qtt/quantics.hpp"
#include "qtt/tensortrain.hpp"

namespace qtt {

inline constexpr std::uint16_t kFileVersion = 1;

/// Train file bytes; see docs/file_format.md.
std::vector<std::uint8_t> encode(const TensorTrain& t);
/// Throws CorruptFileError, TruncatedFileError or VersionError.
TensorTrain decode(const std::vector<std::uint8_t>& bytes);

void save(const TensorTrain& t, const std::filesystem::path& path);
TensorTrain load(const std::filesystem::path& path);

enum class DenseFormat { RawF64, Csv };

/// Row-major dense data over `dims`. RawF64 is little-endian binary64; Csv
/// takes values separated by commas or newlines. Throws ShapeError on a count
/// mismatch and ParseError on malformed input.
DenseArray ingest_dense(const std::filesystem::path& path, DenseFormat format, const std::vector<Dimension>& dims);

/// The values of a dense data file in file order, without a shape check.
std::vector<double> read_values(const std::filesystem::path& path, DenseFormat format);

/// Csv parsing of in-memory text, same rules as ingest_dense.
std::vector<double> parse_csv(std::string_view text);

} // namespace qtt
