#pragma once

#include <filesystem>
#include <string>

#include "wnlab/model.hpp"

namespace wnlab::io {

/// CSV: one line per matrix row, comma separated, '.' decimal point. Lines that
/// are empty or start with '#' are skipped. Values are written with 17
/// significant digits so a write/read cycle is lossless.
Mat read_csv_matrix(std::istream& in);
Mat read_csv_matrix(const std::filesystem::path& path);
void write_csv_matrix(std::ostream& out, const Mat& m);

/// Binary: magic "WNF1", u32 rows, u32 cols (little endian), then rows·cols
/// little-endian IEEE-754 doubles in row-major order.
Mat read_binary_matrix(std::istream& in);
Mat read_binary_matrix(const std::filesystem::path& path);
void write_binary_matrix(std::ostream& out, const Mat& m);

/// Dispatches on extension: ".bin" → binary, anything else → CSV.
Mat read_matrix(const std::filesystem::path& path);
void write_matrix(const std::filesystem::path& path, const Mat& m);

/// Vectors are stored as single-column matrices.
Vec read_vector(const std::filesystem::path& path);
void write_vector(const std::filesystem::path& path, const Vec& v);

enum class Format { Csv, Binary };

/// An instance directory holds A, b and optionally x_star and w, each as
/// <name>.csv or <name>.bin.
ProblemInstance load_instance(const std::filesystem::path& dir);
void save_instance(const std::filesystem::path& dir, const ProblemInstance& inst,
                   Format format = Format::Csv);

/// Writes `contents` to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace wnlab::io
