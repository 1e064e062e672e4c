#pragma once

#include <filesystem>
#include <iosfwd>

#include "bleubound/matrix.hpp"

namespace bleubound {

// Logits interchange format: CSV of reals, one row per position. With
// `has_header` the first line is skipped. Blank lines are ignored.
// Throws IoError (unreadable file), ShapeMismatch (ragged rows) or
// NonFiniteInput (unparseable / non-finite cell).
Matrix read_matrix_csv(std::istream& in, bool has_header = false);
Matrix read_matrix_csv(const std::filesystem::path& path, bool has_header = false);

// Round-trip exact: values are written with max_digits10 precision.
void write_matrix_csv(const Matrix& m, std::ostream& out);

}  // namespace bleubound
