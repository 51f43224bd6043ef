#pragma once

#include <filesystem>
#include <iosfwd>

#include "pflab/grid.hpp"

namespace pflab {

enum class SnapshotFormat {
    Rows,  ///< header, then one grid row per line, whitespace separated
    Csv,   ///< header, then one value per line
};

/// Snapshot header is `nx [ny] hx [hy] bc`; values follow in row-major order.
void write_field(std::ostream& os, const Field& f, SnapshotFormat fmt = SnapshotFormat::Rows);
void write_field(const std::filesystem::path& path, const Field& f, SnapshotFormat fmt = SnapshotFormat::Rows);

/// Reads either format; commas are accepted as separators anywhere.
Field read_field(std::istream& is);
Field read_field(const std::filesystem::path& path);

}  // namespace pflab
