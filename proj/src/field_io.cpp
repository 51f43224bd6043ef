#include "pflab/field_io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pflab/errors.hpp"

namespace pflab {

void write_field(std::ostream& os, const Field& f, SnapshotFormat fmt) {
    const Grid& g = f.grid();
    if (g.dim() == 1)
        os << fmt::format("{} {:.17g} {}\n", g.n(0), g.h(0), to_string(g.boundary()));
    else
        os << fmt::format("{} {} {:.17g} {:.17g} {}\n", g.n(0), g.n(1), g.h(0), g.h(1), to_string(g.boundary()));
    for (int j = 0; j < g.n(1); ++j) {
        for (int i = 0; i < g.n(0); ++i) {
            os << fmt::format("{:.17g}", f[g.index(i, j)]);
            if (fmt == SnapshotFormat::Csv || i + 1 == g.n(0))
                os << '\n';
            else
                os << ' ';
        }
    }
}

void write_field(const std::filesystem::path& path, const Field& f, SnapshotFormat fmt) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open '" + path.string() + "' for writing");
    write_field(os, f, fmt);
}

Field read_field(std::istream& is) {
    std::string header;
    if (!std::getline(is, header)) throw ParseError("snapshot: missing header line");
    std::replace(header.begin(), header.end(), ',', ' ');
    std::istringstream hs(header);
    std::vector<std::string> tok;
    for (std::string t; hs >> t;) tok.push_back(t);

    Grid grid;
    try {
        if (tok.size() == 3) {
            const int nx = std::stoi(tok[0]);
            const double hx = std::stod(tok[1]);
            grid = Grid::line(nx, nx * hx, boundary_from_string(tok[2]));
        } else if (tok.size() == 5) {
            const int nx = std::stoi(tok[0]);
            const int ny = std::stoi(tok[1]);
            const double hx = std::stod(tok[2]);
            const double hy = std::stod(tok[3]);
            grid = Grid::rect(nx, ny, nx * hx, ny * hy, boundary_from_string(tok[4]));
        } else {
            throw ParseError("snapshot: header must be `nx [ny] hx [hy] bc`, got '" + header + "'");
        }
    } catch (const std::logic_error&) {
        throw ParseError("snapshot: malformed header '" + header + "'");
    }

    std::vector<double> values;
    values.reserve(grid.size());
    std::string line;
    while (std::getline(is, line)) {
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        for (std::string t; ls >> t;) {
            char* end = nullptr;
            const double v = std::strtod(t.c_str(), &end);
            if (end == t.c_str() || *end != '\0') throw ParseError("snapshot: bad value '" + t + "'");
            if (!std::isfinite(v)) throw ParseError("snapshot: non-finite value");
            values.push_back(v);
        }
    }
    if (values.size() != grid.size())
        throw ParseError(fmt::format("snapshot: expected {} values, found {}", grid.size(), values.size()));
    return Field(grid, std::move(values));
}

Field read_field(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open '" + path.string() + "'");
    return read_field(is);
}

}  // namespace pflab
