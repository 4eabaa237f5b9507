#include "fbx/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fbx {

std::string format_full(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string fnv1a64_hex(const std::string& bytes) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", (unsigned long long)fnv1a64(bytes));
    return buf;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double to_double(const std::string& s, const char* what) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error(std::string("csv: bad number for ") + what + ": '" + s + "'");
    }
}

} // namespace

std::string field_csv_text(const ScalarField& u, const Weight& w) {
    const Grid& g = u.grid;
    std::string out = "nx,ny,h,x0,y0,gamma,line_y\n";
    out += std::to_string(g.nx) + "," + std::to_string(g.ny) + "," + format_full(g.h) + "," +
           format_full(g.x0) + "," + format_full(g.y0) + "," + format_full(w.gamma) + "," +
           format_full(w.line_y) + "\n";
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            out += format_full(u.values[g.index(i, j)]);
            out += (i + 1 < g.nx) ? "," : "\n";
        }
    }
    return out;
}

FieldFile parse_field_csv_text(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("field csv: empty file");
    if (!std::getline(in, line)) throw std::runtime_error("field csv: missing header values");
    auto vals = split_csv_line(line);
    if (vals.size() != 7) throw std::runtime_error("field csv: header must list 7 values");
    int nx = (int)to_double(vals[0], "nx");
    int ny = (int)to_double(vals[1], "ny");
    double h = to_double(vals[2], "h");
    double x0 = to_double(vals[3], "x0");
    double y0 = to_double(vals[4], "y0");
    double gamma = to_double(vals[5], "gamma");
    double line_y = to_double(vals[6], "line_y");

    FieldFile out{ScalarField(Grid(nx, ny, h, x0, y0, line_y)), Weight(gamma, line_y)};
    for (int j = 0; j < ny; ++j) {
        if (!std::getline(in, line))
            throw std::runtime_error("field csv: missing data row " + std::to_string(j));
        auto row = split_csv_line(line);
        if ((int)row.size() != nx)
            throw std::runtime_error("field csv: row " + std::to_string(j) + " has " +
                                     std::to_string(row.size()) + " values, expected " +
                                     std::to_string(nx));
        for (int i = 0; i < nx; ++i)
            out.field.values[out.field.grid.index(i, j)] = to_double(row[i], "field value");
    }
    out.field.check_invariants();
    return out;
}

void write_field_csv(const std::string& path, const ScalarField& u, const Weight& w) {
    write_text_file(path, field_csv_text(u, w));
}

FieldFile read_field_csv(const std::string& path) {
    return parse_field_csv_text(read_text_file(path));
}

std::string pgm_text(const PositivitySet& s) {
    const Grid& g = s.grid;
    std::string out = "P2\n" + std::to_string(g.nx) + " " + std::to_string(g.ny) + "\n255\n";
    std::vector<std::uint8_t> fb(g.node_count(), 0);
    for (const NodeIndex& n : free_boundary_nodes(s)) fb[g.index(n.i, n.j)] = 1;
    for (int j = g.ny - 1; j >= 0; --j) {
        for (int i = 0; i < g.nx; ++i) {
            int v = s.indicator[g.index(i, j)] ? 255 : (fb[g.index(i, j)] ? 128 : 0);
            out += std::to_string(v);
            out += (i + 1 < g.nx) ? ' ' : '\n';
        }
    }
    return out;
}

void write_pgm(const std::string& path, const PositivitySet& s) {
    write_text_file(path, pgm_text(s));
}

std::string energy_csv_text(const EnergyReport& r) {
    return "dirichlet,mass,total\n" + format_full(r.dirichlet) + "," + format_full(r.mass) + "," +
           format_full(r.total) + "\n";
}

EnergyReport parse_energy_csv_text(const std::string& text) {
    CsvTable t = parse_csv_text(text);
    if (t.header.size() != 3 || t.rows.size() != 1 || t.rows[0].size() != 3)
        throw std::runtime_error("energy csv: expected one 3-column row");
    EnergyReport r;
    r.dirichlet = to_double(t.rows[0][0], "dirichlet");
    r.mass = to_double(t.rows[0][1], "mass");
    r.total = to_double(t.rows[0][2], "total");
    return r;
}

std::string csv_text(const CsvTable& t) {
    std::string out;
    for (std::size_t i = 0; i < t.header.size(); ++i) {
        out += t.header[i];
        out += (i + 1 < t.header.size()) ? "," : "\n";
    }
    if (t.header.empty()) out += "\n";
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            out += row[i];
            out += (i + 1 < row.size()) ? "," : "\n";
        }
        if (row.empty()) out += "\n";
    }
    return out;
}

CsvTable parse_csv_text(const std::string& text) {
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    if (std::getline(in, line)) t.header = split_csv_line(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        t.rows.push_back(split_csv_line(line));
    }
    return t;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f.write(text.data(), (std::streamsize)text.size());
    if (!f) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

} // namespace fbx
