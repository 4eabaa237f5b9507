#ifndef FBX_IO_HPP
#define FBX_IO_HPP

#include "fbx/energy.hpp"
#include "fbx/grid.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fbx {

/** Full round-trip decimal formatting ("%.17g"). */
std::string format_full(double v);

std::uint64_t fnv1a64(const std::string& bytes);
std::string fnv1a64_hex(const std::string& bytes);

struct FieldFile {
    ScalarField field;
    Weight weight;
};

/**
 * Field CSV: a names header line `nx,ny,h,x0,y0,gamma,line_y`, a values
 * line, then ny rows of nx comma-separated values, row j = y ascending.
 * The loaded boundary mask covers the grid perimeter.
 */
std::string field_csv_text(const ScalarField& u, const Weight& w);
FieldFile parse_field_csv_text(const std::string& text);
void write_field_csv(const std::string& path, const ScalarField& u, const Weight& w);
FieldFile read_field_csv(const std::string& path);

/** Plain PGM (P2): 0 = zero set, 255 = positive, 128 = free-boundary node. */
std::string pgm_text(const PositivitySet& s);
void write_pgm(const std::string& path, const PositivitySet& s);

std::string energy_csv_text(const EnergyReport& r);
EnergyReport parse_energy_csv_text(const std::string& text);

/** Generic named-column CSV used by the analysis and experiment outputs. */
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

std::string csv_text(const CsvTable& t);
CsvTable parse_csv_text(const std::string& text);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

} // namespace fbx

#endif
