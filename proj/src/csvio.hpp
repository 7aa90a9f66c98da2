#pragma once

#include <filesystem>
#include <string>
#include <vector>

// DOS record CSV: fixed column set and order, header always present, %.17g
// floats so values round-trip exactly.  The wall_ms column is the only one
// allowed to differ between reruns of an identical config.
namespace doslab::app {

inline constexpr char kDosHeader[] =
    "d,p,L,E,eps,eta,kappa,bound_product,center_x,center_y,center_z,seed,grid_n,wall_ms";

struct DosRow {
  int d = 1;
  double p = 2;
  double l = 0;
  double e = 0;
  double eps = 0;
  double eta = 0;
  double kappa = 0;
  double bound_product = 0;
  double center[3] = {0, 0, 0};
  long long seed = 0;
  long grid_n = 0;
  long long wall_ms = 0;
};

std::string format_dos_row(const DosRow& r);
void write_dos_csv(const std::filesystem::path& path, const std::vector<DosRow>& rows);

// Schema-checked reader: header must match kDosHeader exactly; a wrong header
// raises schema-mismatch listing the missing columns, an empty file raises
// insufficient-data.
std::vector<DosRow> read_dos_csv(const std::filesystem::path& path);

// CSV body with the wall_ms column blanked, for byte-level determinism
// comparisons between reruns.
std::string csv_body_without_wall(const std::filesystem::path& path);

}  // namespace doslab::app
