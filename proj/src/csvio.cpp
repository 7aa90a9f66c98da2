#include "csvio.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doslab/errors.hpp"

namespace doslab::app {

namespace {

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
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

double parse_num(const std::string& tok, const std::filesystem::path& path, long line) {
  char* end = nullptr;
  double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0')
    throw ValidationError("bad-record", path.string() + ":" + std::to_string(line) +
                                            ": malformed number '" + tok + "'");
  return v;
}

}  // namespace

std::string format_dos_row(const DosRow& r) {
  std::string s;
  s += std::to_string(r.d);
  s += ',' + fmt_g(r.p);
  s += ',' + fmt_g(r.l);
  s += ',' + fmt_g(r.e);
  s += ',' + fmt_g(r.eps);
  s += ',' + fmt_g(r.eta);
  s += ',' + fmt_g(r.kappa);
  s += ',' + fmt_g(r.bound_product);
  s += ',' + fmt_g(r.center[0]);
  s += ',' + fmt_g(r.center[1]);
  s += ',' + fmt_g(r.center[2]);
  s += ',' + std::to_string(r.seed);
  s += ',' + std::to_string(r.grid_n);
  s += ',' + std::to_string(r.wall_ms);
  return s;
}

void write_dos_csv(const std::filesystem::path& path, const std::vector<DosRow>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("bad-output", path.string() + ": cannot write CSV");
  out << kDosHeader << '\n';
  for (const DosRow& r : rows) out << format_dos_row(r) << '\n';
}

std::vector<DosRow> read_dos_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("bad-record", path.string() + ": cannot open CSV");
  std::string line;
  if (!std::getline(in, line) || split_csv(line) == std::vector<std::string>{""})
    throw ValidationError("insufficient-data", path.string() + ": file is empty");

  std::vector<std::string> have = split_csv(line);
  std::vector<std::string> want = split_csv(kDosHeader);
  if (have != want) {
    std::string missing;
    for (const std::string& col : want)
      if (std::find(have.begin(), have.end(), col) == have.end())
        missing += (missing.empty() ? "" : ", ") + col;
    throw ValidationError("schema-mismatch",
                          path.string() + ": header does not match the record schema; " +
                              (missing.empty() ? "column order or extras differ"
                                               : "missing columns: " + missing));
  }

  std::vector<DosRow> rows;
  long ln = 1;
  while (std::getline(in, line)) {
    ++ln;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> tok = split_csv(line);
    if (tok.size() != want.size())
      throw ValidationError("bad-record", path.string() + ":" + std::to_string(ln) +
                                              ": expected " + std::to_string(want.size()) +
                                              " fields, found " + std::to_string(tok.size()));
    DosRow r;
    r.d = static_cast<int>(parse_num(tok[0], path, ln));
    r.p = parse_num(tok[1], path, ln);
    r.l = parse_num(tok[2], path, ln);
    r.e = parse_num(tok[3], path, ln);
    r.eps = parse_num(tok[4], path, ln);
    r.eta = parse_num(tok[5], path, ln);
    r.kappa = parse_num(tok[6], path, ln);
    r.bound_product = parse_num(tok[7], path, ln);
    r.center[0] = parse_num(tok[8], path, ln);
    r.center[1] = parse_num(tok[9], path, ln);
    r.center[2] = parse_num(tok[10], path, ln);
    r.seed = static_cast<long long>(parse_num(tok[11], path, ln));
    r.grid_n = static_cast<long>(parse_num(tok[12], path, ln));
    r.wall_ms = static_cast<long long>(parse_num(tok[13], path, ln));
    if (r.eta < 0)
      throw ValidationError("bad-record", path.string() + ":" + std::to_string(ln) +
                                              ": eta must be >= 0");
    rows.push_back(r);
  }
  return rows;
}

std::string csv_body_without_wall(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("bad-record", path.string() + ": cannot open CSV");
  std::string out, line;
  while (std::getline(in, line)) {
    size_t cut = line.rfind(',');
    out += (cut == std::string::npos ? line : line.substr(0, cut));
    out += '\n';
  }
  return out;
}

}  // namespace doslab::app
