#include "constants.hpp"

#include <fstream>
#include <sstream>

#include "doslab/errors.hpp"
#include "json.hpp"

namespace doslab::app {

using nlohmann::json;

namespace {

std::map<int, double> int_map(const json& j, const std::string& where) {
  std::map<int, double> out;
  if (!j.is_object())
    throw ValidationError("bad-constants", where + ": expected an object keyed by dimension");
  for (auto it = j.begin(); it != j.end(); ++it)
    out[std::stoi(it.key())] = it.value().get<double>();
  return out;
}

json map_json(const std::map<int, double>& m) {
  json j = json::object();
  for (const auto& [d, v] : m) j[std::to_string(d)] = v;
  return j;
}

}  // namespace

double FrozenConstants::sup_for(int d) const {
  auto it = dos_sup.find(d);
  if (it == dos_sup.end() || !(it->second > 0))
    throw ValidationError("uncalibrated",
                          "no frozen sup constant for d = " + std::to_string(d) +
                              "; run calibrate first");
  return it->second;
}

double FrozenConstants::require_m_fit() const {
  if (!(ucp_m_fit > 0))
    throw ValidationError("uncalibrated", "no frozen m_fit; run calibrate first");
  return ucp_m_fit;
}

FrozenConstants FrozenConstants::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw ValidationError("bad-constants", path.string() + ": cannot open constants file");
  json j;
  try {
    std::stringstream ss;
    ss << in.rdbuf();
    j = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ValidationError("bad-constants", path.string() + ": " + e.what());
  }
  FrozenConstants fc;
  try {
    if (j.contains("schema")) fc.schema = j["schema"].get<int>();
    if (j.contains("harmonic_a")) fc.harmonic_a = int_map(j["harmonic_a"], "harmonic_a");
    if (j.contains("dos1d_l0")) fc.dos1d_l0 = j["dos1d_l0"].get<double>();
    if (j.contains("dos2d_l0")) fc.dos2d_l0 = j["dos2d_l0"].get<double>();
    if (j.contains("dos2d_h")) fc.dos2d_h = j["dos2d_h"].get<double>();
    if (j.contains("dos_sup")) fc.dos_sup = int_map(j["dos_sup"], "dos_sup");
    if (j.contains("ucp_m_fit")) fc.ucp_m_fit = j["ucp_m_fit"].get<double>();
    if (j.contains("ucp_m_by_d")) fc.ucp_m_by_d = int_map(j["ucp_m_by_d"], "ucp_m_by_d");
  } catch (const json::exception& e) {
    throw ValidationError("bad-constants", path.string() + ": " + e.what());
  }
  return fc;
}

std::string FrozenConstants::to_json_text() const {
  json j;
  j["schema"] = schema;
  j["harmonic_a"] = map_json(harmonic_a);
  j["dos1d_l0"] = dos1d_l0;
  j["dos2d_l0"] = dos2d_l0;
  j["dos2d_h"] = dos2d_h;
  j["dos_sup"] = map_json(dos_sup);
  j["ucp_m_fit"] = ucp_m_fit;
  j["ucp_m_by_d"] = map_json(ucp_m_by_d);
  return j.dump(2) + "\n";
}

void FrozenConstants::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw ValidationError("bad-constants", path.string() + ": cannot write constants file");
  out << to_json_text();
}

}  // namespace doslab::app
