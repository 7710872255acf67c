#pragma once

// Dataset file format: UTF-8 line-delimited JSON. The first line is a
// header object (schema version, bounds, grid, material, scaler, splits,
// removed count); every following line is one simulation record. Doubles
// are emitted in shortest round-trip decimal form, so a load/save cycle
// is byte-identical.

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "opforge/campaign.hpp"

namespace opforge {

namespace io_detail {

using nlohmann::json;

inline json bounds_to_json(const ParamBounds& b) {
  json j;
  for (std::size_t i = 0; i < 5; ++i)
    j[ParamBounds::names[i]] = {b[i].lo, b[i].hi};
  return j;
}

inline ParamBounds bounds_from_json(const json& j) {
  ParamBounds b;
  for (std::size_t i = 0; i < 5; ++i) {
    const auto& r = j.at(ParamBounds::names[i]);
    b[i] = Range{r.at(0).get<double>(), r.at(1).get<double>()};
  }
  return b;
}

inline json params_to_json(const ProcessParams& pp) {
  return json{{"P", pp.power},
              {"v", pp.speed},
              {"r", pp.radius},
              {"eta", pp.efficiency},
              {"alpha", pp.scaling}};
}

inline ProcessParams params_from_json(const json& j) {
  return ProcessParams{j.at("P").get<double>(), j.at("v").get<double>(),
                       j.at("r").get<double>(), j.at("eta").get<double>(),
                       j.at("alpha").get<double>()};
}

}  // namespace io_detail

inline void save_dataset(const std::string& path, const Dataset& ds) {
  using nlohmann::json;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_dataset: cannot open " + path);

  json header;
  header["schema_version"] = ds.schema_version;
  header["seed"] = ds.seed;
  header["removed_count"] = ds.removed_count;
  header["bounds"] = io_detail::bounds_to_json(ds.bounds);
  header["grid"] = {{"nx", ds.grid.nx},       {"nz", ds.grid.nz},
                    {"dx", ds.grid.dx},       {"dz", ds.grid.dz},
                    {"scan_length", ds.grid.scan_length},
                    {"n_output_steps", ds.grid.n_output_steps}};
  header["material"] = {{"density", ds.material.density},
                        {"specific_heat", ds.material.specific_heat},
                        {"conductivity", ds.material.conductivity},
                        {"convection", ds.material.convection},
                        {"t_ambient", ds.material.t_ambient},
                        {"t_melt", ds.material.t_melt}};
  header["scaler"] = {{"mean", ds.scaler.mean}, {"stddev", ds.scaler.stddev}};
  header["split"] = {{"train", ds.split.train},
                     {"val", ds.split.val},
                     {"test", ds.split.test}};
  header["n_records"] = ds.records.size();
  out << header.dump() << "\n";

  for (const auto& r : ds.records) {
    json line;
    line["params"] = io_detail::params_to_json(r.params);
    line["melted"] = r.melted;
    line["time_grid"] = r.time_grid;
    line["v_bead"] = r.v_bead;
    line["t_mp"] = r.t_mp;
    out << line.dump() << "\n";
  }
  if (!out) throw std::runtime_error("save_dataset: write failed for " + path);
}

inline Dataset load_dataset(const std::string& path) {
  using nlohmann::json;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_dataset: cannot open " + path);

  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("load_dataset: empty file " + path);
  json header = json::parse(line);

  Dataset ds;
  ds.schema_version = header.at("schema_version").get<int>();
  if (ds.schema_version != kDatasetSchemaVersion)
    throw std::runtime_error("load_dataset: unsupported schema version " +
                             std::to_string(ds.schema_version));
  ds.seed = header.at("seed").get<std::uint64_t>();
  ds.removed_count = header.at("removed_count").get<std::size_t>();
  ds.bounds = io_detail::bounds_from_json(header.at("bounds"));
  const auto& g = header.at("grid");
  ds.grid.nx = g.at("nx").get<std::size_t>();
  ds.grid.nz = g.at("nz").get<std::size_t>();
  ds.grid.dx = g.at("dx").get<double>();
  ds.grid.dz = g.at("dz").get<double>();
  ds.grid.scan_length = g.at("scan_length").get<double>();
  ds.grid.n_output_steps = g.at("n_output_steps").get<std::size_t>();
  const auto& m = header.at("material");
  ds.material.density = m.at("density").get<double>();
  ds.material.specific_heat = m.at("specific_heat").get<double>();
  ds.material.conductivity = m.at("conductivity").get<double>();
  ds.material.convection = m.at("convection").get<double>();
  ds.material.t_ambient = m.at("t_ambient").get<double>();
  ds.material.t_melt = m.at("t_melt").get<double>();
  ds.scaler.mean = header.at("scaler").at("mean").get<std::vector<double>>();
  ds.scaler.stddev = header.at("scaler").at("stddev").get<std::vector<double>>();
  ds.split.train = header.at("split").at("train").get<std::vector<std::size_t>>();
  ds.split.val = header.at("split").at("val").get<std::vector<std::size_t>>();
  ds.split.test = header.at("split").at("test").get<std::vector<std::size_t>>();
  const auto n_records = header.at("n_records").get<std::size_t>();

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json rec = json::parse(line);
    SimulationRecord r;
    r.params = io_detail::params_from_json(rec.at("params"));
    r.melted = rec.at("melted").get<bool>();
    r.time_grid = rec.at("time_grid").get<std::vector<double>>();
    r.v_bead = rec.at("v_bead").get<std::vector<double>>();
    r.t_mp = rec.at("t_mp").get<std::vector<double>>();
    ds.records.push_back(std::move(r));
  }
  if (ds.records.size() != n_records)
    throw std::runtime_error("load_dataset: record count mismatch in " + path);
  return ds;
}

}  // namespace opforge
