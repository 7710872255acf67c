#pragma once

// Model file format: one JSON header line (format version, kind, config,
// scaling metadata, weight count) followed by the flat weight array, one
// C hexfloat per line. Hexfloats are exact, so load(save(m)) == m bitwise.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "opforge/dataset_io.hpp"
#include "opforge/rom.hpp"
#include "opforge/version.hpp"

namespace opforge {

inline void save_model(const std::string& path, const RomModel& model) {
  using nlohmann::json;
  model.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_model: cannot open " + path);

  json header;
  header["format_version"] = kModelFormatVersion;
  header["kind"] = rom_kind_name(model.kind());
  switch (model.kind()) {
    case RomKind::dnn: {
      const auto& c = std::get<DnnConfig>(model.config);
      header["config"] = {{"hidden_widths", c.hidden_widths},
                          {"activation", c.activation}};
      break;
    }
    case RomKind::deeponet: {
      const auto& c = std::get<DeepOnetConfig>(model.config);
      header["config"] = {{"branch_hidden", c.branch_hidden},
                          {"trunk_hidden", c.trunk_hidden},
                          {"latent_dim", c.latent_dim},
                          {"activation", c.activation}};
      break;
    }
    case RomKind::fno: {
      const auto& c = std::get<FnoConfig>(model.config);
      header["config"] = {{"modes", c.modes},
                          {"width", c.width},
                          {"n_layers", c.n_layers},
                          {"grid_len", c.grid_len},
                          {"fft_len", c.fft_len},
                          {"projection_width", c.projection_width}};
      break;
    }
  }
  header["scaling"] = {{"input_bounds", io_detail::bounds_to_json(model.scaling.input_bounds)},
                       {"output_scaler",
                        {{"mean", model.scaling.output_scaler.mean},
                         {"stddev", model.scaling.output_scaler.stddev}}},
                       {"series_targets", model.scaling.series_targets}};
  header["n_weights"] = model.weights.size();
  out << header.dump() << "\n";

  char buf[48];
  for (double w : model.weights) {
    std::snprintf(buf, sizeof buf, "%a", w);
    out << buf << "\n";
  }
  if (!out) throw std::runtime_error("save_model: write failed for " + path);
}

inline RomModel load_model(const std::string& path) {
  using nlohmann::json;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_model: cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_model: empty file " + path);
  json header = json::parse(line);
  if (header.at("format_version").get<int>() != kModelFormatVersion)
    throw std::runtime_error("load_model: unsupported format version");

  RomModel model;
  const auto kind = rom_kind_from_name(header.at("kind").get<std::string>());
  const auto& jc = header.at("config");
  switch (kind) {
    case RomKind::dnn: {
      DnnConfig c;
      c.hidden_widths = jc.at("hidden_widths").get<std::vector<std::size_t>>();
      c.activation = jc.at("activation").get<std::string>();
      model.config = c;
      break;
    }
    case RomKind::deeponet: {
      DeepOnetConfig c;
      c.branch_hidden = jc.at("branch_hidden").get<std::vector<std::size_t>>();
      c.trunk_hidden = jc.at("trunk_hidden").get<std::vector<std::size_t>>();
      c.latent_dim = jc.at("latent_dim").get<std::size_t>();
      c.activation = jc.at("activation").get<std::string>();
      model.config = c;
      break;
    }
    case RomKind::fno: {
      FnoConfig c;
      c.modes = jc.at("modes").get<std::size_t>();
      c.width = jc.at("width").get<std::size_t>();
      c.n_layers = jc.at("n_layers").get<std::size_t>();
      c.grid_len = jc.at("grid_len").get<std::size_t>();
      c.fft_len = jc.at("fft_len").get<std::size_t>();
      c.projection_width = jc.at("projection_width").get<std::size_t>();
      model.config = c;
      break;
    }
  }
  const auto& js = header.at("scaling");
  model.scaling.input_bounds = io_detail::bounds_from_json(js.at("input_bounds"));
  model.scaling.output_scaler.mean =
      js.at("output_scaler").at("mean").get<std::vector<double>>();
  model.scaling.output_scaler.stddev =
      js.at("output_scaler").at("stddev").get<std::vector<double>>();
  model.scaling.series_targets = js.at("series_targets").get<bool>();

  const auto n_weights = header.at("n_weights").get<std::size_t>();
  model.weights.reserve(n_weights);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    char* end = nullptr;
    const double w = std::strtod(line.c_str(), &end);
    if (end == line.c_str())
      throw std::runtime_error("load_model: malformed weight line in " + path);
    model.weights.push_back(w);
  }
  if (model.weights.size() != n_weights)
    throw std::runtime_error("load_model: weight count mismatch in " + path);
  model.validate();
  return model;
}

}  // namespace opforge
