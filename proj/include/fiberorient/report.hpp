#pragma once

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fiberorient/analysis.hpp"
#include "fiberorient/phantom.hpp"
#include "fiberorient/tensor_stats.hpp"
#include "fiberorient/version.hpp"

namespace fiberorient {

namespace detail {

/// Shortest round-trippable decimal representation; used for every number in
/// CSV output so reruns are byte-identical.
inline std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // Prefer the shortest representation that still parses back exactly.
  for (int prec = 6; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

}  // namespace detail

inline nlohmann::json tensor_to_json(const SymMat3& t) {
  return {{"xx", t.xx}, {"yy", t.yy}, {"zz", t.zz}, {"xy", t.xy}, {"xz", t.xz}, {"yz", t.yz}};
}

inline SymMat3 tensor_from_json(const nlohmann::json& j) {
  return {j.at("xx").get<double>(), j.at("yy").get<double>(), j.at("zz").get<double>(),
          j.at("xy").get<double>(), j.at("xz").get<double>(), j.at("yz").get<double>()};
}

inline nlohmann::json config_to_json(const AnalysisConfig& cfg) {
  return {{"part_threshold", cfg.part_threshold},
          {"fiber_threshold_factor", cfg.fiber_threshold_factor},
          {"fiber_diameter_um", cfg.fiber_diameter_um},
          {"sigma_factor", cfg.sigma_factor},
          {"method", method_name(cfg.method)},
          {"st_sigma_int_factor", cfg.st_sigma_int_factor},
          {"tile_edge_um", cfg.tile_edge_um},
          {"min_fiber_fraction", cfg.min_fiber_fraction},
          {"alpha_report", cfg.alpha_report},
          {"profile_layers", cfg.profile_layers}};
}

inline void config_from_json(const nlohmann::json& j, AnalysisConfig& cfg) {
  if (j.contains("part_threshold")) cfg.part_threshold = j["part_threshold"].get<double>();
  if (j.contains("fiber_threshold_factor"))
    cfg.fiber_threshold_factor = j["fiber_threshold_factor"].get<double>();
  if (j.contains("fiber_diameter_um")) cfg.fiber_diameter_um = j["fiber_diameter_um"].get<double>();
  if (j.contains("sigma_factor")) cfg.sigma_factor = j["sigma_factor"].get<double>();
  if (j.contains("method")) {
    const std::string m = j["method"].get<std::string>();
    if (m == "hessian") cfg.method = Method::Hessian;
    else if (m == "structure-tensor") cfg.method = Method::StructureTensor;
    else throw ArgumentError("config: unknown method \"" + m + "\"");
  }
  if (j.contains("st_sigma_int_factor"))
    cfg.st_sigma_int_factor = j["st_sigma_int_factor"].get<double>();
  if (j.contains("tile_edge_um")) cfg.tile_edge_um = j["tile_edge_um"].get<double>();
  if (j.contains("min_fiber_fraction"))
    cfg.min_fiber_fraction = j["min_fiber_fraction"].get<double>();
  if (j.contains("alpha_report")) cfg.alpha_report = j["alpha_report"].get<double>();
  if (j.contains("profile_layers")) cfg.profile_layers = j["profile_layers"].get<int>();
}

inline nlohmann::json direction_to_json(const std::optional<Vec3>& d) {
  if (!d) return nullptr;
  return nlohmann::json::array({d->x, d->y, d->z});
}

/// Machine-readable run summary; mirrors one region row: global tensor,
/// anisotropy index, gated mean direction, plus the full config echo.
inline nlohmann::json summary_json(const AnalysisResult& res, const AnalysisConfig& cfg,
                                   const std::string& input_name) {
  std::size_t n_valid = 0;
  for (const Tile& t : res.tiles.tiles) n_valid += t.valid;
  nlohmann::json j{
      {"tool", "fiberorient"},
      {"version", kVersion},
      {"config", config_to_json(cfg)},
      {"input",
       {{"name", input_name},
        {"dims", {res.dims.nx, res.dims.ny, res.dims.nz}},
        {"spacing_um", {res.spacing.x, res.spacing.y, res.spacing.z}}}},
      {"segmentation",
       {{"otsu_threshold", res.otsu_value}, {"fiber_threshold", res.fiber_threshold}}},
      {"filtering",
       {{"sigma_vox", {res.sigma_vox.x, res.sigma_vox.y, res.sigma_vox.z}},
        {"fallback_kernel", res.used_fallback}}},
      {"global",
       {{"count", res.global.count},
        {"tensor", tensor_to_json(res.global.tensor)},
        {"alpha", res.global.alpha},
        {"mean_direction", direction_to_json(res.global.mean_dir)}}},
      {"tiles",
       {{"grid", {res.tiles.grid.nx, res.tiles.grid.ny, res.tiles.grid.nz}},
        {"edge_vox", res.tile_edge_vox},
        {"min_fiber_voxels", res.min_fiber_voxels},
        {"valid", n_valid},
        {"total", res.tiles.tiles.size()}}}};
  return j;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

inline const char* kTilesCsvHeader =
    "tile_ix,tile_iy,tile_iz,center_x_um,center_y_um,center_z_um,count,"
    "a_xx,a_yy,a_zz,a_xy,a_xz,a_yz,alpha,mean_x,mean_y,mean_z,valid";

/// Tile CSV: one row per tile, config echo and grid metadata in '#' comment
/// lines. Tensor/alpha cells are empty when the tile holds no valid voxels;
/// mean direction cells are empty unless the tile is valid and alpha passes
/// the report threshold.
inline void write_tiles_csv(const std::filesystem::path& path, const TileGrid& g,
                            const nlohmann::json& meta) {
  using detail::fmt_g;
  std::ostringstream out;
  nlohmann::json m = meta;
  m["grid"] = {g.grid.nx, g.grid.ny, g.grid.nz};
  m["edge_vox"] = g.edge_vox;
  m["vol_dims"] = {g.vol_dims.nx, g.vol_dims.ny, g.vol_dims.nz};
  m["spacing_um"] = {g.spacing.x, g.spacing.y, g.spacing.z};
  m["alpha_report"] = g.alpha_report;
  m["min_fiber_voxels"] = g.min_fiber_voxels;
  out << "# fiberorient tiles v1\n# meta " << m.dump() << "\n" << kTilesCsvHeader << "\n";

  for (int tz = 0; tz < g.grid.nz; ++tz)
    for (int ty = 0; ty < g.grid.ny; ++ty)
      for (int tx = 0; tx < g.grid.nx; ++tx) {
        const Tile& t = g.at(tx, ty, tz);
        const Vec3 c = g.tile_center_um(tx, ty, tz);
        out << tx << ',' << ty << ',' << tz << ',' << fmt_g(c.x) << ',' << fmt_g(c.y) << ','
            << fmt_g(c.z) << ',' << t.count << ',';
        if (t.count > 0) {
          out << fmt_g(t.tensor.xx) << ',' << fmt_g(t.tensor.yy) << ',' << fmt_g(t.tensor.zz)
              << ',' << fmt_g(t.tensor.xy) << ',' << fmt_g(t.tensor.xz) << ','
              << fmt_g(t.tensor.yz) << ',' << fmt_g(t.alpha) << ',';
        } else {
          out << ",,,,,,,";
        }
        if (t.mean_dir) {
          out << fmt_g(t.mean_dir->x) << ',' << fmt_g(t.mean_dir->y) << ','
              << fmt_g(t.mean_dir->z);
        } else {
          out << ",,";
        }
        out << ',' << (t.valid ? 1 : 0) << "\n";
      }
  write_text_file(path, out.str());
}

inline const char* kProfileCsvHeader = "layer,center_um,a_xx,a_yy,a_zz,alpha";

/// Profile CSV: one row per layer; absent layers keep empty value cells.
inline void write_profile_csv(const std::filesystem::path& path, const LayerProfile& p,
                              const nlohmann::json& meta) {
  using detail::fmt_g;
  std::ostringstream out;
  nlohmann::json m = meta;
  m["axis"] = p.axis == 0 ? "x" : p.axis == 1 ? "y" : "z";
  m["layers"] = p.layers.size();
  out << "# fiberorient profile v1\n# meta " << m.dump() << "\n" << kProfileCsvHeader << "\n";
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    const ProfileLayer& L = p.layers[i];
    out << i << ',' << fmt_g(L.center_um) << ',';
    if (L.present) {
      out << fmt_g(L.tensor.xx) << ',' << fmt_g(L.tensor.yy) << ',' << fmt_g(L.tensor.zz) << ','
          << fmt_g(L.alpha);
    } else {
      out << ",,,";
    }
    out << "\n";
  }
  write_text_file(path, out.str());
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
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

}  // namespace detail

/// Reads a tile CSV written by write_tiles_csv back into a TileGrid.
/// Validates the header and names the first missing column on mismatch.
inline TileGrid read_tiles_csv(const std::filesystem::path& path, nlohmann::json* meta_out = nullptr) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open tiles csv: " + path.string());

  nlohmann::json meta;
  std::string line;
  bool have_header = false;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string tag = "# meta ";
      if (line.rfind(tag, 0) == 0) meta = nlohmann::json::parse(line.substr(tag.size()));
      continue;
    }
    if (!have_header) {
      const auto expected = detail::split_csv_line(kTilesCsvHeader);
      const auto got = detail::split_csv_line(line);
      for (const auto& col : expected) {
        if (std::find(got.begin(), got.end(), col) == got.end())
          throw ArgumentError("tiles csv: missing column \"" + col + "\" in header");
      }
      if (got != expected)
        throw ArgumentError("tiles csv: unexpected column order; expected \"" +
                            std::string(kTilesCsvHeader) + "\"");
      have_header = true;
      continue;
    }
    rows.push_back(detail::split_csv_line(line));
  }
  if (!have_header) throw ArgumentError("tiles csv: missing header row in " + path.string());
  if (meta.is_null())
    throw ArgumentError("tiles csv: missing '# meta' line in " + path.string() +
                        "; file was not written by this tool");

  TileGrid g;
  g.grid = Dims{meta.at("grid")[0].get<int>(), meta.at("grid")[1].get<int>(),
                meta.at("grid")[2].get<int>()};
  g.edge_vox = meta.at("edge_vox").get<int>();
  g.vol_dims = Dims{meta.at("vol_dims")[0].get<int>(), meta.at("vol_dims")[1].get<int>(),
                    meta.at("vol_dims")[2].get<int>()};
  g.spacing = Vec3{meta.at("spacing_um")[0].get<double>(), meta.at("spacing_um")[1].get<double>(),
                   meta.at("spacing_um")[2].get<double>()};
  g.alpha_report = meta.at("alpha_report").get<double>();
  g.min_fiber_voxels = meta.at("min_fiber_voxels").get<std::uint64_t>();
  g.tiles.resize(g.grid.size());

  for (const auto& r : rows) {
    if (r.size() != 18) throw ArgumentError("tiles csv: row with " + std::to_string(r.size()) +
                                            " fields, expected 18");
    const int tx = std::stoi(r[0]), ty = std::stoi(r[1]), tz = std::stoi(r[2]);
    if (!g.grid.contains(tx, ty, tz))
      throw ArgumentError("tiles csv: tile index out of grid bounds");
    Tile& t = g.at(tx, ty, tz);
    t.count = std::stoull(r[6]);
    if (!r[7].empty()) {
      t.tensor = SymMat3{std::stod(r[7]), std::stod(r[8]), std::stod(r[9]),
                         std::stod(r[10]), std::stod(r[11]), std::stod(r[12])};
      t.alpha = std::stod(r[13]);
    }
    if (!r[14].empty()) t.mean_dir = Vec3{std::stod(r[14]), std::stod(r[15]), std::stod(r[16])};
    t.valid = r[17] == "1";
  }
  if (meta_out) *meta_out = meta;
  return g;
}

/// Ground-truth JSON for a generated phantom: config echo, tensor of the
/// placed axes, per-fiber axes, per-layer tensors where applicable.
inline nlohmann::json phantom_truth_json(const PhantomResult& res, const nlohmann::json& config_echo) {
  nlohmann::json axes = nlohmann::json::array();
  for (const Vec3& a : res.axes) axes.push_back({a.x, a.y, a.z});
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& L : res.layer_truth) {
    layers.push_back(
        {{"z_lo_um", L.z_lo_um}, {"z_hi_um", L.z_hi_um}, {"tensor", tensor_to_json(L.tensor)}});
  }
  return {{"tool", "fiberorient"},
          {"version", kVersion},
          {"config", config_echo},
          {"axes_tensor", tensor_to_json(res.axes_tensor)},
          {"n_fibers", res.axes.size()},
          {"axes", axes},
          {"layers", layers}};
}

}  // namespace fiberorient
