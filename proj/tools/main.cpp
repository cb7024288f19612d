// fiberorient command line: phantom generation, orientation analysis, and
// layer profiles for 3D volume images.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fiberorient/fiberorient.hpp"

namespace fs = std::filesystem;
using namespace fiberorient;
using nlohmann::json;

namespace {

struct RawParams {
  std::vector<int> dims;
  std::string type = "u8";
  bool msb = false;
  std::vector<double> spacing{1.0, 1.0, 1.0};
};

ElementType parse_element_type(const std::string& t) {
  if (t == "u8") return ElementType::U8;
  if (t == "u16") return ElementType::U16;
  if (t == "s16") return ElementType::S16;
  if (t == "f32") return ElementType::F32;
  throw ArgumentError("unknown raw element type \"" + t + "\" (u8|u16|s16|f32)");
}

double spacing_unit_scale(const std::string& unit) {
  if (unit == "um") return 1.0;
  if (unit == "mm") return 1000.0;
  throw ArgumentError("unknown spacing unit \"" + unit + "\" (um|mm)");
}

Volume load_input(const std::string& input, const RawParams& raw, const std::string& unit) {
  const double scale = spacing_unit_scale(unit);
  if (!raw.dims.empty()) {
    if (raw.dims.size() != 3) throw ArgumentError("--raw-dims expects nx,ny,nz");
    return read_raw(input, Dims{raw.dims[0], raw.dims[1], raw.dims[2]},
                    parse_element_type(raw.type),
                    raw.msb ? ByteOrder::BigEndian : ByteOrder::LittleEndian,
                    Vec3{raw.spacing[0], raw.spacing[1], raw.spacing[2]} * scale);
  }
  return read_mhd(input, scale, &std::cerr);
}

void write_analysis_outputs(const fs::path& out_dir, const AnalysisResult& res,
                            const AnalysisConfig& cfg, const std::string& input_name,
                            bool export_fields) {
  fs::create_directories(out_dir);
  const json summary = summary_json(res, cfg, input_name);
  write_text_file(out_dir / "summary.json", summary.dump(2) + "\n");

  json meta{{"tool", "fiberorient"},
            {"version", kVersion},
            {"config", config_to_json(cfg)},
            {"input", input_name}};
  write_tiles_csv(out_dir / "tiles.csv", res.tiles, meta);
  write_profile_csv(out_dir / "profile_x.csv", res.profile_x, meta);
  write_profile_csv(out_dir / "profile_y.csv", res.profile_y, meta);
  write_profile_csv(out_dir / "profile_z.csv", res.profile_z, meta);
  write_profile_csv(out_dir / "layers.csv", res.layers, meta);

  if (export_fields) {
    const Dims& d = res.dims;
    Volume comp(d, res.spacing);
    const char* names[3] = {"dir_x.mhd", "dir_y.mhd", "dir_z.mhd"};
    for (int c = 0; c < 3; ++c) {
      for (std::size_t i = 0; i < comp.size(); ++i)
        comp[i] = res.field.valid[i] ? res.field.dir[i][static_cast<std::size_t>(c)] : 0.0f;
      write_mhd(comp, out_dir / names[c]);
    }
    Mask valid(d);
    for (std::size_t i = 0; i < valid.size(); ++i) valid[i] = res.field.valid[i];
    write_mhd_mask(valid, res.spacing, out_dir / "valid.mhd");
    write_mhd_mask(res.part, res.spacing, out_dir / "part_mask.mhd");
    write_mhd_mask(res.fiber, res.spacing, out_dir / "fiber_mask.mhd");
  }
}

json phantom_config_echo(const std::string& kind, const std::vector<int>& dims,
                         const std::vector<double>& spacing, double radius, int n_fibers,
                         std::uint64_t seed, const PhantomGrays& grays, double noise) {
  return {{"kind", kind},
          {"dims", dims},
          {"spacing_um", spacing},
          {"radius_um", radius},
          {"n_fibers", n_fibers},
          {"seed", seed},
          {"gray_air", grays.air},
          {"gray_matrix", grays.matrix},
          {"gray_fiber", grays.fiber},
          {"noise_sigma", noise}};
}

int run(int argc, char** argv) {
  CLI::App app{"fiberorient: local fiber orientation tensors from 3D volume images"};
  app.require_subcommand(1);

  // ---- analyze -------------------------------------------------------------
  auto* analyze = app.add_subcommand("analyze", "Analyze a volume and write tensors + profiles");
  std::string input, output_dir, config_path, method = "hessian", spacing_unit = "um";
  RawParams raw;
  AnalysisConfig cfg;
  double part_threshold = 0.0, fiber_diameter = 0.0, fiber_factor = 1.25, sigma_factor = 1.0;
  double st_int_factor = 1.0, tile_edge = 218.0, min_fraction = 0.01, alpha_report = 0.6;
  int layers = 12, threads = 0;
  bool export_fields = false;

  analyze->add_option("-i,--input", input, "Input volume (.mhd header, or raw with --raw-dims)")
      ->required();
  analyze->add_option("-o,--output-dir", output_dir, "Directory for all outputs")->required();
  analyze->add_option("-c,--config", config_path, "JSON config file; flags override its values");
  analyze->add_option("--part-threshold", part_threshold,
                      "Manual gray threshold separating solid matter from air (required)");
  analyze->add_option("--fiber-diameter", fiber_diameter, "Fiber diameter in um (required)");
  analyze->add_option("--fiber-threshold-factor", fiber_factor,
                      "Fiber phase threshold = factor * Otsu threshold (default 1.25)");
  analyze->add_option("--sigma-factor", sigma_factor,
                      "Smoothing sigma = factor * fiber radius (default 1)");
  analyze->add_option("--method", method, "hessian | structure-tensor (default hessian)");
  analyze->add_option("--st-sigma-int-factor", st_int_factor,
                      "Structure tensor integration scale, relative to the gradient scale");
  analyze->add_option("--tile-edge", tile_edge, "Tile edge length in um (default 218)");
  analyze->add_option("--min-fiber-fraction", min_fraction,
                      "Minimum fiber-voxel fraction for a tile to count (default 0.01)");
  analyze->add_option("--alpha-report", alpha_report,
                      "Report mean direction only when alpha reaches this (default 0.6)");
  analyze->add_option("--layers", layers, "Equal-thickness z bands for layers.csv (default 12)");
  analyze->add_option("--spacing-unit", spacing_unit, "Unit of header spacing: um | mm");
  analyze->add_option("--threads", threads, "Worker threads; 0 = all cores. Never affects results");
  analyze->add_flag("--export-fields", export_fields,
                    "Also write per-voxel direction components and masks as MHD");
  analyze->add_option("--raw-dims", raw.dims, "Raw input: voxel counts nx,ny,nz")->delimiter(',');
  analyze->add_option("--raw-type", raw.type, "Raw input element type: u8|u16|s16|f32");
  analyze->add_flag("--raw-msb", raw.msb, "Raw input is big-endian");
  analyze->add_option("--raw-spacing", raw.spacing, "Raw input voxel spacing sx,sy,sz")
      ->delimiter(',');

  // ---- phantom -------------------------------------------------------------
  auto* phantom = app.add_subcommand("phantom", "Generate synthetic fiber volumes with ground truth");
  phantom->require_subcommand(1);
  std::vector<int> ph_dims{64, 64, 64};
  std::vector<double> ph_spacing{1.0};
  double ph_radius = 3.0, ph_noise = 0.0, ph_fill = 0.25;
  std::vector<double> ph_dir{0.0, 1.0, 0.0};
  int ph_n = 100;
  std::uint64_t ph_seed = 0;
  PhantomGrays grays;
  std::string ph_out, ph_name = "phantom";
  int ph_threads = 0;

  auto add_phantom_common = [&](CLI::App* sub) {
    sub->add_option("--dims", ph_dims, "Voxel counts nx,ny,nz")->delimiter(',');
    sub->add_option("--spacing", ph_spacing, "Voxel spacing in um (one value or sx,sy,sz)")
        ->delimiter(',');
    sub->add_option("--radius", ph_radius, "Fiber radius in um");
    sub->add_option("--seed", ph_seed, "RNG seed; identical seeds give identical volumes");
    sub->add_option("--gray-air", grays.air, "Air gray value");
    sub->add_option("--gray-matrix", grays.matrix, "Matrix gray value");
    sub->add_option("--gray-fiber", grays.fiber, "Fiber gray value");
    sub->add_option("--noise-sigma", ph_noise, "Additive Gaussian noise sigma (default 0)");
    sub->add_option("--threads", ph_threads, "Worker threads; 0 = all cores");
    sub->add_option("--name", ph_name, "Base name of the output files");
    sub->add_option("-o,--output-dir", ph_out, "Directory for phantom + ground truth")->required();
  };
  auto* bundle = phantom->add_subcommand("bundle", "Parallel straight fibers along a direction");
  bundle->add_option("--direction", ph_dir, "Fiber axis dx,dy,dz")->delimiter(',');
  bundle->add_option("--n-fibers", ph_n, "Number of fibers");
  add_phantom_common(bundle);
  auto* isotropic = phantom->add_subcommand("isotropic", "Fibers with uniform random axes");
  isotropic->add_option("--n-fibers", ph_n, "Number of fibers");
  add_phantom_common(isotropic);
  auto* shellcore = phantom->add_subcommand("shell-core",
                                            "y-fiber shells around an x-fiber core layer");
  shellcore->add_option("--fill", ph_fill, "Fiber fill fraction per layer (default 0.25)");
  add_phantom_common(shellcore);

  // ---- profile ---------------------------------------------------------
  auto* profile = app.add_subcommand("profile", "Layer profile from an existing tiles.csv");
  std::string pr_tiles, pr_axis, pr_out;
  int pr_layers = 12;
  profile->add_option("--tiles", pr_tiles, "tiles.csv written by analyze")->required();
  profile->add_option("--axis", pr_axis, "Average per tile layer along this axis: x|y|z");
  profile->add_option("--layers", pr_layers,
                      "Re-bin tiles along z into this many equal bands (default 12)");
  profile->add_option("-o,--output-dir", pr_out, "Directory for profile.csv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }

  if (analyze->parsed()) {
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw IoError("cannot open config file: " + config_path);
      json j = json::parse(in, nullptr, true, true);
      config_from_json(j, cfg);
    }
    if (analyze->count("--part-threshold")) cfg.part_threshold = part_threshold;
    if (analyze->count("--fiber-diameter")) cfg.fiber_diameter_um = fiber_diameter;
    if (analyze->count("--fiber-threshold-factor")) cfg.fiber_threshold_factor = fiber_factor;
    if (analyze->count("--sigma-factor")) cfg.sigma_factor = sigma_factor;
    if (analyze->count("--st-sigma-int-factor")) cfg.st_sigma_int_factor = st_int_factor;
    if (analyze->count("--tile-edge")) cfg.tile_edge_um = tile_edge;
    if (analyze->count("--min-fiber-fraction")) cfg.min_fiber_fraction = min_fraction;
    if (analyze->count("--alpha-report")) cfg.alpha_report = alpha_report;
    if (analyze->count("--layers")) cfg.profile_layers = layers;
    if (analyze->count("--method")) {
      if (method == "hessian") cfg.method = Method::Hessian;
      else if (method == "structure-tensor") cfg.method = Method::StructureTensor;
      else throw ArgumentError("unknown method \"" + method + "\" (hessian|structure-tensor)");
    }
    cfg.threads = threads;

    const Volume v = load_input(input, raw, spacing_unit);
    const AnalysisResult res = analyze_volume(v, cfg);
    write_analysis_outputs(output_dir, res, cfg, fs::path(input).filename().string(),
                           export_fields);
    std::cout << "analyzed " << input << ": " << res.global.count << " fiber voxels, alpha "
              << res.global.alpha << ", a_yy " << res.global.tensor.yy << "\n";
    return 0;
  }

  if (phantom->parsed()) {
    if (ph_spacing.size() == 1) ph_spacing = {ph_spacing[0], ph_spacing[0], ph_spacing[0]};
    if (ph_dims.size() != 3 || ph_spacing.size() != 3)
      throw ArgumentError("--dims expects nx,ny,nz and --spacing one or three values");
    const Dims dims{ph_dims[0], ph_dims[1], ph_dims[2]};
    const Vec3 spacing{ph_spacing[0], ph_spacing[1], ph_spacing[2]};

    PhantomResult res;
    std::string kind;
    if (bundle->parsed()) {
      kind = "bundle";
      if (ph_dir.size() != 3) throw ArgumentError("--direction expects dx,dy,dz");
      res = gen_straight_bundle(dims, spacing, Vec3{ph_dir[0], ph_dir[1], ph_dir[2]}, ph_radius,
                                ph_n, ph_seed, grays, ph_noise, ph_threads);
    } else if (isotropic->parsed()) {
      kind = "isotropic";
      res = gen_isotropic_fibers(dims, spacing, ph_radius, ph_n, ph_seed, grays, ph_noise,
                                 ph_threads);
    } else {
      kind = "shell-core";
      res = gen_shell_core(dims, spacing, ph_radius, ph_seed, ph_fill, grays, ph_noise,
                           ph_threads);
    }

    fs::create_directories(ph_out);
    const fs::path base = fs::path(ph_out) / ph_name;
    write_mhd(res.volume, base.string() + ".mhd");
    json echo = phantom_config_echo(kind, ph_dims, ph_spacing, ph_radius,
                                    static_cast<int>(res.axes.size()), ph_seed, grays, ph_noise);
    if (bundle->parsed()) echo["direction"] = ph_dir;
    if (shellcore->parsed()) echo["fill_fraction"] = ph_fill;
    write_text_file(base.string() + "_truth.json", phantom_truth_json(res, echo).dump(2) + "\n");
    std::cout << "wrote " << base.string() << ".mhd with " << res.axes.size() << " fibers\n";
    return 0;
  }

  if (profile->parsed()) {
    json meta;
    const TileGrid g = read_tiles_csv(pr_tiles, &meta);
    LayerProfile p;
    if (profile->count("--axis")) {
      if (pr_axis != "x" && pr_axis != "y" && pr_axis != "z")
        throw ArgumentError("--axis expects x, y, or z");
      p = axis_profile(g, pr_axis == "x" ? 0 : pr_axis == "y" ? 1 : 2);
    } else {
      p = layer_resample(g, pr_layers);
    }
    fs::create_directories(pr_out);
    json out_meta{{"tool", "fiberorient"}, {"version", kVersion}, {"source", meta}};
    write_profile_csv(fs::path(pr_out) / "profile.csv", p, out_meta);
    std::cout << "wrote " << (fs::path(pr_out) / "profile.csv").string() << "\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ArgumentError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
