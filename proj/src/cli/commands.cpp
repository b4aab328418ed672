#include "bathyscope/cli/commands.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "bathyscope/diag/diagnostics.hpp"
#include "bathyscope/explain/acamr.hpp"
#include "bathyscope/geo/geotiff.hpp"
#include "bathyscope/synth/scene.hpp"
#include "bathyscope/util/csv.hpp"
#include "bathyscope/util/image_io.hpp"

namespace bathyscope {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kDatasetSchemaVersion = 1;
constexpr int kReportSchemaVersion = 1;

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
}

json read_json(const std::string& path, const std::string& what) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing " + what + ": " + path);
  json j;
  in >> j;
  return j;
}

void snapshot_config(const PipelineConfig& cfg, const std::string& command) {
  fs::create_directories(cfg.run_dir());
  write_json(cfg.run_dir() + "/config." + command + ".json", cfg.to_json());
}

std::string checkpoint_path(const PipelineConfig& cfg) {
  return cfg.run_dir() + "/checkpoints/model.pt";
}

ModelHandle load_model(const PipelineConfig& cfg) {
  const auto path = checkpoint_path(cfg);
  if (!fs::exists(path))
    throw std::runtime_error("missing checkpoint (run `bathyscope train` first): " + path);
  auto model = load_checkpoint(path);
  model.infer_pad = cfg.explain.pad;
  return model;
}

std::string eval_split(const PipelineConfig& cfg) {
  return cfg.train.paper_protocol ? "train" : "test";
}

void write_region(const PipelineConfig& cfg, const SceneSection& section,
                  const std::string& region) {
  const auto dir = dataset_dir(cfg, region);
  fs::create_directories(dir);

  RegionSpec spec{section.scene, section.optics};
  const int64_t n = section.n_tiles;
  std::vector<SynthTile> tiles(static_cast<size_t>(n));

  const int64_t jobs = std::max<int64_t>(1, cfg.jobs);
  std::vector<std::thread> workers;
  std::atomic<int64_t> next{0};
  for (int64_t t = 0; t < std::min(jobs, n); ++t) {
    workers.emplace_back([&]() {
      while (true) {
        const int64_t i = next.fetch_add(1);
        if (i >= n) break;
        tiles[static_cast<size_t>(i)] = make_tile(spec, i);
      }
    });
  }
  for (auto& w : workers) w.join();

  std::vector<std::string> ids;
  for (const auto& tile : tiles) {
    ids.push_back(tile.tile_id);
    write_geotiff(dir + "/" + tile.tile_id + "_bands.tif", tile.bands.bands, tile.bands.affine,
                  tile.bands.crs_id);
    write_geotiff(dir + "/" + tile.tile_id + "_depth.tif", tile.depth.values, tile.depth.affine,
                  tile.depth.crs_id);
  }

  const auto n_train = static_cast<int64_t>(std::llround(section.train_frac * static_cast<double>(n)));
  std::vector<std::string> train_ids(ids.begin(), ids.begin() + std::min(n_train, n));
  std::vector<std::string> test_ids(ids.begin() + std::min(n_train, n), ids.end());

  write_json(dir + "/dataset.json",
             json{{"schema_version", kDatasetSchemaVersion},
                  {"region", region},
                  {"n_tiles", n},
                  {"d_max", cfg.data.d_max},
                  {"scale", cfg.data.scale},
                  {"glint_z", cfg.data.glint_z},
                  {"glint_window", cfg.data.glint_window},
                  {"apply_glint", cfg.data.apply_glint},
                  {"tile_ids", ids},
                  {"split", {{"train", train_ids}, {"test", test_ids}}}});
  std::cerr << "synth: wrote " << n << " tiles to " << dir << "\n";
}

}  // namespace

std::string dataset_dir(const PipelineConfig& cfg, const std::string& region) {
  return cfg.run_dir() + "/data/region" + region;
}

LoadedDataset load_dataset(const std::string& dir, const std::string& split) {
  const auto meta = read_json(dir + "/dataset.json", "dataset (run `bathyscope synth` first)");

  std::vector<std::string> ids;
  if (split == "all") {
    ids = meta.at("tile_ids").get<std::vector<std::string>>();
  } else {
    ids = meta.at("split").at(split).get<std::vector<std::string>>();
  }

  PreprocessOptions opts;
  opts.scale = meta.at("scale").get<double>();
  opts.d_max = meta.at("d_max").get<double>();
  opts.glint_z = meta.at("glint_z").get<double>();
  opts.glint_window = meta.at("glint_window").get<int64_t>();
  opts.apply_glint = meta.at("apply_glint").get<bool>();

  LoadedDataset out;
  out.d_max = opts.d_max;
  for (const auto& id : ids) {
    auto [tile, depth] = read_tile(dir + "/" + id + "_bands.tif");
    if (!depth) throw std::runtime_error("missing depth raster for tile " + id + " in " + dir);
    out.tiles.push_back(make_supervision_pair(tile, *depth, opts, id));
    out.tile_ids.push_back(id);
  }
  return out;
}

void cmd_synth(const PipelineConfig& cfg) {
  snapshot_config(cfg, "synth");
  write_region(cfg, cfg.scene, "A");
  if (cfg.scene_b) write_region(cfg, *cfg.scene_b, "B");
}

void cmd_train(const PipelineConfig& cfg) {
  snapshot_config(cfg, "train");
  auto train_set = load_dataset(dataset_dir(cfg, "A"), "train");
  auto val_set = load_dataset(dataset_dir(cfg, "A"), eval_split(cfg));
  if (train_set.tiles.empty()) throw std::runtime_error("train: region A has no training tiles");

  const auto ckpt_dir = cfg.run_dir() + "/checkpoints";
  auto result = train(train_set.tiles, cfg.net, cfg.train.spec,
                      val_set.tiles.empty() ? nullptr : &val_set.tiles, ckpt_dir);
  save_checkpoint(result.model, checkpoint_path(cfg));
  write_history_csv(cfg.run_dir() + "/history.csv", result.history);
  std::cerr << "train: " << result.history.size() << " epochs, final loss "
            << result.history.back().loss << ", checkpoint " << checkpoint_path(cfg) << "\n";
}

void cmd_eval(const PipelineConfig& cfg) {
  snapshot_config(cfg, "eval");
  auto model = load_model(cfg);
  auto data = load_dataset(dataset_dir(cfg, "A"), eval_split(cfg));
  auto report = evaluate(model, data.tiles, data.d_max);

  fs::create_directories(cfg.run_dir() + "/reports");
  write_json(cfg.run_dir() + "/reports/eval.json",
             json{{"schema_version", kReportSchemaVersion},
                  {"split", eval_split(cfg)},
                  {"rmse_m", report.rmse_m},
                  {"mae_m", report.mae_m},
                  {"r2", report.r2},
                  {"n_pixels", report.n_pixels}});
  CsvWriter csv(cfg.run_dir() + "/reports/eval.csv");
  csv.header({"rmse_m", "mae_m", "r2", "n_pixels"});
  csv.cell(report.rmse_m);
  csv.cell(report.mae_m);
  csv.cell(report.r2);
  csv.cell(report.n_pixels);
  csv.end_row();
  std::cerr << "eval: rmse " << report.rmse_m << " m, mae " << report.mae_m << " m, r2 "
            << report.r2 << " over " << report.n_pixels << " px\n";
}

void cmd_lobo(const PipelineConfig& cfg) {
  snapshot_config(cfg, "lobo");
  auto model = load_model(cfg);
  auto data = load_dataset(dataset_dir(cfg, "A"), eval_split(cfg));
  auto report = lobo(model, data.tiles, data.d_max, cfg.diagnostics.lobo_global_fill);

  fs::create_directories(cfg.run_dir() + "/reports");
  write_lobo_csv(cfg.run_dir() + "/reports/lobo.csv", report);
  json rows = json::array();
  for (const auto& r : report.rows)
    rows.push_back(json{{"band", r.band},
                        {"band_name", r.band_name},
                        {"delta_rmse_m", r.delta_rmse_m},
                        {"rank", r.rank}});
  write_json(cfg.run_dir() + "/reports/lobo.json",
             json{{"schema_version", kReportSchemaVersion},
                  {"baseline_rmse_m", report.baseline_rmse_m},
                  {"bands", rows}});
  std::cerr << "lobo: baseline " << report.baseline_rmse_m << " m\n";
}

void cmd_explain(const PipelineConfig& cfg) {
  snapshot_config(cfg, "explain");
  auto model = load_model(cfg);
  auto data = load_dataset(dataset_dir(cfg, "A"), eval_split(cfg));

  const auto fig_dir = cfg.run_dir() + "/figures";
  const auto rep_dir = cfg.run_dir() + "/reports";
  fs::create_directories(fig_dir);
  fs::create_directories(rep_dir);

  json weights = json::array();
  for (size_t i = 0; i < data.tiles.size(); ++i) {
    const auto& tile = data.tiles[i];
    auto sal = acamr(model, tile.x_norm, tile.y, tile.mask, data.d_max, cfg.explain.eps,
                     "last_decoder_block", data.tile_ids[i]);
    write_geotiff(fig_dir + "/saliency_" + data.tile_ids[i] + ".tif", sal.grid, Affine{},
                  "");
    write_heatmap_png(fig_dir + "/saliency_" + data.tile_ids[i] + ".png", sal.grid);
    weights.push_back(json{{"tile", data.tile_ids[i]},
                           {"e_full_m", sal.e_full_m},
                           {"channel_weights", sal.channel_weights}});
  }
  write_json(rep_dir + "/acamr_weights.json",
             json{{"schema_version", kReportSchemaVersion}, {"tiles", weights}});
  std::cerr << "explain: wrote saliency for " << data.tiles.size() << " tiles\n";
}

void cmd_retain(const PipelineConfig& cfg) {
  snapshot_config(cfg, "retain");
  auto model = load_model(cfg);
  auto data = load_dataset(dataset_dir(cfg, "A"), eval_split(cfg));

  std::vector<RetentionReport> reports;
  for (size_t i = 0; i < data.tiles.size(); ++i) {
    const auto& tile = data.tiles[i];
    auto sal = acamr(model, tile.x_norm, tile.y, tile.mask, data.d_max, cfg.explain.eps,
                     "last_decoder_block", data.tile_ids[i]);
    reports.push_back(retention_test(model, tile.x_norm, tile.y, tile.mask, sal,
                                     cfg.explain.rhos, data.d_max, data.tile_ids[i]));
  }
  fs::create_directories(cfg.run_dir() + "/reports");
  write_retention_csv(cfg.run_dir() + "/reports/retention.csv", reports);

  json jt = json::array();
  for (const auto& r : reports) {
    json rows = json::array();
    for (const auto& row : r.rows)
      rows.push_back(json{{"rho", row.rho}, {"e_mask_m", row.e_mask_m}, {"delta_pct", row.delta_pct}});
    jt.push_back(json{{"tile", r.tile_id}, {"e_full_m", r.e_full_m}, {"rows", rows}});
  }
  write_json(cfg.run_dir() + "/reports/retention.json",
             json{{"schema_version", kReportSchemaVersion}, {"tiles", jt}});
  std::cerr << "retain: " << reports.size() << " tiles x " << cfg.explain.rhos.size()
            << " retention levels\n";
}

void cmd_features(const PipelineConfig& cfg) {
  snapshot_config(cfg, "features");
  auto model = load_model(cfg);
  auto data = load_dataset(dataset_dir(cfg, "A"), eval_split(cfg));

  const auto rep = cfg.run_dir() + "/reports/features.csv";
  fs::create_directories(cfg.run_dir() + "/reports");
  fs::create_directories(cfg.run_dir() + "/figures");
  if (fs::exists(rep)) fs::remove(rep);

  json jt = json::array();
  for (size_t i = 0; i < data.tiles.size(); ++i) {
    const auto& tile = data.tiles[i];
    auto sal = acamr(model, tile.x_norm, tile.y, tile.mask, data.d_max, cfg.explain.eps,
                     "last_decoder_block", data.tile_ids[i]);
    auto omega = top_p_mask(sal, cfg.diagnostics.rho);
    auto fm = feature_maps(tile.x_norm, cfg.diagnostics.k, cfg.diagnostics.sigma,
                           cfg.diagnostics.ratio_clip);
    auto rows = saliency_correlations(fm, sal.grid, omega, cfg.explain.eps);
    write_feature_corr_csv(rep, data.tile_ids[i], rows, /*append=*/true);

    json jr = json::array();
    for (const auto& r : rows)
      jr.push_back(json{{"feature", r.feature}, {"mean", r.mean}, {"p90", r.p90}, {"corr_s", r.corr_s}});
    jt.push_back(json{{"tile", data.tile_ids[i]}, {"rho", cfg.diagnostics.rho}, {"rows", jr}});

    if (i == 0) {
      write_heatmap_png(cfg.run_dir() + "/figures/features_vis_" + data.tile_ids[i] + ".png",
                        fm.vis);
      write_heatmap_png(cfg.run_dir() + "/figures/features_saliency_" + data.tile_ids[i] + ".png",
                        sal.grid.to(torch::kFloat64));
    }
  }
  write_json(cfg.run_dir() + "/reports/features.json",
             json{{"schema_version", kReportSchemaVersion}, {"tiles", jt}});
  std::cerr << "features: " << data.tiles.size() << " tiles\n";
}

void cmd_bins(const PipelineConfig& cfg) {
  snapshot_config(cfg, "bins");
  auto model = load_model(cfg);
  auto data = load_dataset(dataset_dir(cfg, "A"), eval_split(cfg));

  auto [eval_report, bins] = cross_region_eval(model, data.tiles, data.d_max,
                                               cfg.diagnostics.bin_width_m,
                                               cfg.diagnostics.min_count);
  fs::create_directories(cfg.run_dir() + "/reports");
  fs::create_directories(cfg.run_dir() + "/figures");
  write_depth_bins_csv(cfg.run_dir() + "/reports/bins.csv", bins);
  write_depth_bin_chart_png(cfg.run_dir() + "/figures/bins.png", bins);

  json rows = json::array();
  for (const auto& r : bins.rows) {
    json row{{"lo_m", r.lo_m}, {"hi_m", r.hi_m}, {"count", r.count}};
    if (r.mae_m) row["mae_m"] = *r.mae_m;
    if (r.rmse_m) row["rmse_m"] = *r.rmse_m;
    rows.push_back(row);
  }
  write_json(cfg.run_dir() + "/reports/bins.json",
             json{{"schema_version", kReportSchemaVersion},
                  {"bin_width_m", bins.bin_width_m},
                  {"min_count", bins.min_count},
                  {"rows", rows}});
  std::cerr << "bins: " << bins.rows.size() << " bins over " << eval_report.n_pixels << " px\n";
}

void cmd_xregion(const PipelineConfig& cfg) {
  snapshot_config(cfg, "xregion");
  auto model = load_model(cfg);
  const auto dir_b = dataset_dir(cfg, "B");
  if (!fs::exists(dir_b + "/dataset.json"))
    throw std::runtime_error("missing region B dataset (configure scene_b and run synth): " +
                             dir_b + "/dataset.json");
  auto data = load_dataset(dir_b, "all");

  auto [eval_report, bins] = cross_region_eval(model, data.tiles, data.d_max,
                                               cfg.diagnostics.bin_width_m,
                                               cfg.diagnostics.min_count);
  fs::create_directories(cfg.run_dir() + "/reports");
  fs::create_directories(cfg.run_dir() + "/figures");
  write_depth_bins_csv(cfg.run_dir() + "/reports/xregion_bins.csv", bins);
  write_depth_bin_chart_png(cfg.run_dir() + "/figures/xregion_bins.png", bins);

  json rows = json::array();
  for (const auto& r : bins.rows) {
    json row{{"lo_m", r.lo_m}, {"hi_m", r.hi_m}, {"count", r.count}};
    if (r.mae_m) row["mae_m"] = *r.mae_m;
    if (r.rmse_m) row["rmse_m"] = *r.rmse_m;
    rows.push_back(row);
  }
  write_json(cfg.run_dir() + "/reports/xregion_eval.json",
             json{{"schema_version", kReportSchemaVersion},
                  {"rmse_m", eval_report.rmse_m},
                  {"mae_m", eval_report.mae_m},
                  {"r2", eval_report.r2},
                  {"n_pixels", eval_report.n_pixels},
                  {"bins", rows}});
  std::cerr << "xregion: rmse " << eval_report.rmse_m << " m on region B\n";
}

}  // namespace bathyscope
