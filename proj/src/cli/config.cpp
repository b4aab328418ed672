#include "bathyscope/cli/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <stdexcept>

namespace bathyscope {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument("config: section '" + where + "' must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key))
      throw std::invalid_argument("config: unknown key '" + (where.empty() ? key : where + "." + key) + "'");
  }
}

std::vector<double> band_vector(const json& section, const std::string& key,
                                const std::vector<double>& fallback) {
  // Accepts either an array ("k_att": [a,b,c]) or dotted scalars
  // ("k_att.b0": a, ...).
  if (section.contains(key)) return section.at(key).get<std::vector<double>>();
  std::vector<double> out = fallback;
  for (size_t b = 0; b < out.size(); ++b) {
    const std::string dotted = key + ".b" + std::to_string(b);
    if (section.contains(dotted)) out[b] = section.at(dotted).get<double>();
  }
  return out;
}

SceneSection parse_scene(const json& j, const std::string& where) {
  static const std::set<std::string> known{
      "size",          "depth_range",  "depth_mode",    "shoreline",    "seed",
      "n_tiles",       "train_frac",   "k_att",         "albedo_mean",  "albedo_var",
      "r_inf",         "glint_frac",   "noise_sigma",   "k_att.b0",     "k_att.b1",
      "k_att.b2",      "albedo_mean.b0", "albedo_mean.b1", "albedo_mean.b2",
      "albedo_var.b0", "albedo_var.b1",  "albedo_var.b2",  "r_inf.b0",
      "r_inf.b1",      "r_inf.b2"};
  reject_unknown(j, known, where);

  SceneSection s;
  if (j.contains("size")) {
    auto sz = j.at("size").get<std::vector<int64_t>>();
    if (sz.size() != 2) throw std::invalid_argument("config: " + where + ".size needs [H,W]");
    s.scene.height = sz[0];
    s.scene.width = sz[1];
  }
  if (j.contains("depth_range")) {
    auto dr = j.at("depth_range").get<std::vector<double>>();
    if (dr.size() != 2) throw std::invalid_argument("config: " + where + ".depth_range needs [min,max]");
    s.scene.depth_min = dr[0];
    s.scene.depth_max = dr[1];
  }
  if (j.contains("depth_mode")) s.scene.mode = depth_mode_from_string(j.at("depth_mode"));
  s.scene.shoreline = j.value("shoreline", s.scene.shoreline);
  s.scene.seed = j.value("seed", s.scene.seed);
  s.n_tiles = j.value("n_tiles", s.n_tiles);
  s.train_frac = j.value("train_frac", s.train_frac);

  s.optics.k_att = band_vector(j, "k_att", s.optics.k_att);
  s.optics.albedo_mean = band_vector(j, "albedo_mean", s.optics.albedo_mean);
  s.optics.albedo_var = band_vector(j, "albedo_var", s.optics.albedo_var);
  s.optics.r_inf = band_vector(j, "r_inf", s.optics.r_inf);
  s.optics.glint_frac = j.value("glint_frac", s.optics.glint_frac);
  s.optics.noise_sigma = j.value("noise_sigma", s.optics.noise_sigma);
  s.optics.validate();
  s.scene.validate();
  return s;
}

json scene_to_json(const SceneSection& s) {
  return json{{"size", {s.scene.height, s.scene.width}},
              {"depth_range", {s.scene.depth_min, s.scene.depth_max}},
              {"depth_mode", to_string(s.scene.mode)},
              {"shoreline", s.scene.shoreline},
              {"seed", s.scene.seed},
              {"n_tiles", s.n_tiles},
              {"train_frac", s.train_frac},
              {"k_att", s.optics.k_att},
              {"albedo_mean", s.optics.albedo_mean},
              {"albedo_var", s.optics.albedo_var},
              {"r_inf", s.optics.r_inf},
              {"glint_frac", s.optics.glint_frac},
              {"noise_sigma", s.optics.noise_sigma}};
}

}  // namespace

PipelineConfig PipelineConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config file not found: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("config parse error in " + path + ": " + e.what());
  }
  return from_json(j);
}

PipelineConfig PipelineConfig::from_json(const json& j) {
  static const std::set<std::string> top{"run_id", "output_dir", "data",       "scene",
                                         "scene_b", "net",       "train",      "loss",
                                         "explain", "diagnostics"};
  reject_unknown(j, top, "");

  PipelineConfig c;
  c.run_id = j.value("run_id", c.run_id);
  c.output_dir = j.value("output_dir", c.output_dir);

  if (j.contains("data")) {
    static const std::set<std::string> known{"scale", "dmax", "glint_z", "glint_window",
                                             "apply_glint"};
    reject_unknown(j.at("data"), known, "data");
    const auto& d = j.at("data");
    c.data.scale = d.value("scale", c.data.scale);
    c.data.d_max = d.value("dmax", c.data.d_max);
    c.data.glint_z = d.value("glint_z", c.data.glint_z);
    c.data.glint_window = d.value("glint_window", c.data.glint_window);
    c.data.apply_glint = d.value("apply_glint", c.data.apply_glint);
  }
  if (j.contains("scene")) c.scene = parse_scene(j.at("scene"), "scene");
  if (j.contains("scene_b")) c.scene_b = parse_scene(j.at("scene_b"), "scene_b");
  if (j.contains("net")) {
    static const std::set<std::string> known{"unet_filters", "vit_dims", "vit_depth", "heads",
                                             "window",       "mlp_ratio", "patch",    "dropout",
                                             "in_channels",  "variant",   "seed"};
    reject_unknown(j.at("net"), known, "net");
    c.net = NetConfig::from_json(j.at("net"));
  }
  if (j.contains("train")) {
    static const std::set<std::string> known{"epochs", "lr0",  "batch",         "crop",
                                             "seed",   "augment", "paper_protocol"};
    reject_unknown(j.at("train"), known, "train");
    const auto& t = j.at("train");
    c.train.spec.epochs = t.value("epochs", c.train.spec.epochs);
    c.train.spec.lr0 = t.value("lr0", c.train.spec.lr0);
    c.train.spec.batch = t.value("batch", c.train.spec.batch);
    c.train.spec.crop = t.value("crop", c.train.spec.crop);
    c.train.spec.seed = t.value("seed", c.train.spec.seed);
    c.train.spec.augment = t.value("augment", c.train.spec.augment);
    c.train.paper_protocol = t.value("paper_protocol", c.train.paper_protocol);
  }
  if (j.contains("loss")) {
    static const std::set<std::string> known{"kind", "decay", "d_min", "d_max_dist", "eps"};
    reject_unknown(j.at("loss"), known, "loss");
    const auto& l = j.at("loss");
    if (l.contains("kind")) c.train.spec.loss.kind = loss_kind_from_string(l.at("kind"));
    if (l.contains("decay")) c.train.spec.loss.decay = decay_kind_from_string(l.at("decay"));
    c.train.spec.loss.d_min = l.value("d_min", c.train.spec.loss.d_min);
    c.train.spec.loss.d_max_dist = l.value("d_max_dist", c.train.spec.loss.d_max_dist);
    c.train.spec.loss.eps = l.value("eps", c.train.spec.loss.eps);
  }
  if (j.contains("explain")) {
    static const std::set<std::string> known{"rhos", "pad", "eps"};
    reject_unknown(j.at("explain"), known, "explain");
    const auto& e = j.at("explain");
    if (e.contains("rhos")) c.explain.rhos = e.at("rhos").get<std::vector<double>>();
    c.explain.pad = e.value("pad", c.explain.pad);
    c.explain.eps = e.value("eps", c.explain.eps);
  }
  if (j.contains("diagnostics")) {
    static const std::set<std::string> known{
        "k",   "sigma",        "ratio_clip",   "rho",         "vis_quantile",
        "var_quantile", "shore_dist_px", "bin_width_m", "min_count", "lobo_global_fill"};
    reject_unknown(j.at("diagnostics"), known, "diagnostics");
    const auto& d = j.at("diagnostics");
    c.diagnostics.k = d.value("k", c.diagnostics.k);
    c.diagnostics.sigma = d.value("sigma", c.diagnostics.sigma);
    c.diagnostics.ratio_clip = d.value("ratio_clip", c.diagnostics.ratio_clip);
    c.diagnostics.rho = d.value("rho", c.diagnostics.rho);
    c.diagnostics.vis_quantile = d.value("vis_quantile", c.diagnostics.vis_quantile);
    c.diagnostics.var_quantile = d.value("var_quantile", c.diagnostics.var_quantile);
    c.diagnostics.shore_dist_px = d.value("shore_dist_px", c.diagnostics.shore_dist_px);
    c.diagnostics.bin_width_m = d.value("bin_width_m", c.diagnostics.bin_width_m);
    c.diagnostics.min_count = d.value("min_count", c.diagnostics.min_count);
    c.diagnostics.lobo_global_fill = d.value("lobo_global_fill", c.diagnostics.lobo_global_fill);
  }
  c.train.spec.loss.validate();
  return c;
}

nlohmann::json PipelineConfig::to_json() const {
  json j{{"run_id", run_id},
         {"output_dir", output_dir},
         {"data",
          {{"scale", data.scale},
           {"dmax", data.d_max},
           {"glint_z", data.glint_z},
           {"glint_window", data.glint_window},
           {"apply_glint", data.apply_glint}}},
         {"scene", scene_to_json(scene)},
         {"net", net.to_json()},
         {"train",
          {{"epochs", train.spec.epochs},
           {"lr0", train.spec.lr0},
           {"batch", train.spec.batch},
           {"crop", train.spec.crop},
           {"seed", train.spec.seed},
           {"augment", train.spec.augment},
           {"paper_protocol", train.paper_protocol}}},
         {"loss",
          {{"kind", to_string(train.spec.loss.kind)},
           {"decay", to_string(train.spec.loss.decay)},
           {"d_min", train.spec.loss.d_min},
           {"d_max_dist", train.spec.loss.d_max_dist},
           {"eps", train.spec.loss.eps}}},
         {"explain", {{"rhos", explain.rhos}, {"pad", explain.pad}, {"eps", explain.eps}}},
         {"diagnostics",
          {{"k", diagnostics.k},
           {"sigma", diagnostics.sigma},
           {"ratio_clip", diagnostics.ratio_clip},
           {"rho", diagnostics.rho},
           {"vis_quantile", diagnostics.vis_quantile},
           {"var_quantile", diagnostics.var_quantile},
           {"shore_dist_px", diagnostics.shore_dist_px},
           {"bin_width_m", diagnostics.bin_width_m},
           {"min_count", diagnostics.min_count},
           {"lobo_global_fill", diagnostics.lobo_global_fill}}}};
  if (scene_b) j["scene_b"] = scene_to_json(*scene_b);
  return j;
}

void PipelineConfig::apply_env() {
  if (const char* out = std::getenv("BATHYSCOPE_OUT")) {
    if (*out) output_dir = out;
  }
}

void PipelineConfig::override_seed(int64_t seed) {
  scene.scene.seed = static_cast<uint64_t>(seed);
  if (scene_b) scene_b->scene.seed = static_cast<uint64_t>(seed) + 1;
  net.seed = seed;
  train.spec.seed = seed;
}

}  // namespace bathyscope
