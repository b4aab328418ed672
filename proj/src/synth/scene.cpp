#include "bathyscope/synth/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <stdexcept>

#include "bathyscope/util/rng.hpp"

namespace bathyscope {

namespace {

// Smooth random field in [0,1]: seeded white noise, box-blurred at a scale
// of ~1/8 tile width, then min-max normalized.
torch::Tensor smooth_field(int64_t h, int64_t w, uint64_t seed, int64_t scale_div = 8) {
  Rng rng(seed);
  auto noise = torch::empty({h, w}, torch::kFloat64);
  auto acc = noise.accessor<double, 2>();
  for (int64_t i = 0; i < h; ++i)
    for (int64_t j = 0; j < w; ++j) acc[i][j] = rng.normal();

  const int64_t radius = std::max<int64_t>(1, w / (2 * scale_div));
  auto t = noise.unsqueeze(0).unsqueeze(0);
  const int64_t k = 2 * radius + 1;
  auto kernel = torch::ones({1, 1, k, k}, torch::kFloat64) / static_cast<double>(k * k);
  namespace F = torch::nn::functional;
  for (int pass = 0; pass < 3; ++pass) {
    t = F::pad(t, F::PadFuncOptions({radius, radius, radius, radius}).mode(torch::kReflect));
    t = F::conv2d(t, kernel);
  }
  auto field = t.squeeze(0).squeeze(0);
  const double lo = field.min().item<double>();
  const double hi = field.max().item<double>();
  if (hi - lo <= 0) return torch::zeros({h, w}, torch::kFloat64);
  return (field - lo) / (hi - lo);
}

// Wavy land cut: land occupies columns j < cut(i).
std::vector<int64_t> shoreline_cut(int64_t h, int64_t w, uint64_t seed) {
  Rng rng(seed);
  const double base = 0.15 * static_cast<double>(w);
  const double amp = 0.3 * base;
  const double phase = rng.uniform(0.0, 2.0 * M_PI);
  std::vector<int64_t> cut(static_cast<size_t>(h));
  for (int64_t i = 0; i < h; ++i) {
    const double v = base + amp * std::sin(2.0 * M_PI * i / std::max<int64_t>(1, h) + phase);
    cut[static_cast<size_t>(i)] = std::clamp<int64_t>(std::llround(v), 1, w - 2);
  }
  return cut;
}

}  // namespace

void OpticsProfile::validate() const {
  const auto c = bands();
  if (c < 1) throw std::invalid_argument("OpticsProfile: needs at least one band");
  auto want = [c](const std::vector<double>& v, const char* name) {
    if (static_cast<int64_t>(v.size()) != c)
      throw std::invalid_argument(std::string("OpticsProfile: ") + name +
                                  " length differs from k_att");
  };
  want(albedo_mean, "albedo_mean");
  want(albedo_var, "albedo_var");
  want(r_inf, "r_inf");
  for (int64_t b = 0; b < c; ++b) {
    if (!(k_att[b] > 0)) throw std::invalid_argument("OpticsProfile: k_att must be > 0");
    if (r_inf[b] < 0 || r_inf[b] >= 1)
      throw std::invalid_argument("OpticsProfile: r_inf must lie in [0,1)");
    if (albedo_var[b] < 0) throw std::invalid_argument("OpticsProfile: albedo_var must be >= 0");
  }
  if (glint_frac < 0 || glint_frac > 1)
    throw std::invalid_argument("OpticsProfile: glint_frac must lie in [0,1]");
  if (noise_sigma < 0) throw std::invalid_argument("OpticsProfile: noise_sigma must be >= 0");
}

OpticsProfile OpticsProfile::defaults() {
  OpticsProfile p;
  p.k_att = {0.12, 0.08, 0.35};  // blue, green, red
  p.albedo_mean = {0.30, 0.32, 0.28};
  p.albedo_var = {0.004, 0.004, 0.004};
  p.r_inf = {0.06, 0.04, 0.02};
  p.glint_frac = 0.01;
  p.noise_sigma = 0.005;
  return p;
}

DepthMode depth_mode_from_string(const std::string& s) {
  if (s == "ramp") return DepthMode::kRamp;
  if (s == "smooth_field") return DepthMode::kSmoothField;
  if (s == "bimodal") return DepthMode::kBimodal;
  throw std::invalid_argument("unknown depth_mode '" + s + "'");
}

std::string to_string(DepthMode m) {
  switch (m) {
    case DepthMode::kRamp: return "ramp";
    case DepthMode::kSmoothField: return "smooth_field";
    case DepthMode::kBimodal: return "bimodal";
  }
  return "?";
}

void SceneSpec::validate() const {
  if (height < 8 || width < 8) throw std::invalid_argument("SceneSpec: size too small");
  if (depth_min < 0) throw std::invalid_argument("SceneSpec: depth_range min must be >= 0");
  if (depth_max < depth_min) throw std::invalid_argument("SceneSpec: depth_range inverted");
  if (depth_max == depth_min && mode != DepthMode::kRamp)
    throw std::invalid_argument("SceneSpec: degenerate depth_range only allowed in ramp mode");
}

DepthRaster gen_depth_field(const SceneSpec& spec) {
  spec.validate();
  const int64_t h = spec.height, w = spec.width;
  const double span = spec.depth_max - spec.depth_min;
  auto depth = torch::zeros({h, w}, torch::kFloat64);
  auto acc = depth.accessor<double, 2>();

  switch (spec.mode) {
    case DepthMode::kRamp: {
      for (int64_t i = 0; i < h; ++i)
        for (int64_t j = 0; j < w; ++j)
          acc[i][j] = spec.depth_min + span * static_cast<double>(j) / static_cast<double>(w - 1);
      break;
    }
    case DepthMode::kSmoothField: {
      auto f = smooth_field(h, w, Rng::derive(spec.seed, 1));
      auto facc = f.accessor<double, 2>();
      for (int64_t i = 0; i < h; ++i)
        for (int64_t j = 0; j < w; ++j) acc[i][j] = spec.depth_min + span * facc[i][j];
      break;
    }
    case DepthMode::kBimodal: {
      auto f = smooth_field(h, w, Rng::derive(spec.seed, 1));
      auto jitter = smooth_field(h, w, Rng::derive(spec.seed, 2));
      auto facc = f.accessor<double, 2>();
      auto jacc = jitter.accessor<double, 2>();
      const double lo_c = spec.depth_min + 0.2 * span;
      const double hi_c = spec.depth_min + 0.8 * span;
      for (int64_t i = 0; i < h; ++i) {
        for (int64_t j = 0; j < w; ++j) {
          const double center = facc[i][j] < 0.5 ? lo_c : hi_c;
          const double v = center + (jacc[i][j] - 0.5) * 0.1 * span;
          acc[i][j] = std::clamp(v, spec.depth_min, spec.depth_max);
        }
      }
      break;
    }
  }

  if (spec.shoreline) {
    auto cut = shoreline_cut(h, w, Rng::derive(spec.seed, 3));
    for (int64_t i = 0; i < h; ++i)
      for (int64_t j = 0; j < cut[static_cast<size_t>(i)]; ++j) acc[i][j] = 0.0;
  }

  DepthRaster out;
  out.values = depth.to(torch::kFloat32);
  out.source = DepthRaster::Source::kSynthetic;
  out.affine = {10.0, 0.0, 500000.0, 0.0, -10.0, 3800000.0};
  out.crs_id = "EPSG:32636";
  return out;
}

RasterTile render_bands(const DepthRaster& depth, const OpticsProfile& optics, uint64_t seed) {
  optics.validate();
  if ((depth.values < 0).any().item<bool>())
    throw std::invalid_argument("render_bands: depth must be >= 0");
  const int64_t h = depth.height(), w = depth.width();
  const int64_t c = optics.bands();

  auto z = depth.values.to(torch::kFloat64);
  auto dn = torch::empty({c, h, w}, torch::kFloat32);

  // Shared glint speckle mask across bands (specular highlights are
  // spectrally flat here).
  torch::Tensor glint;
  if (optics.glint_frac > 0) {
    Rng grng(Rng::derive(seed, 101));
    glint = torch::zeros({h, w}, torch::kFloat64);
    auto gacc = glint.accessor<double, 2>();
    for (int64_t i = 0; i < h; ++i)
      for (int64_t j = 0; j < w; ++j)
        if (grng.uniform() < optics.glint_frac) gacc[i][j] = 0.3;
  }

  for (int64_t b = 0; b < c; ++b) {
    auto field = smooth_field(h, w, Rng::derive(seed, 200 + static_cast<uint64_t>(b)));
    const double sd = std::sqrt(optics.albedo_var[static_cast<size_t>(b)]);
    auto albedo = optics.albedo_mean[static_cast<size_t>(b)] + sd * (2.0 * field - 1.0);
    albedo = torch::clamp(albedo, optics.r_inf[static_cast<size_t>(b)], 1.0);

    auto refl = (albedo - optics.r_inf[static_cast<size_t>(b)]) *
                    torch::exp(-2.0 * optics.k_att[static_cast<size_t>(b)] * z) +
                optics.r_inf[static_cast<size_t>(b)];
    if (glint.defined()) refl = refl + glint;
    if (optics.noise_sigma > 0) {
      Rng nrng(Rng::derive(seed, 300 + static_cast<uint64_t>(b)));
      auto noise = torch::empty({h, w}, torch::kFloat64);
      auto nacc = noise.accessor<double, 2>();
      for (int64_t i = 0; i < h; ++i)
        for (int64_t j = 0; j < w; ++j) nacc[i][j] = optics.noise_sigma * nrng.normal();
      refl = refl + noise;
    }
    dn[b] = torch::round(1e4 * torch::clamp(refl, 0.0, 1.0)).to(torch::kFloat32);
  }

  RasterTile tile;
  tile.bands = dn;
  tile.band_names = RasterTile::default_band_names(c);
  tile.affine = depth.affine;
  tile.crs_id = depth.crs_id;
  return tile;
}

SynthTile make_tile(const RegionSpec& region, int64_t index) {
  SceneSpec scene = region.scene;
  scene.seed = Rng::derive(region.scene.seed, static_cast<uint64_t>(index));
  auto depth = gen_depth_field(scene);
  auto bands = render_bands(depth, region.optics, Rng::derive(scene.seed, 7));

  // Store depths negative-down: the source convention exercises the
  // sign-robust target scaling.
  DepthRaster stored = depth;
  stored.values = -depth.values;

  SynthTile t;
  t.bands = std::move(bands);
  t.depth = std::move(stored);
  char id[32];
  std::snprintf(id, sizeof(id), "tile_%03lld", static_cast<long long>(index));
  t.tile_id = id;
  return t;
}

std::pair<RegionDataset, RegionDataset> make_region_pair(const RegionSpec& region_a,
                                                         const RegionSpec& region_b,
                                                         int64_t n_tiles,
                                                         const PreprocessOptions& opts) {
  const bool same_optics = region_a.optics.k_att == region_b.optics.k_att &&
                           region_a.optics.albedo_mean == region_b.optics.albedo_mean &&
                           region_a.optics.albedo_var == region_b.optics.albedo_var;
  if (same_optics && region_a.scene.mode == region_b.scene.mode) {
    std::cerr << "make_region_pair: regions share optics and depth mode; "
                 "no domain shift will be present\n";
  }
  RegionDataset a, bset;
  a.d_max = opts.d_max;
  bset.d_max = opts.d_max;
  for (int64_t i = 0; i < n_tiles; ++i) {
    auto ta = make_tile(region_a, i);
    a.tiles.push_back(make_supervision_pair(ta.bands, ta.depth, opts, "A_" + ta.tile_id));
    auto tb = make_tile(region_b, 10000 + i);
    bset.tiles.push_back(make_supervision_pair(tb.bands, tb.depth, opts, "B_" + tb.tile_id));
  }
  return {std::move(a), std::move(bset)};
}

}  // namespace bathyscope
