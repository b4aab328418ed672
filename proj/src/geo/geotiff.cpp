#include "bathyscope/geo/geotiff.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <stdexcept>
#include <vector>

namespace bathyscope {

namespace {

// TIFF tag ids
constexpr uint16_t kImageWidth = 256;
constexpr uint16_t kImageLength = 257;
constexpr uint16_t kBitsPerSample = 258;
constexpr uint16_t kCompression = 259;
constexpr uint16_t kPhotometric = 262;
constexpr uint16_t kStripOffsets = 273;
constexpr uint16_t kSamplesPerPixel = 277;
constexpr uint16_t kRowsPerStrip = 278;
constexpr uint16_t kStripByteCounts = 279;
constexpr uint16_t kPlanarConfig = 284;
constexpr uint16_t kSampleFormat = 339;
constexpr uint16_t kModelPixelScale = 33550;
constexpr uint16_t kModelTiepoint = 33922;
constexpr uint16_t kModelTransformation = 34264;
constexpr uint16_t kGeoKeyDirectory = 34735;
constexpr uint16_t kGeoAsciiParams = 34737;
constexpr uint16_t kGdalNodata = 42113;

// TIFF field types
constexpr uint16_t kTypeAscii = 2;
constexpr uint16_t kTypeShort = 3;
constexpr uint16_t kTypeLong = 4;
constexpr uint16_t kTypeDouble = 12;

constexpr uint16_t kGeoKeyCitation = 1026;

size_t type_size(uint16_t t) {
  switch (t) {
    case kTypeAscii: return 1;
    case kTypeShort: return 2;
    case kTypeLong: return 4;
    case kTypeDouble: return 8;
    default: return 0;
  }
}

struct ByteWriter {
  std::vector<uint8_t> buf;
  void u16(uint16_t v) {
    buf.push_back(v & 0xff);
    buf.push_back((v >> 8) & 0xff);
  }
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back((v >> (8 * i)) & 0xff);
  }
  void f64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) buf.push_back((bits >> (8 * i)) & 0xff);
  }
  void bytes(const void* p, size_t n) {
    const auto* b = static_cast<const uint8_t*>(p);
    buf.insert(buf.end(), b, b + n);
  }
  size_t pos() const { return buf.size(); }
  void patch_u32(size_t at, uint32_t v) {
    for (int i = 0; i < 4; ++i) buf[at + i] = (v >> (8 * i)) & 0xff;
  }
};

struct Entry {
  uint16_t tag;
  uint16_t type;
  uint32_t count;
  std::vector<uint8_t> payload;  // raw little-endian payload bytes
};

std::vector<uint8_t> shorts_payload(const std::vector<uint16_t>& v) {
  ByteWriter w;
  for (auto s : v) w.u16(s);
  return w.buf;
}
std::vector<uint8_t> longs_payload(const std::vector<uint32_t>& v) {
  ByteWriter w;
  for (auto s : v) w.u32(s);
  return w.buf;
}
std::vector<uint8_t> doubles_payload(const std::vector<double>& v) {
  ByteWriter w;
  for (auto s : v) w.f64(s);
  return w.buf;
}

}  // namespace

void write_geotiff(const std::string& path, const torch::Tensor& bands_in, const Affine& affine,
                   const std::string& crs_id, std::optional<double> nodata) {
  auto bands = bands_in.dim() == 2 ? bands_in.unsqueeze(0) : bands_in;
  if (bands.dim() != 3) throw std::invalid_argument("write_geotiff: expected [C,H,W] or [H,W]");
  const bool is_u8 = bands.scalar_type() == torch::kUInt8;
  bands = (is_u8 ? bands : bands.to(torch::kFloat32)).contiguous();

  const auto c = static_cast<uint32_t>(bands.size(0));
  const auto h = static_cast<uint32_t>(bands.size(1));
  const auto w = static_cast<uint32_t>(bands.size(2));
  const uint32_t bytes_per_sample = is_u8 ? 1 : 4;
  const uint32_t strip_bytes = h * w * bytes_per_sample;

  ByteWriter out;
  out.u16(0x4949);  // "II": little endian
  out.u16(42);
  const size_t ifd_offset_pos = out.pos();
  out.u32(0);  // patched later

  // One strip per band (band-sequential planes).
  std::vector<uint32_t> strip_offsets;
  for (uint32_t b = 0; b < c; ++b) {
    strip_offsets.push_back(static_cast<uint32_t>(out.pos()));
    out.bytes(static_cast<const uint8_t*>(bands.data_ptr()) + static_cast<size_t>(b) * strip_bytes,
              strip_bytes);
  }

  std::vector<Entry> entries;
  auto add = [&entries](uint16_t tag, uint16_t type, uint32_t count, std::vector<uint8_t> payload) {
    entries.push_back({tag, type, count, std::move(payload)});
  };

  add(kImageWidth, kTypeLong, 1, longs_payload({w}));
  add(kImageLength, kTypeLong, 1, longs_payload({h}));
  add(kBitsPerSample, kTypeShort, c,
      shorts_payload(std::vector<uint16_t>(c, is_u8 ? 8 : 32)));
  add(kCompression, kTypeShort, 1, shorts_payload({1}));
  add(kPhotometric, kTypeShort, 1, shorts_payload({1}));
  add(kStripOffsets, kTypeLong, c, longs_payload(strip_offsets));
  add(kSamplesPerPixel, kTypeShort, 1, shorts_payload({static_cast<uint16_t>(c)}));
  add(kRowsPerStrip, kTypeLong, 1, longs_payload({h}));
  add(kStripByteCounts, kTypeLong, c, longs_payload(std::vector<uint32_t>(c, strip_bytes)));
  add(kPlanarConfig, kTypeShort, 1, shorts_payload({static_cast<uint16_t>(c > 1 ? 2 : 1)}));
  add(kSampleFormat, kTypeShort, c,
      shorts_payload(std::vector<uint16_t>(c, is_u8 ? 1 : 3)));

  // Row-major 4x4 map transform: x = a*col + b*row + c ; y = d*col + e*row + f
  add(kModelTransformation, kTypeDouble, 16,
      doubles_payload({affine.a, affine.b, 0, affine.c,  //
                       affine.d, affine.e, 0, affine.f,  //
                       0, 0, 0, 0,                       //
                       0, 0, 0, 1}));

  std::string citation = crs_id;
  if (!citation.empty()) {
    citation += "|";
    citation.push_back('\0');
    add(kGeoKeyDirectory, kTypeShort, 8,
        shorts_payload({1, 1, 0, 1,  //
                        kGeoKeyCitation, kGeoAsciiParams,
                        static_cast<uint16_t>(citation.size()), 0}));
    std::vector<uint8_t> ascii(citation.begin(), citation.end());
    add(kGeoAsciiParams, kTypeAscii, static_cast<uint32_t>(ascii.size()), std::move(ascii));
  }
  if (nodata) {
    char ndbuf[40];
    std::snprintf(ndbuf, sizeof(ndbuf), "%.17g", *nodata);
    std::string nd(ndbuf);
    nd.push_back('\0');
    std::vector<uint8_t> ascii(nd.begin(), nd.end());
    add(kGdalNodata, kTypeAscii, static_cast<uint32_t>(ascii.size()), std::move(ascii));
  }

  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.tag < b.tag; });

  // Spill payloads larger than 4 bytes, then emit the IFD.
  std::vector<uint32_t> value_offsets(entries.size(), 0);
  for (size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].payload.size() > 4) {
      if (out.pos() % 2) out.buf.push_back(0);
      value_offsets[i] = static_cast<uint32_t>(out.pos());
      out.bytes(entries[i].payload.data(), entries[i].payload.size());
    }
  }
  if (out.pos() % 2) out.buf.push_back(0);
  out.patch_u32(ifd_offset_pos, static_cast<uint32_t>(out.pos()));
  out.u16(static_cast<uint16_t>(entries.size()));
  for (size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    out.u16(e.tag);
    out.u16(e.type);
    out.u32(e.count);
    if (e.payload.size() > 4) {
      out.u32(value_offsets[i]);
    } else {
      uint8_t v[4] = {0, 0, 0, 0};
      std::memcpy(v, e.payload.data(), e.payload.size());
      out.bytes(v, 4);
    }
  }
  out.u32(0);  // no next IFD

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_geotiff: cannot open for writing: " + path);
  f.write(reinterpret_cast<const char*>(out.buf.data()),
          static_cast<std::streamsize>(out.buf.size()));
  if (!f) throw std::runtime_error("write_geotiff: write failed: " + path);
}

namespace {

struct RawEntry {
  uint16_t type = 0;
  uint32_t count = 0;
  std::vector<uint8_t> payload;
};

class ByteReader {
 public:
  explicit ByteReader(std::vector<uint8_t> buf) : buf_(std::move(buf)) {}
  uint16_t u16(size_t at) const {
    need(at, 2);
    return static_cast<uint16_t>(buf_[at] | (buf_[at + 1] << 8));
  }
  uint32_t u32(size_t at) const {
    need(at, 4);
    uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | buf_[at + i];
    return v;
  }
  double f64(size_t at) const {
    need(at, 8);
    uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) bits = (bits << 8) | buf_[at + i];
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  const uint8_t* at(size_t pos, size_t n) const {
    need(pos, n);
    return buf_.data() + pos;
  }
  size_t size() const { return buf_.size(); }

 private:
  void need(size_t at, size_t n) const {
    if (at + n > buf_.size()) throw std::runtime_error("geotiff: truncated file");
  }
  std::vector<uint8_t> buf_;
};

std::vector<double> entry_doubles(const RawEntry& e) {
  std::vector<double> out(e.count);
  for (uint32_t i = 0; i < e.count; ++i) {
    uint64_t bits = 0;
    for (int b = 7; b >= 0; --b) bits = (bits << 8) | e.payload[i * 8 + b];
    std::memcpy(&out[i], &bits, 8);
  }
  return out;
}

std::vector<uint32_t> entry_u32s(const RawEntry& e) {
  std::vector<uint32_t> out(e.count);
  for (uint32_t i = 0; i < e.count; ++i) {
    if (e.type == kTypeShort) {
      out[i] = static_cast<uint32_t>(e.payload[i * 2] | (e.payload[i * 2 + 1] << 8));
    } else {
      uint32_t v = 0;
      for (int b = 3; b >= 0; --b) v = (v << 8) | e.payload[i * 4 + b];
      out[i] = v;
    }
  }
  return out;
}

}  // namespace

RasterTile read_geotiff(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_geotiff: unreadable file: " + path);
  std::vector<uint8_t> buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  ByteReader in(std::move(buf));

  if (in.size() < 8 || in.u16(0) != 0x4949 || in.u16(2) != 42)
    throw std::runtime_error("read_geotiff: not a little-endian TIFF: " + path);

  std::map<uint16_t, RawEntry> tags;
  size_t ifd = in.u32(4);
  const uint16_t n = in.u16(ifd);
  for (uint16_t i = 0; i < n; ++i) {
    const size_t at = ifd + 2 + static_cast<size_t>(i) * 12;
    RawEntry e;
    const uint16_t tag = in.u16(at);
    e.type = in.u16(at + 2);
    e.count = in.u32(at + 4);
    const size_t nbytes = type_size(e.type) * e.count;
    const size_t src = nbytes > 4 ? in.u32(at + 8) : at + 8;
    if (nbytes > 0) e.payload.assign(in.at(src, nbytes), in.at(src, nbytes) + nbytes);
    tags[tag] = std::move(e);
  }

  auto require = [&tags, &path](uint16_t tag) -> const RawEntry& {
    auto it = tags.find(tag);
    if (it == tags.end())
      throw std::runtime_error("read_geotiff: missing tag " + std::to_string(tag) + ": " + path);
    return it->second;
  };

  const uint32_t w = entry_u32s(require(kImageWidth))[0];
  const uint32_t h = entry_u32s(require(kImageLength))[0];
  const uint32_t c = tags.count(kSamplesPerPixel) ? entry_u32s(tags[kSamplesPerPixel])[0] : 1;
  if (tags.count(kCompression) && entry_u32s(tags[kCompression])[0] != 1)
    throw std::runtime_error("read_geotiff: only uncompressed TIFF is supported: " + path);

  const uint32_t bits = entry_u32s(require(kBitsPerSample))[0];
  const uint32_t fmt = tags.count(kSampleFormat) ? entry_u32s(tags[kSampleFormat])[0] : 1;
  const bool is_f32 = bits == 32 && fmt == 3;
  const bool is_u8 = bits == 8 && fmt == 1;
  if (!is_f32 && !is_u8)
    throw std::runtime_error("read_geotiff: unsupported sample layout (need f32 or u8): " + path);
  const uint32_t planar = tags.count(kPlanarConfig) ? entry_u32s(tags[kPlanarConfig])[0] : 1;

  auto offsets = entry_u32s(require(kStripOffsets));
  auto counts = entry_u32s(require(kStripByteCounts));
  if (offsets.size() != counts.size())
    throw std::runtime_error("read_geotiff: strip table mismatch: " + path);

  // Concatenate strips into one plane-ordered buffer.
  std::vector<uint8_t> data;
  data.reserve(static_cast<size_t>(w) * h * c * (is_f32 ? 4 : 1));
  for (size_t i = 0; i < offsets.size(); ++i) {
    const uint8_t* p = in.at(offsets[i], counts[i]);
    data.insert(data.end(), p, p + counts[i]);
  }
  const size_t expected = static_cast<size_t>(w) * h * c * (is_f32 ? 4 : 1);
  if (data.size() != expected)
    throw std::runtime_error("read_geotiff: pixel payload size mismatch: " + path);

  torch::Tensor bands;
  if (planar == 2 || c == 1) {
    bands = torch::from_blob(data.data(), {static_cast<int64_t>(c), static_cast<int64_t>(h),
                                           static_cast<int64_t>(w)},
                             is_f32 ? torch::kFloat32 : torch::kUInt8)
                .clone();
  } else {
    // chunky: [H,W,C] -> [C,H,W]
    bands = torch::from_blob(data.data(), {static_cast<int64_t>(h), static_cast<int64_t>(w),
                                           static_cast<int64_t>(c)},
                             is_f32 ? torch::kFloat32 : torch::kUInt8)
                .permute({2, 0, 1})
                .contiguous();
  }

  RasterTile tile;
  tile.bands = is_u8 ? bands : bands.to(torch::kFloat32);
  tile.band_names = RasterTile::default_band_names(c);

  if (tags.count(kModelTransformation)) {
    auto m = entry_doubles(tags[kModelTransformation]);
    tile.affine = {m[0], m[1], m[3], m[4], m[5], m[7]};
  } else if (tags.count(kModelPixelScale) && tags.count(kModelTiepoint)) {
    auto s = entry_doubles(tags[kModelPixelScale]);
    auto t = entry_doubles(tags[kModelTiepoint]);
    // tiepoint: raster (i,j,k) -> model (x,y,z)
    tile.affine = {s[0], 0.0, t[3] - t[0] * s[0], 0.0, -s[1], t[4] + t[1] * s[1]};
  } else {
    std::cerr << "read_geotiff: no georeferencing in " << path << ", using identity transform\n";
    tile.affine = Affine{};
  }

  if (tags.count(kGeoAsciiParams)) {
    const auto& a = tags[kGeoAsciiParams].payload;
    std::string s(a.begin(), a.end());
    while (!s.empty() && (s.back() == '\0' || s.back() == '|')) s.pop_back();
    tile.crs_id = s;
  } else {
    std::cerr << "read_geotiff: no CRS in " << path << ", proceeding without one\n";
  }

  if (tags.count(kGdalNodata)) {
    const auto& a = tags[kGdalNodata].payload;
    std::string s(a.begin(), a.end());
    if (!s.empty()) tile.nodata = std::stod(s);
  }
  return tile;
}

std::pair<RasterTile, std::optional<DepthRaster>> read_tile(const std::string& path,
                                                            const std::string& depth_path) {
  auto tile = read_geotiff(path);
  std::string dp = depth_path;
  if (dp.empty()) {
    dp = path;
    const auto at = dp.rfind("bands");
    if (at != std::string::npos) dp.replace(at, 5, "depth");
  }
  std::optional<DepthRaster> depth;
  if (dp != path && std::filesystem::exists(dp)) {
    auto d = read_geotiff(dp);
    if (d.channels() != 1) throw std::runtime_error("read_tile: depth raster must be single band");
    depth = DepthRaster{d.bands.squeeze(0).to(torch::kFloat32), DepthRaster::Source::kSfm, d.affine,
                        d.crs_id};
  }
  return {std::move(tile), std::move(depth)};
}

void write_prediction(const std::string& path, const torch::Tensor& grid_hw, const Affine& affine,
                      const std::string& crs_id) {
  if (grid_hw.dim() != 2) throw std::invalid_argument("write_prediction: expected [H,W]");
  write_geotiff(path, grid_hw.to(torch::kFloat32), affine, crs_id);
}

}  // namespace bathyscope
