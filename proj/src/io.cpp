#include "cubify/io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include "cubify/error.hpp"
#include "json.hpp"

namespace cubify::io {

using nlohmann::json;

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0) v = 0;  // no "-0.0"
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                                 std::chars_format::general, 9);
  std::string s(buf.data(), res.ptr);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

double round_real(double v) {
  if (!std::isfinite(v)) return v;
  const std::string s = format_real(v);
  double out = 0;
  std::from_chars(s.data(), s.data() + s.size(), out);
  return out;
}

namespace {

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

// Non-empty lines of a JSON-lines file, parsed.
std::vector<json> read_json_lines(const fs::path& path) {
  auto in = open_in(path);
  std::vector<json> out;
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
    if (!out.back().is_object())
      throw ValidationError(path.string() + ":" + std::to_string(n) + ": expected an object");
  }
  return out;
}

json real_array(std::initializer_list<double> xs) {
  json a = json::array();
  for (double x : xs) a.push_back(round_real(x));
  return a;
}

template <typename Derived>
json real_array(const Eigen::DenseBase<Derived>& m) {
  json a = json::array();
  // Row-major traversal regardless of storage order.
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) a.push_back(round_real(m(r, c)));
  return a;
}

// Field reader that names the record and field in every error.
class Fields {
 public:
  Fields(const json& j, std::string context) : j_(j), context_(std::move(context)) {}

  [[noreturn]] void fail(const std::string& field, const std::string& why) const {
    throw ValidationError(context_ + ": field '" + field + "': " + why);
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  const json& at(const std::string& key) const {
    if (!has(key)) fail(key, "missing");
    return j_.at(key);
  }

  double real(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number()) fail(key, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(key, "not finite");
    return d;
  }

  double real_or(const std::string& key, double fallback) const {
    return has(key) ? real(key) : fallback;
  }

  int integer(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    return v.get<int>();
  }

  std::optional<int> opt_integer(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return integer(key);
  }

  std::string str(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> reals(const std::string& key, std::size_t n) const {
    const json& v = at(key);
    if (!v.is_array() || v.size() != n) fail(key, "expected an array of " + std::to_string(n) + " numbers");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) fail(key, "expected an array of numbers");
      out.push_back(x.get<double>());
      if (!std::isfinite(out.back())) fail(key, "not finite");
    }
    return out;
  }

  Vec3d vec3(const std::string& key) const {
    const auto v = reals(key, 3);
    return {v[0], v[1], v[2]};
  }

  Mat3d mat3(const std::string& key) const {
    const auto v = reals(key, 9);
    Mat3d m;
    m << v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8];
    return m;
  }

  Vec3d positive_dims(const std::string& key) const {
    const Vec3d d = vec3(key);
    if (!(d.array() > 0).all()) fail(key, "dims must be strictly positive");
    return d;
  }

  Mat3d rotation(const std::string& key) const {
    const Mat3d r = mat3(key);
    if (!is_rotation(r)) fail(key, "not orthonormal with determinant +1");
    return r;
  }

 private:
  const json& j_;
  std::string context_;
};

json box3_json(const Box3d& b) {
  return {{"center", real_array(b.center)},
          {"dims", real_array(b.dims)},
          {"rotation", real_array(b.rotation)}};
}

// Shortest round-trip representation; annotation files are inputs, so saving
// them must not lose precision.
template <typename Derived>
json exact_array(const Eigen::DenseBase<Derived>& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) a.push_back(double(m(r, c)));
  return a;
}

void check_frame_id(const std::string& id) {
  if (id.empty() || id == "." || id == ".." ||
      !std::all_of(id.begin(), id.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '_' || c == '-' || c == '.';
      }))
    throw ValidationError("frame_id '" + id + "' must be non-empty and use only [A-Za-z0-9._-]");
}

}  // namespace

// ---------------------------------------------------------------- annotations

SceneAnnotations load_annotations(const fs::path& path) {
  SceneAnnotations scene;
  scene.scene_id = path.stem().string();
  for (const json& j : read_json_lines(path)) {
    if (!j.contains("box_id")) {
      if (j.contains("scene_id") && j.at("scene_id").is_string()) {
        scene.scene_id = j.at("scene_id").get<std::string>();
        continue;
      }
      throw ValidationError(path.string() + ": record without box_id");
    }
    const Fields meta(j, path.string());
    AnnotatedBox ab;
    ab.box_id = meta.str("box_id");
    const Fields f(j, "box '" + ab.box_id + "'");
    ab.box.center = f.vec3("center");
    ab.box.dims = f.positive_dims("dims");
    if (f.has("rotation")) {
      ab.box.rotation = f.rotation("rotation");
    } else if (f.has("yaw_pitch_roll")) {
      const auto e = f.reals("yaw_pitch_roll", 3);
      ab.box.rotation = rotation_from_euler(e[0], e[1], e[2]);
    } else {
      f.fail("rotation", "missing (give rotation or yaw_pitch_roll)");
    }
    ab.box.frame = FrameTag::kWorld;
    ab.class_id = f.opt_integer("class_id");
    scene.boxes.push_back(std::move(ab));
  }
  validate(scene);
  return scene;
}

void save_annotations(const fs::path& path, const SceneAnnotations& scene) {
  auto out = open_out(path);
  out << json{{"scene_id", scene.scene_id}}.dump() << '\n';
  for (const auto& b : scene.boxes) {
    json j = {{"box_id", b.box_id},
              {"center", exact_array(b.box.center)},
              {"dims", exact_array(b.box.dims)},
              {"rotation", exact_array(b.box.rotation)}};
    if (b.class_id) j["class_id"] = *b.class_id;
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

// ------------------------------------------------------------------------ PNG

namespace {

struct PngError {
  std::jmp_buf jump;
  char message[256] = {0};
};

void png_error_handler(png_structp png, png_const_charp msg) {
  auto* err = static_cast<PngError*>(png_get_error_ptr(png));
  std::snprintf(err->message, sizeof(err->message), "%s", msg);
  std::longjmp(err->jump, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// libpng reports errors by longjmp. Each setjmp region below lives in its own
// function holding only trivially destructible locals; state is kept in these
// structs, owned by the caller.
struct PngReader {
  PngError err;
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReader() { png_destroy_read_struct(&png, &info, nullptr); }
};

struct PngWriter {
  PngError err;
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriter() { png_destroy_write_struct(&png, &info); }
};

bool png_read_header(PngReader* r, std::FILE* file, png_uint_32* width, png_uint_32* height,
                     int* bit_depth, int* color_type) {
  if (setjmp(r->err.jump)) return false;
  png_init_io(r->png, file);
  png_set_sig_bytes(r->png, 8);
  png_read_info(r->png, r->info);
  png_get_IHDR(r->png, r->info, width, height, bit_depth, color_type, nullptr, nullptr, nullptr);
  return true;
}

bool png_read_rows(PngReader* r, png_bytepp rows) {
  if (setjmp(r->err.jump)) return false;
  png_read_image(r->png, rows);
  png_read_end(r->png, nullptr);
  return true;
}

bool png_write_rows(PngWriter* w, std::FILE* file, png_uint_32 width, png_uint_32 height,
                    int bit_depth, png_bytepp rows) {
  if (setjmp(w->err.jump)) return false;
  png_init_io(w->png, file);
  png_set_IHDR(w->png, w->info, width, height, bit_depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(w->png, w->info);
  png_write_image(w->png, rows);
  png_write_end(w->png, nullptr);
  return true;
}

// Rows hold big-endian samples of `bit_depth` (8 or 16) bits.
void write_gray_png(const fs::path& path, int width, int height, int bit_depth,
                    std::vector<std::uint8_t>& rows) {
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError("cannot open '" + path.string() + "' for writing");
  PngWriter w;
  w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &w.err, png_error_handler,
                                  png_warning_handler);
  if (w.png) w.info = png_create_info_struct(w.png);
  if (!w.png || !w.info) throw IoError("libpng initialisation failed");
  const std::size_t stride = std::size_t(width) * (bit_depth / 8);
  std::vector<png_bytep> row_ptrs(height);
  for (int y = 0; y < height; ++y) row_ptrs[y] = rows.data() + stride * y;
  if (!png_write_rows(&w, file.get(), width, height, bit_depth, row_ptrs.data()))
    throw IoError("writing '" + path.string() + "': " + w.err.message);
}

}  // namespace

DepthMap load_depth_png(const fs::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError("cannot open '" + path.string() + "' for reading");
  std::array<unsigned char, 8> sig{};
  if (std::fread(sig.data(), 1, sig.size(), file.get()) != sig.size() ||
      png_sig_cmp(sig.data(), 0, sig.size()) != 0)
    throw ValidationError("'" + path.string() + "' is not a PNG file");

  PngReader r;
  r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &r.err, png_error_handler,
                                 png_warning_handler);
  if (r.png) r.info = png_create_info_struct(r.png);
  if (!r.png || !r.info) throw IoError("libpng initialisation failed");
  png_uint_32 width = 0, height = 0;
  int bit_depth = 0, color_type = 0;
  if (!png_read_header(&r, file.get(), &width, &height, &bit_depth, &color_type))
    throw IoError("reading '" + path.string() + "': " + r.err.message);
  if (bit_depth != 16 || color_type != PNG_COLOR_TYPE_GRAY)
    throw ValidationError("'" + path.string() + "': depth PNG must be 16-bit single-channel (got " +
                          std::to_string(bit_depth) + "-bit, color type " +
                          std::to_string(color_type) + ")");
  std::vector<std::uint8_t> rows(std::size_t(width) * height * 2);
  std::vector<png_bytep> row_ptrs(height);
  for (png_uint_32 y = 0; y < height; ++y) row_ptrs[y] = rows.data() + std::size_t(width) * 2 * y;
  if (!png_read_rows(&r, row_ptrs.data()))
    throw IoError("reading '" + path.string() + "': " + r.err.message);

  DepthMap depth;
  depth.values.resize(height, width);
  for (png_uint_32 y = 0; y < height; ++y) {
    for (png_uint_32 x = 0; x < width; ++x) {
      const std::uint8_t* p = row_ptrs[y] + 2 * x;
      const unsigned mm = (unsigned(p[0]) << 8) | p[1];
      depth.values(y, x) = mm / 1000.0;
    }
  }
  return depth;
}

void save_depth_png(const fs::path& path, const DepthMap& depth) {
  validate(depth);
  std::vector<std::uint8_t> rows(std::size_t(depth.width()) * depth.height() * 2);
  std::size_t i = 0;
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      const double mm = std::round(depth.values(y, x) * 1000.0);
      if (mm > 65535) throw ValidationError("depth exceeds the 16-bit millimeter range");
      const auto v = static_cast<std::uint16_t>(mm);
      rows[i++] = std::uint8_t(v >> 8);
      rows[i++] = std::uint8_t(v & 0xff);
    }
  }
  write_gray_png(path, depth.width(), depth.height(), 16, rows);
}

void write_mask_png(const fs::path& path, const Mask& mask) {
  std::vector<std::uint8_t> rows(std::size_t(mask.rows()) * mask.cols());
  std::size_t i = 0;
  for (Eigen::Index y = 0; y < mask.rows(); ++y)
    for (Eigen::Index x = 0; x < mask.cols(); ++x) rows[i++] = mask(y, x) ? 255 : 0;
  write_gray_png(path, int(mask.cols()), int(mask.rows()), 8, rows);
}

namespace {

void put_u32(std::string& s, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) s.push_back(char((v >> (8 * k)) & 0xff));
}

std::uint32_t get_u32(const std::string& s, std::size_t at) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= std::uint32_t(std::uint8_t(s[at + k])) << (8 * k);
  return v;
}

}  // namespace

void write_depth_dump(const fs::path& path, const DepthImage& depth) {
  std::string bytes = "CUBD";
  put_u32(bytes, std::uint32_t(depth.cols()));
  put_u32(bytes, std::uint32_t(depth.rows()));
  put_u32(bytes, 0);
  for (Eigen::Index y = 0; y < depth.rows(); ++y)
    for (Eigen::Index x = 0; x < depth.cols(); ++x)
      put_u32(bytes, std::bit_cast<std::uint32_t>(static_cast<float>(depth(y, x))));
  auto out = open_out(path);
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

DepthImage read_depth_dump(const fs::path& path) {
  auto in = open_in(path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 16 || bytes.compare(0, 4, "CUBD") != 0)
    throw ValidationError("'" + path.string() + "' is not a CUBD depth dump");
  const std::uint32_t w = get_u32(bytes, 4), h = get_u32(bytes, 8);
  if (bytes.size() != 16 + std::size_t(w) * h * 4)
    throw ValidationError("'" + path.string() + "': size does not match header");
  DepthImage d(h, w);
  std::size_t at = 16;
  for (std::uint32_t y = 0; y < h; ++y)
    for (std::uint32_t x = 0; x < w; ++x, at += 4)
      d(y, x) = std::bit_cast<float>(get_u32(bytes, at));
  return d;
}

// ------------------------------------------------------------------- manifest

CaptureManifest load_manifest(const fs::path& path) {
  auto in = open_in(path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    fs::path r = fs::path(p).is_absolute() ? fs::path(p) : base / p;
    if (!fs::exists(r)) throw IoError("manifest references missing file '" + r.string() + "'");
    return r;
  };
  const Fields top(j, path.string());
  CaptureManifest m;
  m.capture_id = top.str("capture_id");
  m.annotations = resolve(top.str("annotations"));
  if (!top.at("frames").is_array()) top.fail("frames", "expected an array");
  std::set<std::string> ids;
  for (const json& fj : top.at("frames")) {
    const Fields idf(fj, path.string());
    FrameRecord fr;
    fr.frame_id = idf.str("frame_id");
    check_frame_id(fr.frame_id);
    if (!ids.insert(fr.frame_id).second)
      throw ValidationError("manifest: duplicate frame_id '" + fr.frame_id + "'");
    const Fields f(fj, "frame '" + fr.frame_id + "'");
    const Fields k(f.at("intrinsics"), "frame '" + fr.frame_id + "' intrinsics");
    auto& cam = fr.camera;
    cam.intrinsics = {k.real("fx"), k.real("fy"), k.real("cx"), k.real("cy"), k.integer("width"),
                      k.integer("height")};
    if (f.has("distortion")) {
      const Fields d(f.at("distortion"), "frame '" + fr.frame_id + "' distortion");
      cam.distortion = {d.real_or("k1", 0), d.real_or("k2", 0), d.real_or("k3", 0),
                        d.real_or("p1", 0), d.real_or("p2", 0)};
    }
    const auto rt = f.reals("world_to_camera", 16);
    cam.world_to_camera.rotation << rt[0], rt[1], rt[2], rt[4], rt[5], rt[6], rt[8], rt[9], rt[10];
    cam.world_to_camera.translation << rt[3], rt[7], rt[11];
    if (rt[12] != 0 || rt[13] != 0 || rt[14] != 0 || rt[15] != 1)
      f.fail("world_to_camera", "last row must be 0 0 0 1");
    if (f.has("gravity_to_camera")) cam.gravity_to_camera = f.rotation("gravity_to_camera");
    cam.near = f.real_or("near", cam.near);
    cam.far = f.real_or("far", cam.far);
    try {
      validate(cam);
    } catch (const ValidationError& e) {
      throw ValidationError("frame '" + fr.frame_id + "': " + e.what());
    }
    if (f.has("image")) fr.image = resolve(f.str("image"));
    fr.scene_depth = resolve(f.str("scene_depth"));
    if (f.has("sensor_depth")) fr.sensor_depth = resolve(f.str("sensor_depth"));
    m.frames.push_back(std::move(fr));
  }
  return m;
}

void save_manifest(const fs::path& path, const CaptureManifest& m) {
  const fs::path base = path.parent_path();
  auto rel = [&](const fs::path& p) { return p.lexically_relative(base).generic_string(); };
  json frames = json::array();
  for (const auto& fr : m.frames) {
    const auto& c = fr.camera;
    json rt = json::array();
    for (int r = 0; r < 3; ++r) {
      for (int k = 0; k < 3; ++k) rt.push_back(c.world_to_camera.rotation(r, k));
      rt.push_back(c.world_to_camera.translation[r]);
    }
    for (double v : {0.0, 0.0, 0.0, 1.0}) rt.push_back(v);
    json fj = {{"frame_id", fr.frame_id},
               {"intrinsics",
                {{"fx", c.intrinsics.fx}, {"fy", c.intrinsics.fy}, {"cx", c.intrinsics.cx},
                 {"cy", c.intrinsics.cy}, {"width", c.intrinsics.width},
                 {"height", c.intrinsics.height}}},
               {"distortion",
                {{"k1", c.distortion.k1}, {"k2", c.distortion.k2}, {"k3", c.distortion.k3},
                 {"p1", c.distortion.p1}, {"p2", c.distortion.p2}}},
               {"world_to_camera", rt},
               {"near", c.near},
               {"far", c.far},
               {"scene_depth", rel(fr.scene_depth)}};
    if (c.gravity_to_camera) {
      json g = json::array();
      for (int r = 0; r < 3; ++r)
        for (int k = 0; k < 3; ++k) g.push_back((*c.gravity_to_camera)(r, k));
      fj["gravity_to_camera"] = g;
    }
    if (fr.image) fj["image"] = rel(*fr.image);
    if (fr.sensor_depth) fj["sensor_depth"] = rel(*fr.sensor_depth);
    frames.push_back(fj);
  }
  const json j = {{"capture_id", m.capture_id}, {"annotations", rel(m.annotations)}, {"frames", frames}};
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

// --------------------------------------------------------------- ground truth

void write_frame_gt(const fs::path& path, const std::string& capture_id,
                    const FrameGroundTruth& gt, const PipelineParams& p) {
  const json provenance = {
      {"tool", "cubify render-gt"},
      {"render_resolution", {p.render_width, p.render_height}},
      {"subdivisions", p.subdivisions},
      {"keep_ratio", round_real(p.keep_ratio)},
      {"occlusion_margin", round_real(p.occlusion_margin)},
      {"ray_stride", p.ray_stride},
      {"min_visible_pixels", p.min_visible_pixels},
  };
  const json header = {{"capture_id", capture_id},
                       {"frame_id", gt.frame_id},
                       {"image_size", {gt.image_width, gt.image_height}},
                       {"num_instances", gt.instances.size()},
                       {"provenance", provenance}};
  auto out = open_out(path);
  out << header.dump() << '\n';
  for (const auto& inst : gt.instances) {
    json j = {{"box_id", inst.box_id},
              {"center", real_array(inst.cut_box.center)},
              {"dims", real_array(inst.cut_box.dims)},
              {"yaw", round_real(inst.cut_box.yaw)},
              {"box2d", real_array({inst.box2d[0], inst.box2d[1], inst.box2d[2], inst.box2d[3]})},
              {"visible_pixel_fraction", round_real(inst.visible_pixel_fraction)},
              {"visible_pixels", inst.visible_pixels},
              {"cut_volume_ratio", round_real(inst.cut_volume_ratio)},
              {"cut_box_camera", box3_json(inst.cut_box_camera)}};
    if (inst.class_id) j["class_id"] = *inst.class_id;
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

FrameGroundTruth read_frame_gt(const fs::path& path) {
  const auto lines = read_json_lines(path);
  if (lines.empty()) throw ValidationError("'" + path.string() + "': empty ground-truth file");
  const Fields h(lines.front(), path.string() + " header");
  FrameGroundTruth gt;
  gt.frame_id = h.str("frame_id");
  const auto size = h.reals("image_size", 2);
  gt.image_width = int(size[0]);
  gt.image_height = int(size[1]);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const Fields idf(lines[i], path.string());
    InstanceGroundTruth inst;
    inst.box_id = idf.str("box_id");
    const Fields f(lines[i], "frame '" + gt.frame_id + "' box '" + inst.box_id + "'");
    inst.class_id = f.opt_integer("class_id");
    inst.cut_box.center = f.vec3("center");
    inst.cut_box.dims = f.positive_dims("dims");
    inst.cut_box.yaw = f.real("yaw");
    const auto b = f.reals("box2d", 4);
    inst.box2d = {b[0], b[1], b[2], b[3]};
    inst.visible_pixel_fraction = f.real_or("visible_pixel_fraction", 1.0);
    inst.cut_volume_ratio = f.real_or("cut_volume_ratio", 1.0);
    inst.visible_pixels = f.has("visible_pixels") ? f.integer("visible_pixels") : 0;
    if (f.has("cut_box_camera")) {
      const Fields c(f.at("cut_box_camera"), "box '" + inst.box_id + "' cut_box_camera");
      inst.cut_box_camera = {c.vec3("center"), c.positive_dims("dims"), c.mat3("rotation"),
                             FrameTag::kCamera};
    } else {
      inst.cut_box_camera = to_box3(inst.cut_box);
    }
    gt.instances.push_back(std::move(inst));
  }
  return gt;
}

std::vector<FrameGroundTruth> read_gt_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("'" + dir.string() + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<FrameGroundTruth> out;
  for (const auto& f : files) out.push_back(read_frame_gt(f));
  return out;
}

// ----------------------------------------------------------------- detections

std::vector<Detection> load_detections(const fs::path& path) {
  std::vector<Detection> dets;
  std::size_t n = 0;
  for (const json& j : read_json_lines(path)) {
    const Fields f(j, path.string() + " detection " + std::to_string(n++));
    Detection d;
    d.frame_id = f.str("frame_id");
    d.score = f.real("score");
    if (d.score < 0 || d.score > 1) f.fail("score", "must be in [0, 1]");
    d.box.center = f.vec3("center");
    d.box.dims = f.positive_dims("dims");
    d.box.yaw = f.real("yaw");
    if (f.has("box2d")) {
      const auto b = f.reals("box2d", 4);
      d.box2d = Box2d{b[0], b[1], b[2], b[3]};
    }
    d.class_id = f.opt_integer("class_id");
    dets.push_back(std::move(d));
  }
  return dets;
}

void save_detections(const fs::path& path, const std::vector<Detection>& dets) {
  auto out = open_out(path);
  for (const auto& d : dets) {
    json j = {{"frame_id", d.frame_id},
              {"score", round_real(d.score)},
              {"center", real_array(d.box.center)},
              {"dims", real_array(d.box.dims)},
              {"yaw", round_real(d.box.yaw)}};
    if (d.box2d) j["box2d"] = real_array({(*d.box2d)[0], (*d.box2d)[1], (*d.box2d)[2], (*d.box2d)[3]});
    if (d.class_id) j["class_id"] = *d.class_id;
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::vector<PredictionRecord> load_predictions(const fs::path& path) {
  std::vector<PredictionRecord> preds;
  std::size_t n = 0;
  for (const json& j : read_json_lines(path)) {
    const Fields f(j, path.string() + " prediction " + std::to_string(n++));
    PredictionRecord r;
    r.frame_id = f.str("frame_id");
    auto& p = r.prediction;
    p.u = f.real("u");
    p.v = f.real("v");
    p.z = f.real("z");
    p.dims = f.vec3("dims");
    p.yaw = f.real("yaw");
    p.score = f.real("score");
    if (p.score < 0 || p.score > 1) f.fail("score", "must be in [0, 1]");
    r.class_id = f.opt_integer("class_id");
    preds.push_back(std::move(r));
  }
  return preds;
}

// --------------------------------------------------------------------- report

namespace {

std::string threshold_label(double t) {
  const double pct = t * 100;
  if (std::abs(pct - std::round(pct)) < 1e-9) return std::to_string(int(std::round(pct)));
  return format_real(pct);
}

std::string bucket_label(const EvalConfig& c, std::optional<std::size_t> b) {
  if (!b) return "all";
  return format_real(c.buckets[*b].lo) + "-" + format_real(c.buckets[*b].hi);
}

std::string opt_real(const std::optional<double>& v) { return v ? format_real(*v) : "nan"; }

std::string provenance_lines(const EvalConfig& c) {
  std::ostringstream s;
  s << "# cubify eval\n# iou_thresholds ";
  for (std::size_t i = 0; i < c.iou_thresholds.size(); ++i)
    s << (i ? "," : "") << format_real(c.iou_thresholds[i]);
  s << "\n# max_detections_per_frame " << c.max_detections_per_frame << "\n# buckets ";
  for (std::size_t i = 0; i < c.buckets.size(); ++i)
    s << (i ? "," : "") << format_real(c.buckets[i].lo) << "-" << format_real(c.buckets[i].hi);
  s << "\n# class_agnostic " << (c.class_agnostic ? "true" : "false")
    << "\n# interpolation_points " << c.interpolation_points
    << "\n# rect_iou " << (c.rect_iou ? "true" : "false") << "\n";
  return s.str();
}

}  // namespace

std::string report_text(const EvalReport& r) {
  std::ostringstream s;
  s << provenance_lines(r.config);
  for (const auto& sum : r.summary) {
    const std::string t = threshold_label(sum.threshold);
    const std::string b = sum.bucket ? "@" + bucket_label(r.config, sum.bucket) : "";
    s << "AP" << t << b << ' ' << opt_real(sum.ap) << '\n';
    s << "AR" << t << b << ' ' << opt_real(sum.ar) << '\n';
  }
  return s.str();
}

std::string report_table(const EvalReport& r) {
  std::ostringstream s;
  s << "class,threshold,bucket,AP,AR,TP,FP,FN,num_gt\n";
  for (const auto& sum : r.summary) {
    s << "all," << format_real(sum.threshold) << ',' << bucket_label(r.config, sum.bucket) << ','
      << opt_real(sum.ap) << ',' << opt_real(sum.ar) << ",,,,\n";
  }
  for (const auto& c : r.cells) {
    s << (c.class_id ? std::to_string(*c.class_id) : std::string("none")) << ','
      << format_real(c.threshold) << ',' << bucket_label(r.config, c.bucket) << ',';
    if (c.num_gt > 0)
      s << format_real(c.ap) << ',' << format_real(c.ar);
    else
      s << "nan,nan";
    s << ',' << c.tp << ',' << c.fp << ',' << c.fn << ',' << c.num_gt << '\n';
  }
  return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace cubify::io
