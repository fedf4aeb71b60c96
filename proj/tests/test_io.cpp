#include <gtest/gtest.h>

#include <fstream>

#include "cubify/error.hpp"
#include "cubify/io.hpp"
#include "support.hpp"

using namespace cubify;
using test::uniform;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("cubify_io_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }
  const fs::path& path() const { return path_; }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(FormatReal, NineSignificantDigits) {
  EXPECT_EQ(io::format_real(1.0), "1.0");
  EXPECT_EQ(io::format_real(1.0 / 3), "0.333333333");
  EXPECT_EQ(io::format_real(-0.0), "0.0");
  EXPECT_EQ(io::format_real(0.409), "0.409");
  EXPECT_EQ(io::format_real(1e-5), "1e-05");
  EXPECT_EQ(io::format_real(123456789012.0), "1.23456789e+11");
  EXPECT_EQ(io::round_real(1.0 / 3), 0.333333333);
}

TEST(Annotations, EmptyFile) {
  TempDir d;
  write_file(d / "a.jsonl", "");
  EXPECT_TRUE(io::load_annotations(d / "a.jsonl").boxes.empty());
}

TEST(Annotations, NegativeDimCitesField) {
  TempDir d;
  write_file(d / "a.jsonl",
             R"({"box_id":"chair-1","center":[0,0,0],"dims":[1,-1,1],"rotation":[1,0,0,0,1,0,0,0,1]})"
             "\n");
  try {
    io::load_annotations(d / "a.jsonl");
    FAIL();
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("chair-1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("dims"), std::string::npos) << msg;
  }
}

TEST(Annotations, MalformedRecords) {
  TempDir d;
  write_file(d / "a.jsonl", R"({"box_id":"x","center":[0,0],"dims":[1,1,1],"yaw_pitch_roll":[0,0,0]})" "\n");
  EXPECT_THROW(io::load_annotations(d / "a.jsonl"), ValidationError);
  write_file(d / "b.jsonl", "{not json\n");
  EXPECT_THROW(io::load_annotations(d / "b.jsonl"), ValidationError);
  write_file(d / "c.jsonl",
             R"({"box_id":"x","center":[0,0,0],"dims":[1,1,1],"rotation":[2,0,0,0,1,0,0,0,1]})" "\n");
  EXPECT_THROW(io::load_annotations(d / "c.jsonl"), ValidationError);
  EXPECT_THROW(io::load_annotations(d / "missing.jsonl"), IoError);
}

TEST(Annotations, EulerInput) {
  TempDir d;
  write_file(d / "a.jsonl", R"({"scene_id":"s1"})" "\n"
                            R"({"box_id":"x","center":[1,2,3],"dims":[1,2,3],"yaw_pitch_roll":[0.5,0.1,-0.2],"class_id":4})" "\n");
  const auto s = io::load_annotations(d / "a.jsonl");
  EXPECT_EQ(s.scene_id, "s1");
  ASSERT_EQ(s.boxes.size(), 1u);
  EXPECT_TRUE(s.boxes[0].box.rotation.isApprox(rotation_from_euler(0.5, 0.1, -0.2), 1e-15));
  EXPECT_EQ(s.boxes[0].class_id, 4);
}

TEST(Annotations, RoundTripIdentity) {
  std::mt19937_64 rng(80);
  TempDir d;
  for (int t = 0; t < 20; ++t) {
    SceneAnnotations s;
    s.scene_id = "scene_" + std::to_string(t);
    for (int i = 0; i < 15; ++i) {
      Box3d b = test::random_box(rng, 10);
      s.boxes.push_back({"box-" + std::to_string(i), b, i % 2 ? std::optional<int>(i) : std::nullopt});
    }
    io::save_annotations(d / "r.jsonl", s);
    const auto back = io::load_annotations(d / "r.jsonl");
    ASSERT_EQ(back.scene_id, s.scene_id);
    ASSERT_EQ(back.boxes.size(), s.boxes.size());
    for (std::size_t i = 0; i < s.boxes.size(); ++i) {
      ASSERT_EQ(back.boxes[i].box_id, s.boxes[i].box_id);
      ASSERT_EQ(back.boxes[i].box.center, s.boxes[i].box.center);
      ASSERT_EQ(back.boxes[i].box.dims, s.boxes[i].box.dims);
      ASSERT_EQ(back.boxes[i].box.rotation, s.boxes[i].box.rotation);
      ASSERT_EQ(back.boxes[i].class_id, s.boxes[i].class_id);
    }
  }
}

TEST(DepthPng, UnitsAndRoundTrip) {
  TempDir d;
  DepthMap m;
  m.values.resize(30, 40);
  for (int y = 0; y < 30; ++y)
    for (int x = 0; x < 40; ++x) m.values(y, x) = (y * 40 + x) * 0.037;  // whole millimeters
  m.values(0, 0) = 0;
  m.values(0, 1) = 2.0;
  io::save_depth_png(d / "d.png", m);
  const DepthMap back = io::load_depth_png(d / "d.png");
  ASSERT_EQ(back.width(), 40);
  ASSERT_EQ(back.height(), 30);
  EXPECT_EQ(back.values(0, 1), 2.0);
  EXPECT_EQ(back.values(0, 0), 0.0);
  for (int i = 0; i < m.values.size(); ++i) ASSERT_NEAR(back.values(i), m.values(i), 1e-12);
  // bit-exact on the second pass
  io::save_depth_png(d / "e.png", back);
  EXPECT_EQ(read_file(d / "d.png"), read_file(d / "e.png"));
  const DepthMap again = io::load_depth_png(d / "e.png");
  EXPECT_TRUE((again.values == back.values).all());
}

TEST(DepthPng, RejectsWrongFormat) {
  TempDir d;
  Mask m = Mask::Constant(4, 4, true);
  io::write_mask_png(d / "m.png", m);  // 8-bit
  EXPECT_THROW(io::load_depth_png(d / "m.png"), ValidationError);
  write_file(d / "junk.png", "not a png");
  EXPECT_THROW(io::load_depth_png(d / "junk.png"), ValidationError);
  EXPECT_THROW(io::load_depth_png(d / "missing.png"), IoError);
  DepthMap big;
  big.values.setConstant(2, 2, 70.0);  // beyond 65.535 m
  EXPECT_THROW(io::save_depth_png(d / "big.png", big), ValidationError);
}

TEST(DepthDump, RoundTripAndHeader) {
  TempDir d;
  DepthImage img(3, 5);
  for (int i = 0; i < img.size(); ++i) img(i) = i * 0.25;
  img(1, 1) = std::numeric_limits<double>::infinity();
  io::write_depth_dump(d / "x.bin", img);
  const std::string bytes = read_file(d / "x.bin");
  ASSERT_EQ(bytes.size(), 16u + 4 * 15);
  EXPECT_EQ(bytes.substr(0, 4), "CUBD");
  EXPECT_EQ(std::uint8_t(bytes[4]), 5);
  EXPECT_EQ(std::uint8_t(bytes[8]), 3);
  const DepthImage back = io::read_depth_dump(d / "x.bin");
  EXPECT_TRUE((back == img).all());
  write_file(d / "bad.bin", "XXXX0000000000000000");
  EXPECT_THROW(io::read_depth_dump(d / "bad.bin"), ValidationError);
}

TEST(Manifest, RoundTripAndMissingFiles) {
  TempDir d;
  write_file(d / "ann.jsonl", "");
  DepthMap m;
  m.values.setConstant(4, 4, 1.0);
  io::save_depth_png(d / "f0.png", m);
  io::CaptureManifest man;
  man.capture_id = "cap";
  man.annotations = d / "ann.jsonl";
  io::FrameRecord fr;
  fr.frame_id = "f0";
  fr.camera = test::distorted();
  fr.camera.world_to_camera = {rotation_from_euler(0.1, 0.2, 0.3), Vec3d(1, 2, 3)};
  fr.camera.far = 7;
  fr.scene_depth = d / "f0.png";
  fr.sensor_depth = d / "f0.png";
  man.frames.push_back(fr);
  io::save_manifest(d / "m.json", man);
  const auto back = io::load_manifest(d / "m.json");
  ASSERT_EQ(back.frames.size(), 1u);
  const auto& c = back.frames[0].camera;
  EXPECT_EQ(c.intrinsics.fx, fr.camera.intrinsics.fx);
  EXPECT_EQ(c.distortion.k3, fr.camera.distortion.k3);
  EXPECT_EQ(c.world_to_camera.rotation, fr.camera.world_to_camera.rotation);
  EXPECT_EQ(c.world_to_camera.translation, fr.camera.world_to_camera.translation);
  EXPECT_EQ(c.far, 7.0);
  EXPECT_EQ(*c.gravity_to_camera, *fr.camera.gravity_to_camera);
  EXPECT_EQ(fs::canonical(back.frames[0].scene_depth), fs::canonical(d / "f0.png"));

  fs::remove(d / "f0.png");
  EXPECT_THROW(io::load_manifest(d / "m.json"), IoError);
}

TEST(Manifest, RejectsBadFrameId) {
  TempDir d;
  write_file(d / "ann.jsonl", "");
  write_file(d / "m.json", R"({"capture_id":"c","annotations":"ann.jsonl","frames":[
    {"frame_id":"../evil","intrinsics":{"fx":1,"fy":1,"cx":1,"cy":1,"width":2,"height":2},
     "world_to_camera":[1,0,0,0,0,1,0,0,0,0,1,0,0,0,0,1],"scene_depth":"ann.jsonl"}]})");
  EXPECT_THROW(io::load_manifest(d / "m.json"), ValidationError);
}

TEST(FrameGt, WriteReadRoundTrip) {
  TempDir d;
  FrameGroundTruth gt;
  gt.frame_id = "f7";
  gt.image_width = 640;
  gt.image_height = 480;
  InstanceGroundTruth inst;
  inst.box_id = "b";
  inst.class_id = 3;
  inst.cut_box = GravityBoxd{{0.1, 0.2, 0.3}, {1, 2, 3}, 0.25};
  inst.cut_box_camera = to_box3(inst.cut_box);
  inst.box2d = {1, 2, 30, 40};
  inst.visible_pixel_fraction = 0.5;
  inst.cut_volume_ratio = 0.75;
  inst.visible_pixels = 100;
  gt.instances.push_back(inst);
  io::write_frame_gt(d / "f7.jsonl", "cap", gt, PipelineParams{});
  const std::string text = read_file(d / "f7.jsonl");
  EXPECT_NE(text.find("\"keep_ratio\":0.25"), std::string::npos) << text;
  const auto back = io::read_gt_dir(d.path());
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].frame_id, "f7");
  ASSERT_EQ(back[0].instances.size(), 1u);
  EXPECT_EQ(back[0].instances[0].cut_box.center, inst.cut_box.center);
  EXPECT_EQ(back[0].instances[0].box2d, inst.box2d);
  EXPECT_EQ(back[0].instances[0].class_id, 3);
}

TEST(Detections, RoundTripAndValidation) {
  TempDir d;
  std::vector<Detection> dets{{"f0", 0.5, GravityBoxd{{1, 2, 3}, {1, 1, 1}, 0.5}, Box2d{0, 0, 1, 1}, 2},
                              {"f1", 1.0, GravityBoxd{{0, 0, 1}, {2, 1, 1}, -0.5}, std::nullopt, std::nullopt}};
  io::save_detections(d / "d.jsonl", dets);
  const auto back = io::load_detections(d / "d.jsonl");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].box.center, dets[0].box.center);
  EXPECT_EQ(back[0].class_id, 2);
  EXPECT_FALSE(back[1].box2d);
  write_file(d / "bad.jsonl", R"({"frame_id":"f","score":1.5,"center":[0,0,0],"dims":[1,1,1],"yaw":0})" "\n");
  EXPECT_THROW(io::load_detections(d / "bad.jsonl"), ValidationError);
}

TEST(Report, TextFormat) {
  EvalReport r;
  r.config = EvalConfig{};
  r.summary = {{0.25, std::nullopt, 0.409, 0.623, 1}, {0.5, std::size_t(0), std::nullopt, std::nullopt, 0}};
  const std::string text = io::report_text(r);
  EXPECT_NE(text.find("\nAP25 0.409\n"), std::string::npos) << text;
  EXPECT_NE(text.find("\nAR25 0.623\n"), std::string::npos) << text;
  EXPECT_NE(text.find("\nAP50@0.0-2.0 nan\n"), std::string::npos) << text;
  EXPECT_EQ(text[0], '#');
}
