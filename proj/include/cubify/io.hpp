#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cubify/camera.hpp"
#include "cubify/decode.hpp"
#include "cubify/eval.hpp"
#include "cubify/pipeline.hpp"
#include "cubify/raster.hpp"

namespace cubify::io {

namespace fs = std::filesystem;

// Nine significant digits, always with a decimal point or exponent ("1.0",
// "0.333333333", "1e-05").
std::string format_real(double v);

// Value as it reads back after format_real.
double round_real(double v);

// Annotation files are JSON lines: an optional {"scene_id": ...} line followed
// by one object per box with box_id, center[3], dims[3] and either
// rotation[9] (row-major) or yaw_pitch_roll[3]; class_id is optional.
SceneAnnotations load_annotations(const fs::path& path);
void save_annotations(const fs::path& path, const SceneAnnotations& scene);

// 16-bit single-channel PNG in millimeters; 0 marks invalid pixels.
DepthMap load_depth_png(const fs::path& path);
void save_depth_png(const fs::path& path, const DepthMap& depth);

// Debug dumps: 8-bit grayscale mask (0/255), and float32 depth behind a
// 16-byte header ("CUBD", u32 width, u32 height, u32 reserved), little-endian.
void write_mask_png(const fs::path& path, const Mask& mask);
void write_depth_dump(const fs::path& path, const DepthImage& depth);
DepthImage read_depth_dump(const fs::path& path);

struct FrameRecord {
  std::string frame_id;
  CameraFramed camera;
  std::optional<fs::path> image;
  fs::path scene_depth;
  std::optional<fs::path> sensor_depth;
};

struct CaptureManifest {
  std::string capture_id;
  fs::path annotations;
  std::vector<FrameRecord> frames;
};

// JSON document; relative paths resolve against the manifest's directory.
// Throws IoError when a referenced file is missing.
CaptureManifest load_manifest(const fs::path& path);
void save_manifest(const fs::path& path, const CaptureManifest& manifest);

// One JSON-lines file per frame: a header line with the frame id, image size
// and the effective parameters, then one line per instance.
void write_frame_gt(const fs::path& path, const std::string& capture_id,
                    const FrameGroundTruth& gt, const PipelineParams& params);
FrameGroundTruth read_frame_gt(const fs::path& path);
// Every *.jsonl file in `dir`, by file name.
std::vector<FrameGroundTruth> read_gt_dir(const fs::path& dir);

std::vector<Detection> load_detections(const fs::path& path);
void save_detections(const fs::path& path, const std::vector<Detection>& dets);

struct PredictionRecord {
  std::string frame_id;
  RawPrediction prediction;
  std::optional<int> class_id;
};
std::vector<PredictionRecord> load_predictions(const fs::path& path);

// "AP25 0.409"-style key/value lines preceded by '#' provenance lines.
std::string report_text(const EvalReport& report);
// CSV with one row per class cell plus class-averaged rows (class "all").
std::string report_table(const EvalReport& report);

void write_text(const fs::path& path, const std::string& text);

}  // namespace cubify::io
