#include "cubify/cli.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "cubify/decode.hpp"
#include "cubify/error.hpp"
#include "cubify/eval.hpp"
#include "cubify/io.hpp"
#include "cubify/metrics.hpp"
#include "cubify/pipeline.hpp"

namespace cubify {

namespace {

namespace fs = std::filesystem;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);) out.push_back(item);
  return out;
}

double parse_real(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(v))
    throw ValidationError(what + ": '" + s + "' is not a number");
  return v;
}

std::pair<int, int> parse_resolution(const std::string& s) {
  const auto parts = split(s, 'x');
  if (parts.size() != 2) throw ValidationError("--mask-res must look like 320x240");
  const double w = parse_real(parts[0], "--mask-res"), h = parse_real(parts[1], "--mask-res");
  if (w < 1 || h < 1 || w != std::floor(w) || h != std::floor(h))
    throw ValidationError("--mask-res must be positive integers");
  return {int(w), int(h)};
}

// "cx,cy,cz,l,w,h,yaw"
GravityBoxd parse_box(const std::string& s, const std::string& flag) {
  const auto parts = split(s, ',');
  if (parts.size() != 7) throw ValidationError(flag + " must be cx,cy,cz,l,w,h,yaw");
  std::vector<double> v;
  for (const auto& p : parts) v.push_back(parse_real(p, flag));
  GravityBoxd b{{v[0], v[1], v[2]}, {v[3], v[4], v[5]}, v[6]};
  validate(b);
  return b;
}

int thread_count(int flag_value) {
  if (const char* env = std::getenv("CUBIFY_THREADS"); env && *env) {
    const double v = parse_real(env, "CUBIFY_THREADS");
    if (v < 1 || v != std::floor(v)) throw ValidationError("CUBIFY_THREADS must be a positive integer");
    return int(v);
  }
  if (flag_value < 1) throw ValidationError("--threads must be >= 1");
  return flag_value;
}

struct RenderGtArgs {
  std::string manifest;
  std::string out_dir;
  std::string mask_res = "320x240";
  double keep_ratio = 0.25;
  double occlusion_margin = 0.05;
  int threads = 1;
  int subdivisions = kDefaultSubdivisions;
  int ray_stride = 1;
  int min_visible_pixels = 10;
  std::string debug_dir;
};

int run_render_gt(const RenderGtArgs& a, std::ostream& err) {
  PipelineParams params;
  std::tie(params.render_width, params.render_height) = parse_resolution(a.mask_res);
  params.keep_ratio = a.keep_ratio;
  params.occlusion_margin = a.occlusion_margin;
  params.subdivisions = a.subdivisions;
  params.ray_stride = a.ray_stride;
  params.min_visible_pixels = a.min_visible_pixels;
  validate(params);
  const int threads = thread_count(a.threads);

  const io::CaptureManifest manifest = io::load_manifest(a.manifest);
  const SceneAnnotations scene = io::load_annotations(manifest.annotations);
  const fs::path out_dir = a.out_dir;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());
  if (!a.debug_dir.empty()) {
    fs::create_directories(a.debug_dir, ec);
    if (ec) throw IoError("cannot create '" + a.debug_dir + "': " + ec.message());
  }

  std::mutex log_mutex;
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> failures(manifest.frames.size());
  auto worker = [&] {
    for (std::size_t i = next++; i < manifest.frames.size(); i = next++) {
      const auto& frame = manifest.frames[i];
      try {
        const auto t0 = std::chrono::steady_clock::now();
        const DepthMap depth = io::load_depth_png(frame.scene_depth);
        RenderDebugSink sink;
        if (!a.debug_dir.empty()) {
          sink = [&](const std::string& box_id, const InstanceRender& r, const Mask& visible) {
            const fs::path stem = fs::path(a.debug_dir) / (frame.frame_id + "_" + box_id);
            io::write_mask_png(stem.string() + "_mask.png", r.mask);
            io::write_mask_png(stem.string() + "_visible.png", visible);
            io::write_depth_dump(stem.string() + "_depth.bin", r.depth);
          };
        }
        const FrameGroundTruth gt =
            render_frame_gt(scene, frame.camera, depth, params, frame.frame_id, sink);
        io::write_frame_gt(out_dir / (frame.frame_id + ".jsonl"), manifest.capture_id, gt, params);
        const double ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        std::lock_guard lock(log_mutex);
        err << "{\"event\":\"frame\",\"frame_id\":\"" << frame.frame_id
            << "\",\"instances\":" << gt.instances.size() << ",\"ms\":" << io::format_real(ms)
            << "}\n";
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);
  return 0;
}

struct EvalArgs {
  std::string gt_dir;
  std::string dets;
  std::string iou = "0.25,0.5";
  int max_dets = 100;
  std::string buckets = "0-2,2-4,4-5";
  bool class_agnostic = false;
  int interpolation_points = 101;
  bool rect_iou = false;
  std::string out;
  std::string table;
};

int run_eval(const EvalArgs& a, std::ostream& out) {
  EvalConfig config;
  config.iou_thresholds.clear();
  for (const auto& t : split(a.iou, ',')) config.iou_thresholds.push_back(parse_real(t, "--iou"));
  config.max_detections_per_frame = a.max_dets;
  config.buckets.clear();
  if (a.buckets != "none") {
    for (const auto& b : split(a.buckets, ',')) {
      const auto lohi = split(b, '-');
      if (lohi.size() != 2) throw ValidationError("--buckets entries must look like 0-2");
      config.buckets.push_back({parse_real(lohi[0], "--buckets"), parse_real(lohi[1], "--buckets")});
    }
  }
  config.class_agnostic = a.class_agnostic;
  config.interpolation_points = a.interpolation_points;
  config.rect_iou = a.rect_iou;
  validate(config);

  const auto gt = io::read_gt_dir(a.gt_dir);
  const auto dets = io::load_detections(a.dets);
  const EvalReport report = evaluate(dets, gt, config);
  const std::string text = io::report_text(report);
  out << text;
  if (!a.out.empty()) io::write_text(a.out, text);
  if (!a.table.empty()) io::write_text(a.table, io::report_table(report));
  return 0;
}

int run_iou(const std::string& a_str, const std::string& b_str, std::uint64_t mc_samples,
            std::uint64_t seed, std::ostream& out) {
  const GravityBoxd a = parse_box(a_str, "--a"), b = parse_box(b_str, "--b");
  out << "iou " << io::format_real(iou_gravity(a, b)) << '\n';
  if (mc_samples > 0) {
    const auto mc = iou_monte_carlo_detail(to_box3(a), to_box3(b), mc_samples, seed);
    out << "iou_mc " << io::format_real(mc.iou) << '\n';
    out << "iou_mc_sigma " << io::format_real(mc.sigma()) << '\n';
  }
  return 0;
}

int run_decode(const std::string& preds_path, const std::string& manifest_path,
               const std::string& stats_mode, const std::string& out_path, std::ostream& out,
               std::ostream& err) {
  if (stats_mode != "none" && stats_mode != "from-sensor")
    throw ValidationError("--depth-stats must be 'none' or 'from-sensor'");
  const auto manifest = io::load_manifest(manifest_path);
  std::map<std::string, const io::FrameRecord*> frames;
  for (const auto& f : manifest.frames) frames[f.frame_id] = &f;

  std::map<std::string, DepthStats> stats_cache;
  std::vector<Detection> dets;
  std::size_t rejected = 0;
  for (const auto& rec : io::load_predictions(preds_path)) {
    const auto it = frames.find(rec.frame_id);
    if (it == frames.end())
      throw ValidationError("prediction references unknown frame '" + rec.frame_id + "'");
    std::optional<DepthStats> stats;
    if (stats_mode == "from-sensor") {
      auto cached = stats_cache.find(rec.frame_id);
      if (cached == stats_cache.end()) {
        if (!it->second->sensor_depth)
          throw ValidationError("frame '" + rec.frame_id + "' has no sensor_depth");
        cached = stats_cache.emplace(rec.frame_id, depth_stats(io::load_depth_png(*it->second->sensor_depth))).first;
      }
      stats = cached->second;
    }
    const auto box = decode(rec.prediction, it->second->camera, stats);
    if (!box) {
      ++rejected;
      continue;
    }
    dets.push_back({rec.frame_id, rec.prediction.score, *box, std::nullopt, rec.class_id});
  }
  if (out_path.empty()) {
    const fs::path tmp = fs::temp_directory_path() / ("cubify_decode_" + std::to_string(::getpid()));
    io::save_detections(tmp, dets);
    std::ifstream in(tmp);
    out << in.rdbuf();
    fs::remove(tmp);
  } else {
    io::save_detections(out_path, dets);
  }
  err << "{\"event\":\"decode\",\"decoded\":" << dets.size() << ",\"rejected\":" << rejected << "}\n";
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"cubify: per-frame 3D box ground truth and detection evaluation", "cubify"};
  app.require_subcommand(1);

  RenderGtArgs rg;
  auto* render = app.add_subcommand("render-gt", "Render per-frame ground truth from a capture manifest");
  render->add_option("--manifest", rg.manifest, "Capture manifest (JSON)")->required();
  render->add_option("--out", rg.out_dir, "Output directory, one <frame_id>.jsonl per frame")->required();
  render->add_option("--mask-res", rg.mask_res, "Render resolution WxH")->capture_default_str();
  render->add_option("--keep-ratio", rg.keep_ratio, "Minimum cut/original volume")->capture_default_str();
  render->add_option("--occlusion-margin", rg.occlusion_margin, "Meters past scene depth")->capture_default_str();
  render->add_option("--threads", rg.threads, "Worker threads (CUBIFY_THREADS overrides)")->capture_default_str();
  render->add_option("--subdivisions", rg.subdivisions, "Face tessellation per edge")->capture_default_str();
  render->add_option("--ray-stride", rg.ray_stride, "Frustum-cut pixel stride")->capture_default_str();
  render->add_option("--min-visible-pixels", rg.min_visible_pixels, "Minimum visible pixels")->capture_default_str();
  render->add_option("--debug-dump", rg.debug_dir, "Write per-box mask PNGs and depth dumps here");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Evaluate detections against rendered ground truth");
  eval->add_option("--gt", ev.gt_dir, "Ground-truth directory from render-gt")->required();
  eval->add_option("--dets", ev.dets, "Detections (JSON lines)")->required();
  eval->add_option("--iou", ev.iou, "Comma-separated IoU thresholds")->capture_default_str();
  eval->add_option("--max-dets", ev.max_dets, "Detections kept per frame")->capture_default_str();
  eval->add_option("--buckets", ev.buckets, "Distance buckets lo-hi,... or 'none'")->capture_default_str();
  eval->add_flag("--class-agnostic", ev.class_agnostic, "Ignore class ids");
  eval->add_option("--interp", ev.interpolation_points, "AP recall samples (0 = exact area)")->capture_default_str();
  eval->add_flag("--rect-iou", ev.rect_iou, "Match on 2D rectangles (box2d)");
  eval->add_option("--out", ev.out, "Also write the report text here");
  eval->add_option("--table", ev.table, "Write the CSV table here");

  std::string box_a, box_b;
  std::uint64_t mc_samples = 0, seed = 0;
  auto* iou = app.add_subcommand("iou", "IoU of two gravity-aligned boxes cx,cy,cz,l,w,h,yaw");
  iou->add_option("--a", box_a, "First box")->required();
  iou->add_option("--b", box_b, "Second box")->required();
  iou->add_option("--mc-samples", mc_samples, "Also estimate by Monte Carlo");
  iou->add_option("--seed", seed, "Monte Carlo seed")->capture_default_str();

  std::string preds, dec_manifest, stats_mode = "none", dec_out;
  auto* dec = app.add_subcommand("decode", "Decode raw predictions into metric detections");
  dec->add_option("--preds", preds, "Raw predictions (JSON lines)")->required();
  dec->add_option("--manifest", dec_manifest, "Capture manifest")->required();
  dec->add_option("--depth-stats", stats_mode, "none | from-sensor")->capture_default_str();
  dec->add_option("--out", dec_out, "Output detections file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*render) return run_render_gt(rg, err);
    if (*eval) return run_eval(ev, out);
    if (*iou) return run_iou(box_a, box_b, mc_samples, seed, out);
    if (*dec) return run_decode(preds, dec_manifest, stats_mode, dec_out, out, err);
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return 2;
  } catch (const fs::filesystem_error& e) {
    err << "I/O error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace cubify
