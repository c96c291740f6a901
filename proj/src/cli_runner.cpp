#include "gpk/cli_runner.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gpk/cloud_io.hpp"
#include "gpk/config.hpp"
#include "gpk/dataset_builder.hpp"
#include "gpk/detect.hpp"
#include "gpk/metrics.hpp"

namespace fs = std::filesystem;

namespace gpk {

namespace {

TriangleMesh catalog_mesh(const std::string& name) {
  if (name == "box") return make_box(Vec3(0.04, 0.10, 0.05));
  if (name == "cylinder") return make_cylinder(0.02, 0.10);
  if (name == "sphere") return make_sphere(0.03);
  if (name == "box_tall") return make_box(Vec3(0.05, 0.06, 0.12));
  if (name == "cylinder_thick") return make_cylinder(0.03, 0.07);
  if (name == "sphere_large") return make_sphere(0.0325);
  throw ConfigError(
      "unknown shape: " + name +
      " (have box, cylinder, sphere, box_tall, cylinder_thick, sphere_large)");
}

std::vector<std::string> split_csv(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    size_t a = item.find_first_not_of(" \t");
    size_t b = item.find_last_not_of(" \t");
    if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
  }
  return out;
}

struct CommonFlags {
  std::string config_path;
  std::string out_dir = "run";
  std::uint64_t seed = 0;
  int threads = 0;
  CLI::Option* config_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* threads_opt = nullptr;

  void attach(CLI::App* sub) {
    config_opt = sub->add_option("--config", config_path,
                                 "configuration file (TOML-style)");
    seed_opt = sub->add_option("--seed", seed, "RNG seed for every stage");
    threads_opt =
        sub->add_option("--threads", threads, "worker threads (0 = all)");
    sub->add_option("--out", out_dir, "run directory for outputs");
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (config_opt->count() > 0) cfg.apply(load_config_file(config_path));
    if (seed_opt->count() > 0) cfg.seed = seed;
    if (threads_opt->count() > 0) cfg.threads = threads;
    cfg.validate();
    return cfg;
  }
};

// Collects output names as files are created and writes the manifest.
struct RunDir {
  fs::path dir;
  std::vector<std::string> outputs;

  explicit RunDir(const std::string& out_dir) : dir(out_dir) {
    fs::create_directories(dir);
  }

  std::string path(const std::string& name) {
    outputs.push_back(name);
    return (dir / name).string();
  }

  void write_manifest(const std::string& command, const RunConfig& cfg) {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    j["outputs"] = outputs;
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " +
                            (dir / "manifest.json").string());
    out << j.dump(2) << "\n";
  }
};

void print_config(const RunConfig& cfg, RunDir& run, std::ostream& out) {
  const std::string text = cfg.to_toml();
  out << "# resolved configuration\n" << text << "\n";
  std::ofstream file(run.path("config.toml"), std::ios::binary);
  file << text;
  if (!file) throw IoError("cannot write resolved config");
}

nlohmann::ordered_json grasp_to_json(const ScoredGrasp& g) {
  nlohmann::ordered_json j;
  const Mat3 rot = g.candidate.pose.rotation();
  j["rotation"] = {
      {rot(0, 0), rot(0, 1), rot(0, 2)},
      {rot(1, 0), rot(1, 1), rot(1, 2)},
      {rot(2, 0), rot(2, 1), rot(2, 2)},
  };
  const Vec3 t = g.candidate.pose.translation();
  j["translation"] = {t(0), t(1), t(2)};
  j["aperture"] = g.candidate.aperture;
  j["sample_index"] = g.candidate.sample_index;
  j["score"] = g.score;
  j["required_width"] = g.required_width;
  return j;
}

int cmd_render(const CommonFlags& common, const std::string& mesh_path,
               const std::string& shape, double angle, bool angle_given,
               std::ostream& out, std::ostream& err) {
  RunConfig cfg = common.resolve();
  RunDir run(common.out_dir);
  print_config(cfg, run, out);

  if (mesh_path.empty() == shape.empty())
    throw ConfigError("render needs exactly one of --mesh or --shape");
  TriangleMesh mesh =
      mesh_path.empty() ? catalog_mesh(shape) : load_mesh(mesh_path);

  StereoConfig stereo = cfg.stereo;
  if (angle_given) stereo.baseline_angle_deg = angle;
  if (stereo.baseline_angle_deg == 0.0)
    err << "warning: view separation angle is 0, both viewpoints coincide\n";

  const CloudWithViewpoints cloud = stereo_render(mesh, stereo);
  save_cloud(cloud, run.path("cloud.ply"));
  run.outputs.push_back(sidecar_path("cloud.ply").string());
  out << "rendered " << cloud.points.size() << " points from "
      << cloud.viewpoints.size() << " viewpoints\n";
  run.write_manifest("render", cfg);
  return 0;
}

int cmd_dataset(const CommonFlags& common, const std::string& objects_csv,
                std::ostream& out, std::ostream&) {
  RunConfig cfg = common.resolve();
  RunDir run(common.out_dir);
  print_config(cfg, run, out);

  const std::vector<std::string> names = split_csv(objects_csv);
  if (names.empty()) throw ConfigError("no objects requested");
  std::vector<MeshEntry> meshes;
  for (const std::string& name : names)
    meshes.push_back({name, catalog_mesh(name)});

  DatasetBuildConfig build;
  build.hand = cfg.hand;
  build.antipodal = cfg.antipodal;
  build.candidates = cfg.candidates;
  build.stereo = cfg.stereo;
  build.variant = cfg.variant;
  build.n_view_pairs = cfg.n_view_pairs;
  build.balance = cfg.balance;
  build.threads = cfg.threads;

  const DatasetBuildResult result = build_dataset(meshes, build, cfg.seed);
  save_dataset(result.dataset, run.path("dataset.json"),
               run.path("dataset.bin"));
  save_diagnostics(result, run.path("diagnostics.jsonl"));

  int positives = 0;
  for (const auto& r : result.dataset.records) positives += r.label;
  out << "dataset: " << result.dataset.count() << " exemplars ("
      << positives << " positive), " << result.skipped_meshes
      << " meshes skipped\n";
  run.write_manifest("dataset", cfg);
  return 0;
}

int cmd_train(const CommonFlags& common, const std::string& dataset_base,
              const std::string& warm_path, std::ostream& out,
              std::ostream&) {
  RunConfig cfg = common.resolve();
  RunDir run(common.out_dir);
  print_config(cfg, run, out);

  const Dataset dataset = load_dataset(dataset_base);
  const SplitSpec split = split_by_view(dataset, cfg.test_fraction, cfg.seed);
  SolverConfig solver = cfg.solver;
  solver.seed = cfg.seed;

  CnnModel warm;
  const CnnModel* warm_ptr = nullptr;
  if (!warm_path.empty()) {
    warm = load_model(warm_path);
    warm_ptr = &warm;
  }

  const TrainResult result = train(dataset, split, solver, warm_ptr);
  save_model(result.model, run.path("model.bin"));
  save_train_log(result.log, run.path("train_log.csv"));

  out << "trained " << result.log.size() << " iterations on "
      << split.train_indices.size() << " exemplars";
  for (auto it = result.log.rbegin(); it != result.log.rend(); ++it) {
    if (it->test_accuracy) {
      out << ", test accuracy " << *it->test_accuracy;
      break;
    }
  }
  out << "\n";
  run.write_manifest("train", cfg);
  return 0;
}

int cmd_eval(const CommonFlags& common, const std::string& dataset_base,
             const std::string& model_path, std::ostream& out,
             std::ostream&) {
  RunConfig cfg = common.resolve();
  RunDir run(common.out_dir);
  print_config(cfg, run, out);

  const Dataset dataset = load_dataset(dataset_base);
  const CnnModel model = load_model(model_path);
  const SplitSpec split = split_by_view(dataset, cfg.test_fraction, cfg.seed);
  EvalReport report = evaluate_model(model, dataset, split);
  report.min_precision = cfg.min_precision;
  report.rahp = recall_at_precision(report.curve, cfg.min_precision);
  save_eval_report(report, run.path("report.json"));
  save_pr_curve_csv(report.curve, run.path("curve.csv"));

  out << "eval: accuracy " << report.accuracy << ", recall at precision "
      << report.min_precision << " = " << report.rahp << " over "
      << split.test_indices.size() << " held-out exemplars\n";
  run.write_manifest("eval", cfg);
  return 0;
}

int cmd_detect(const CommonFlags& common, const std::string& cloud_path,
               const std::string& model_path, std::ostream& out,
               std::ostream&) {
  RunConfig cfg = common.resolve();
  RunDir run(common.out_dir);
  print_config(cfg, run, out);

  const CloudWithViewpoints cloud = load_cloud_with_sidecar(cloud_path);
  const CnnModel model = load_model(model_path);
  const std::vector<ScoredGrasp> grasps = detect(
      cloud, RegionOfInterest::all(cloud.points.size()), cfg.hand, model,
      cfg.variant, cfg.detect_threshold, cfg.candidates, cfg.seed,
      cfg.threads);
  save_scored_grasps(grasps, run.path("grasps.jsonl"));

  out << "detect: " << grasps.size() << " grasps at threshold "
      << cfg.detect_threshold;
  if (!grasps.empty()) out << ", best score " << grasps.front().score;
  out << "\n";
  run.write_manifest("detect", cfg);
  return 0;
}

int cmd_select(const CommonFlags& common, const std::string& grasps_path,
               std::ostream& out, std::ostream&) {
  RunConfig cfg = common.resolve();
  RunDir run(common.out_dir);
  print_config(cfg, run, out);

  const std::vector<ScoredGrasp> grasps = load_scored_grasps(grasps_path);
  if (grasps.empty()) throw Error("no grasps in " + grasps_path);
  const ScoredGrasp best = select_grasp(grasps, cfg.selection);
  {
    std::ofstream file(run.path("selected.json"), std::ios::binary);
    if (!file) throw IoError("cannot write selected grasp");
    file << grasp_to_json(best).dump(2) << "\n";
  }
  const Vec3 p = best.candidate.pose.translation();
  out << "selected grasp at [" << p.x() << ", " << p.y() << ", " << p.z()
      << "], score " << best.score << "\n";
  run.write_manifest("select", cfg);
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"grasp pose detection pipeline"};
  app.require_subcommand(1);

  CLI::App* render = app.add_subcommand(
      "render", "simulate a stereo depth scan of a mesh");
  CommonFlags render_common;
  render_common.attach(render);
  std::string mesh_path, shape;
  double angle = 0.0;
  render->add_option("--mesh", mesh_path, "mesh file (.obj or .ply)");
  render->add_option("--shape", shape, "bundled shape name");
  CLI::Option* angle_opt =
      render->add_option("--angle", angle, "view separation in degrees");

  CLI::App* dataset = app.add_subcommand(
      "dataset", "build a labeled training set from bundled shapes");
  CommonFlags dataset_common;
  dataset_common.attach(dataset);
  std::string objects = "box,cylinder,sphere";
  dataset->add_option("--objects", objects, "comma-separated shape names");

  CLI::App* train_cmd =
      app.add_subcommand("train", "train the grasp classifier");
  CommonFlags train_common;
  train_common.attach(train_cmd);
  std::string train_dataset, warm_path;
  train_cmd->add_option("--dataset", train_dataset,
                        "dataset base path (without .json/.bin)")
      ->required();
  train_cmd->add_option("--warm", warm_path, "model file to start from");

  CLI::App* eval_cmd =
      app.add_subcommand("eval", "score a model on the held-out split");
  CommonFlags eval_common;
  eval_common.attach(eval_cmd);
  std::string eval_dataset, eval_model;
  eval_cmd->add_option("--dataset", eval_dataset, "dataset base path")
      ->required();
  eval_cmd->add_option("--model", eval_model, "model file")->required();

  CLI::App* detect_cmd =
      app.add_subcommand("detect", "find grasps in a point cloud");
  CommonFlags detect_common;
  detect_common.attach(detect_cmd);
  std::string detect_cloud, detect_model;
  detect_cmd->add_option("--cloud", detect_cloud, "cloud file (.ply)")
      ->required();
  detect_cmd->add_option("--model", detect_model, "model file")->required();

  CLI::App* select_cmd =
      app.add_subcommand("select", "pick one grasp from a detect result");
  CommonFlags select_common;
  select_common.attach(select_cmd);
  std::string grasps_path;
  select_cmd->add_option("--grasps", grasps_path, "grasp list from detect")
      ->required();

  std::vector<const char*> argv;
  argv.push_back("graspkit");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  std::string command = "cli";
  try {
    if (app.got_subcommand(render)) {
      command = "render";
      return cmd_render(render_common, mesh_path, shape, angle,
                        angle_opt->count() > 0, out, err);
    }
    if (app.got_subcommand(dataset)) {
      command = "dataset";
      return cmd_dataset(dataset_common, objects, out, err);
    }
    if (app.got_subcommand(train_cmd)) {
      command = "train";
      return cmd_train(train_common, train_dataset, warm_path, out, err);
    }
    if (app.got_subcommand(eval_cmd)) {
      command = "eval";
      return cmd_eval(eval_common, eval_dataset, eval_model, out, err);
    }
    if (app.got_subcommand(detect_cmd)) {
      command = "detect";
      return cmd_detect(detect_common, detect_cloud, detect_model, out, err);
    }
    if (app.got_subcommand(select_cmd)) {
      command = "select";
      return cmd_select(select_common, grasps_path, out, err);
    }
    throw Error("no command given");
  } catch (const IoError& e) {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["error"] = e.what();
    err << j.dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["error"] = e.what();
    err << j.dump() << "\n";
    return 1;
  }
}

}  // namespace gpk
