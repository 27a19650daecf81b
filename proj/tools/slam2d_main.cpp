#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "slam2d/slam2d.hpp"

namespace {

struct SimArgs {
  std::string preset = "square_loop";
  std::string world_path;
  std::string waypoints_path;
  std::string config_path;
  std::string scans_out;
  std::string ground_truth_out;
  int seed = -1;  // <0 keeps the config/preset seed
};

struct RunArgs {
  std::string scans_path;
  std::string config_path;
  std::string traj_out;
  std::string map_out;
  std::string dump_graph;
  double map_resolution = 0.05;
  unsigned map_threshold = 2;
  int window = -1;  // <0 keeps the config default
};

struct EvalArgs {
  std::string ref_path;
  std::string est_path;
  bool align = false;
  double hz = 10.0;
  double max_dt = 0.02;
};

struct MapArgs {
  std::string scans_path;
  std::string traj_path;
  std::string out_path;
  double resolution = 0.05;
  unsigned threshold = 2;
  double max_dt = 0.02;
};

int run_sim(const SimArgs& args) {
  slam2d::World2D world;
  slam2d::Trajectory waypoints;
  slam2d::SimConfig cfg;
  if (!args.world_path.empty() || !args.waypoints_path.empty()) {
    if (args.world_path.empty() || args.waypoints_path.empty()) {
      throw slam2d::Error("--world and --waypoints must be given together");
    }
    world = slam2d::load_world(args.world_path);
    waypoints = slam2d::load_waypoints(args.waypoints_path);
  } else {
    const slam2d::ScenarioPreset preset = slam2d::make_preset(args.preset);
    world = preset.world;
    waypoints = preset.waypoints;
    cfg = preset.config;
  }
  if (!args.config_path.empty()) {
    cfg = slam2d::load_sim_config(args.config_path);
  }
  if (args.seed >= 0) {
    cfg.seed = static_cast<std::uint32_t>(args.seed);
  }
  const slam2d::Dataset dataset = slam2d::generate_dataset(world, waypoints, cfg);
  slam2d::write_scans(args.scans_out, dataset.scans);
  slam2d::save_trajectory(args.ground_truth_out, dataset.ground_truth);
  std::cout << "wrote " << dataset.scans.size() << " scans to " << args.scans_out << " and "
            << dataset.ground_truth.size() << " poses to " << args.ground_truth_out << '\n';
  return 0;
}

int run_slam(const RunArgs& args) {
  slam2d::PipelineConfig cfg;
  if (!args.config_path.empty()) {
    cfg = slam2d::load_pipeline_config(args.config_path);
  }
  if (args.window > 0) {
    cfg.window = args.window;
  }
  const std::vector<slam2d::LaserScan> scans = slam2d::load_scans(args.scans_path);
  slam2d::SlamPipeline pipeline(cfg);
  for (const slam2d::LaserScan& scan : scans) {
    try {
      pipeline.process_scan(scan);
    } catch (const slam2d::DegenerateScan& e) {
      std::cerr << "warning: skipping scan: " << e.what() << '\n';
    } catch (const slam2d::MatchFailure& e) {
      std::cerr << "warning: skipping scan (consecutive match failed): " << e.what() << '\n';
    }
  }
  const slam2d::Trajectory traj = pipeline.trajectory();
  slam2d::save_trajectory(args.traj_out, traj);

  const slam2d::PipelineStats& stats = pipeline.stats();
  std::cout << "processed " << stats.scans_accepted << " scans ("
            << stats.scans_skipped << " skipped), wrote " << args.traj_out << '\n';
  if (stats.scans_accepted > 0) {
    std::printf("mean per-scan time: %.3f ms, mean optimizer call: %.3f ms\n",
                1e3 * stats.total_process_seconds / stats.scans_accepted,
                1e3 * stats.total_optimize_seconds / stats.scans_accepted);
  }

  if (!args.dump_graph.empty()) {
    std::ofstream out(args.dump_graph);
    if (!out) throw slam2d::Error("cannot open " + args.dump_graph + " for writing");
    pipeline.graph().dump(out);
  }
  if (!args.map_out.empty()) {
    const slam2d::GridMap map = slam2d::build_map(traj, scans, args.map_resolution);
    std::ofstream out(args.map_out, std::ios::binary);
    if (!out) throw slam2d::Error("cannot open " + args.map_out + " for writing");
    out << slam2d::to_image(map, args.map_threshold);
  }
  return 0;
}

int run_eval(const EvalArgs& args) {
  const slam2d::Trajectory ref = slam2d::load_trajectory(args.ref_path);
  const slam2d::Trajectory est = slam2d::load_trajectory(args.est_path);
  slam2d::ApeOptions opts;
  opts.align = args.align;
  opts.hz = args.hz;
  opts.max_dt = args.max_dt;
  const slam2d::ApeResult res = slam2d::ape(ref, est, opts);
  std::cout << slam2d::eval_report_json(res) << '\n';
  return 0;
}

int run_map(const MapArgs& args) {
  const std::vector<slam2d::LaserScan> scans = slam2d::load_scans(args.scans_path);
  const slam2d::Trajectory traj = slam2d::load_trajectory(args.traj_path);
  const slam2d::GridMap map = slam2d::build_map(traj, scans, args.resolution, args.max_dt);
  std::ofstream out(args.out_path, std::ios::binary);
  if (!out) throw slam2d::Error("cannot open " + args.out_path + " for writing");
  out << slam2d::to_image(map, args.threshold);
  std::cout << "wrote " << map.width << "x" << map.height << " map to " << args.out_path << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"2D lidar pose-graph SLAM: simulate, run, evaluate, map"};
  app.require_subcommand(1);

  SimArgs sim_args;
  CLI::App* sim = app.add_subcommand("sim", "generate a synthetic dataset with ground truth");
  sim->add_option("--preset", sim_args.preset, "scenario preset")
      ->check(CLI::IsMember(slam2d::preset_names()));
  sim->add_option("--world", sim_args.world_path, "segment world file (x1 y1 x2 y2 per line)");
  sim->add_option("--waypoints", sim_args.waypoints_path,
                  "waypoint file (t x y theta per line)");
  sim->add_option("--config", sim_args.config_path, "sim config file (key = value)");
  sim->add_option("--scans", sim_args.scans_out, "output scan log (JSON lines)")->required();
  sim->add_option("--ground-truth", sim_args.ground_truth_out, "output ground-truth trajectory")
      ->required();
  sim->add_option("--seed", sim_args.seed, "RNG seed override");

  RunArgs run_args;
  CLI::App* run = app.add_subcommand("run", "run SLAM over a scan log");
  run->add_option("--scans", run_args.scans_path, "input scan log")->required();
  run->add_option("--config", run_args.config_path, "pipeline config file (key = value)");
  run->add_option("--out", run_args.traj_out, "output trajectory file")->required();
  run->add_option("--window", run_args.window, "sliding window size override");
  run->add_option("--map", run_args.map_out, "also render a P5 graymap to this path");
  run->add_option("--map-resolution", run_args.map_resolution, "map resolution, metres/cell");
  run->add_option("--map-threshold", run_args.map_threshold, "occupied hit threshold");
  run->add_option("--dump-graph", run_args.dump_graph, "dump the factor graph edge list");

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "APE of an estimate against a reference");
  eval->add_option("--ref", eval_args.ref_path, "reference trajectory")->required();
  eval->add_option("--est", eval_args.est_path, "estimated trajectory")->required();
  eval->add_flag("--align", eval_args.align, "align the estimate before measuring");
  eval->add_option("--hz", eval_args.hz, "downsample rate before association");
  eval->add_option("--max-dt", eval_args.max_dt, "association threshold, seconds");

  MapArgs map_args;
  CLI::App* map = app.add_subcommand("map", "rasterize scans along a trajectory");
  map->add_option("--scans", map_args.scans_path, "input scan log")->required();
  map->add_option("--trajectory", map_args.traj_path, "trajectory file")->required();
  map->add_option("--out", map_args.out_path, "output P5 graymap")->required();
  map->add_option("--resolution", map_args.resolution, "metres per cell");
  map->add_option("--threshold", map_args.threshold, "occupied hit threshold");
  map->add_option("--max-dt", map_args.max_dt, "scan-to-pose association threshold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (sim->parsed()) return run_sim(sim_args);
    if (run->parsed()) return run_slam(run_args);
    if (eval->parsed()) return run_eval(eval_args);
    if (map->parsed()) return run_map(map_args);
  } catch (const slam2d::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
