// Command-line front end: closed-loop episodes, controller comparison
// batches, data-collection runs, and label regeneration from logs.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "travnav/harness.hpp"

namespace {

travnav::FullConfig load_or_die(const std::string& path) {
  return travnav::load_full_config(path);
}

std::vector<travnav::ControllerKind> parse_controllers(const std::string& csv) {
  std::vector<travnav::ControllerKind> kinds;
  std::string cur;
  for (char c : csv + ",") {
    if (c == ',') {
      if (!cur.empty()) kinds.push_back(travnav::controller_kind_from_string(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (kinds.empty()) throw CLI::ValidationError("--controllers", "no controllers given");
  return kinds;
}

void copy_config(const std::string& src, const std::string& dst_dir) {
  std::filesystem::create_directories(dst_dir);
  std::filesystem::copy_file(src, dst_dir + "/config.cfg",
                             std::filesystem::copy_options::overwrite_existing);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Traversability-aware navigation simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir, log_dir, controllers_csv = "wayfast,blind,geometric";
  uint64_t seed = 0;
  int runs = 10;
  double duration = 120.0;

  auto* episode = app.add_subcommand("episode", "Run one closed-loop navigation episode");
  episode->add_option("--config", config_path, "Config file")->required();
  episode->add_option("--seed", seed, "Episode seed");
  episode->add_option("--out", out_dir, "Output directory")->required();

  auto* batch = app.add_subcommand("batch", "Run seeded episode batches per controller");
  batch->add_option("--config", config_path, "Config file")->required();
  batch->add_option("--runs", runs, "Episodes per controller");
  batch->add_option("--controllers", controllers_csv, "Comma-separated controller list");
  batch->add_option("--out", out_dir, "Output directory")->required();

  auto* collect = app.add_subcommand("collect", "Record a scripted data-collection run");
  collect->add_option("--config", config_path, "Config file")->required();
  collect->add_option("--duration", duration, "Run length in simulated seconds");
  collect->add_option("--out", out_dir, "Output directory")->required();

  auto* labelgen = app.add_subcommand("labelgen", "Regenerate labels from a collect log");
  labelgen->add_option("--log", log_dir, "Directory written by collect")->required();
  labelgen->add_option("--out", out_dir, "Output dataset directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (episode->parsed()) {
      travnav::FullConfig cfg = load_or_die(config_path);
      if (episode->count("--seed") == 0) seed = cfg.episode.seed;
      const auto res = travnav::run_episode(cfg, seed, out_dir);
      std::printf("outcome=%s path_length=%.3f elapsed=%.2f final_distance=%.3f\n",
                  travnav::to_string(res.outcome).c_str(), res.path_length, res.elapsed,
                  res.final_distance);
    } else if (batch->parsed()) {
      travnav::FullConfig cfg = load_or_die(config_path);
      const auto kinds = parse_controllers(controllers_csv);
      const auto table = travnav::run_batch(cfg, runs, kinds, cfg.episode.seed, out_dir);
      for (const auto& row : table) {
        std::printf("%-10s %d/%d success_rate=%.2f\n",
                    travnav::to_string(row.controller).c_str(), row.successes, row.total,
                    row.success_rate);
      }
    } else if (collect->parsed()) {
      travnav::FullConfig cfg = load_or_die(config_path);
      copy_config(config_path, out_dir);
      const auto rec = travnav::collect_dataset(cfg, duration, cfg.episode.seed, out_dir);
      std::printf("frames=%zu labels=%zu\n", rec.frame_times.size(), rec.log.entries.size());
    } else if (labelgen->parsed()) {
      travnav::labelgen_from_dir(log_dir, out_dir);
      std::printf("dataset written to %s\n", out_dir.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
