#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "scdn/errors.hpp"
#include "scdn/sim.hpp"

using namespace scdn;

namespace {

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::ConfigError, "cannot open config " + path);
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, path + ": " + e.what());
  }
}

void write_text(const std::string& dir, const std::string& name, const std::string& text) {
  std::filesystem::create_directories(dir);
  std::ofstream f(std::filesystem::path(dir) / name, std::ios::binary);
  if (!f) throw Error(ErrorCode::ConfigError, "cannot write " + name);
  f << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Resource-aware vertical federated learning simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", param, values, configs;
  uint64_t seed = 0;
  bool seed_set = false;
  int seeds = 1;

  CLI::App* run_cmd = app.add_subcommand("run", "Run one simulation");
  run_cmd->add_option("--config", config_path, "JSON config")->required();
  run_cmd->add_option("--seed", seed, "Seed overriding the config")->each([&](const std::string&) { seed_set = true; });
  run_cmd->add_option("--out", out_dir, "Output directory");

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Sweep one config parameter");
  sweep_cmd->add_option("--config", config_path, "JSON config")->required();
  sweep_cmd->add_option("--param", param, "Dotted parameter path")->required();
  sweep_cmd->add_option("--values", values, "Comma-separated values")->required();
  sweep_cmd->add_option("--out", out_dir, "Output directory");

  CLI::App* cmp_cmd = app.add_subcommand("compare", "Compare configs side by side");
  cmp_cmd->add_option("--configs", configs, "Comma-separated JSON configs")->required();
  cmp_cmd->add_option("--seeds", seeds, "Seeds per config");
  cmp_cmd->add_option("--out", out_dir, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      nlohmann::json j = read_json(config_path);
      if (seed_set) j["seed"] = seed;
      const RunResult r = run(config_from_json(j));
      write_run(r, out_dir);
      const RoundMetrics& last = r.rounds.back();
      std::cout << "rounds " << r.rounds.size() << " final loss " << last.loss << " perf " << last.perf << "\n";
    } else if (*sweep_cmd) {
      std::vector<double> vals;
      for (const std::string& v : split(values)) {
        try {
          vals.push_back(std::stod(v));
        } catch (const std::exception&) {
          throw Error(ErrorCode::ConfigError, "bad sweep value '" + v + "'");
        }
      }
      const auto rows = sweep(read_json(config_path), param, vals);
      write_text(out_dir, "sweep.csv", sweep_csv(param, rows));
      std::cout << sweep_csv(param, rows);
    } else if (*cmp_cmd) {
      std::vector<SimConfig> list;
      for (const std::string& p : split(configs)) list.push_back(load_config(p));
      const auto rows = compare(list, seeds);
      write_text(out_dir, "compare.csv", compare_csv(rows));
      std::cout << compare_csv(rows);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
