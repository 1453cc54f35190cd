#include "cli/cli.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cli/commands.hpp"
#include "cli/params.hpp"

#ifndef SPARSENORM_VERSION
#define SPARSENORM_VERSION "unknown"
#endif

namespace sparsenorm::cli {

std::string version() { return SPARSENORM_VERSION; }

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

void write_manifest(const std::string& path, const std::string& subcommand, const Params& params,
                    std::uint64_t seed, const std::string& started, const std::vector<std::string>& outputs,
                    int exit_code) {
  nlohmann::ordered_json j;
  j["subcommand"] = subcommand;
  j["version"] = version();
  j["seed"] = seed;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  for (const auto& [k, v] : params.resolved()) config[k] = v;
  j["config"] = config;
  j["started"] = started;
  j["finished"] = utc_now();
  j["outputs"] = outputs;
  j["exit_code"] = exit_code;
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path);
}

// Rebuilds the argument list recorded in a manifest, with `out` replaced.
std::vector<std::string> args_from_manifest(const std::string& path, const std::string& out_dir) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open manifest " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad manifest " + path + ": " + e.what());
  }
  if (!j.contains("subcommand") || !j.contains("config") || !j["config"].is_object())
    throw ConfigError("manifest " + path + " lacks subcommand or config");
  std::vector<std::string> args{j["subcommand"].get<std::string>()};
  for (const auto& [k, v] : j["config"].items()) {
    if (k == "out") continue;
    const auto value = v.get<std::string>();
    if (value.empty()) continue;
    args.push_back("--" + k);
    args.push_back(value);
  }
  args.push_back("--out");
  args.push_back(out_dir);
  return args;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparsity normalisation experiments", "sparsenorm"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);

  struct Slot {
    std::unique_ptr<Command> command;
    CLI::App* app;
    std::unique_ptr<Params> params;
    std::string config_path;
    std::string out_dir = "out";
  };
  std::vector<Slot> slots;
  for (auto& c : make_commands()) {
    Slot s;
    s.app = app.add_subcommand(c->name(), c->description());
    s.params = std::make_unique<Params>(s.app, c->name());
    s.command = std::move(c);
    slots.push_back(std::move(s));
  }
  for (auto& s : slots) {
    s.command->declare(*s.params);
    s.params->add("out", s.out_dir, "output directory");
    s.app->add_option("--config", s.config_path, "INI file; its [" + s.command->name() + "] section supplies defaults");
  }
  std::string manifest_path, rerun_out;
  auto* rerun = app.add_subcommand("rerun", "Repeat the run recorded in a manifest");
  rerun->add_option("--manifest", manifest_path, "manifest.json from an earlier run")->required();
  rerun->add_option("--out", rerun_out, "output directory")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (rerun->parsed()) {
    try {
      return run(args_from_manifest(manifest_path, rerun_out), out, err);
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return kExitUsage;
    }
  }

  auto it = std::find_if(slots.begin(), slots.end(), [](const Slot& s) { return s.app->parsed(); });
  Slot& slot = *it;
  const std::string started = utc_now();
  std::vector<std::string> outputs;
  int code = kExitOk;
  try {
    std::optional<Config> config;
    if (!slot.config_path.empty()) config = Config::load(slot.config_path);
    slot.params->resolve(config);
    std::filesystem::create_directories(slot.out_dir);
    code = slot.command->execute(slot.out_dir, {out, err}, outputs);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  try {
    write_manifest((std::filesystem::path(slot.out_dir) / "manifest.json").string(), slot.command->name(),
                   *slot.params, slot.command->seed(), started, outputs, code);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return code;
}

}  // namespace sparsenorm::cli
