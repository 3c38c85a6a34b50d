// rwlab command-line runner.
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "rwlab/error.hpp"
#include "rwlab/io.hpp"

namespace fs = std::filesystem;
using namespace rwlab;

namespace {

constexpr int kPass = 0, kError = 1, kCriterionFailed = 2;

fs::path default_out(const fs::path& config) {
  if (const char* env = std::getenv("RWLAB_OUT"); env && *env) return fs::path(env) / config.stem();
  return fs::path("rwlab_out") / config.stem();
}

void report_error(const fs::path& file, const std::exception& e) {
  std::cerr << "rwlab: " << file.string() << ": " << e.what() << "\n";
}

int cmd_run(const fs::path& config, const std::string& out_opt, int threads) {
  ExperimentConfig c = load_config(config);
  if (threads > 0) c.threads = static_cast<std::size_t>(threads);
  const fs::path out_dir = out_opt.empty() ? default_out(config) : fs::path(out_opt);
  const std::string started = utc_now();
  const ExperimentOutput out = run_experiment(c);
  const Json manifest = write_run(c, out, out_dir, started, utc_now());
  std::cout << c.experiment << ": " << (out.pass ? "PASS" : "FAIL") << "  -> " << out_dir.string() << "\n"
            << "config_hash " << manifest["config_hash"].get<std::string>() << "\n";
  return out.pass ? kPass : kCriterionFailed;
}

int cmd_list(bool as_json) {
  if (as_json) {
    std::cout << catalog_to_json().dump(2) << "\n";
    return kPass;
  }
  for (const auto& e : experiment_catalog())
    std::printf("%-20s %-19s %-8s %s\n", e.id.c_str(), e.experiment.c_str(), e.budget.c_str(), e.anchor.c_str());
  return kPass;
}

int cmd_validate(const fs::path& config) {
  const ExperimentConfig c = load_config(config);
  std::cout << "ok " << c.experiment << " config_hash " << sha256_hex(canonical_dump(config_to_json(c))) << "\n";
  return kPass;
}

int cmd_replay(const fs::path& manifest_file) {
  std::ifstream in(manifest_file);
  if (!in) throw Error("cannot open " + manifest_file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const Json m = parse_json_text(ss.str());
  const ExperimentConfig c = parse_config(m.at("config"));
  const std::string hash = sha256_hex(canonical_dump(config_to_json(c)));
  if (hash != m.at("config_hash").get<std::string>()) {
    std::cerr << "rwlab: config hash mismatch\n";
    return kError;
  }
  const ExperimentOutput out = run_experiment(c);
  const std::string got = sha256_hex(canonical_dump(out.payload));
  const std::string want = m.at("payload_sha256").get<std::string>();
  std::cout << "payload_sha256 " << got << (got == want ? "  identical" : "  DIFFERS from " + want) << "\n";
  return got == want ? kPass : kCriterionFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rwlab: random walks in random sceneries, quenched limit experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(RWLAB_VERSION));

  fs::path run_cfg, val_cfg, manifest;
  std::string out_dir;
  int threads = 0;
  bool as_json = false;

  auto* run = app.add_subcommand("run", "run an experiment config and write artifacts");
  run->add_option("config", run_cfg, "config JSON")->required();
  run->add_option("--out", out_dir, "output directory (default $RWLAB_OUT/<stem> or ./rwlab_out/<stem>)");
  run->add_option("--threads", threads, "override the worker count");
  auto* list = app.add_subcommand("list", "print the experiment catalog");
  list->add_flag("--json", as_json, "machine-readable catalog");
  auto* val = app.add_subcommand("validate", "check a config against the schema");
  val->add_option("config", val_cfg, "config JSON")->required();
  auto* rep = app.add_subcommand("replay", "rerun a manifest and compare payload digests");
  rep->add_option("manifest", manifest, "manifest.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kPass : kError;
  }

  fs::path current;
  try {
    if (*run) return current = run_cfg, cmd_run(run_cfg, out_dir, threads);
    if (*list) return cmd_list(as_json);
    if (*val) return current = val_cfg, cmd_validate(val_cfg);
    if (*rep) return current = manifest, cmd_replay(manifest);
  } catch (const std::exception& e) {
    report_error(current, e);
    return kError;
  }
  return kError;
}
