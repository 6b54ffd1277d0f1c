// Command-line driver for the experiment suite.
//
// Exit codes: 0 all checks passed, 1 a tolerance check failed, 2 config or
// parameter error, 3 numerical or resolution failure.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "wavepacket/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"wavepacket-lab: wave-packet toolkit experiments"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run an experiment described by a config file");
  std::string config_path;
  std::vector<std::string> overrides;
  int threads = 1;
  std::string out_dir;
  run->add_option("config", config_path, "TOML config file")->required();
  run->add_option("--set", overrides, "override a config key, key=value")
      ->take_all()
      ->allow_extra_args(false);
  run->add_option("--threads", threads, "worker thread count");
  run->add_option("--out", out_dir, "output root (default: $WPLAB_OUT or ./wplab-out)");

  auto* list = app.add_subcommand("list", "list the available experiments");
  bool as_json = false;
  list->add_flag("--json", as_json, "machine-readable catalog");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (list->parsed()) {
    if (as_json) {
      wp::json cat = wp::json::array();
      for (const wp::ExperimentInfo& info : wp::experiment_catalog())
        cat.push_back({{"name", info.name},
                       {"description", info.description},
                       {"keys", info.keys}});
      std::cout << cat.dump(2) << "\n";
    } else {
      for (const wp::ExperimentInfo& info : wp::experiment_catalog()) {
        std::cout << info.name << "  " << info.description << "\n";
        for (const std::string& key : info.keys) std::cout << "    " << key << "\n";
      }
    }
    return 0;
  }

  try {
    wp::set_threads(threads);
    wp::Config cfg = wp::parse_config(wp::read_text(config_path));
    for (const std::string& expr : overrides) wp::apply_override(cfg, expr);
    wp::ReportBundle rep = wp::run_experiment(cfg);
    rep.summary["threads"] = threads;
    std::filesystem::path root =
        out_dir.empty() ? wp::default_output_root() : std::filesystem::path(out_dir);
    std::filesystem::path dir = rep.write(root);
    std::cout << (rep.pass ? "PASS" : "FAIL") << " " << rep.experiment << "  ->  "
              << dir.string() << "\n";
    return rep.pass ? 0 : 1;
  } catch (const wp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const wp::ParameterError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  }
}
