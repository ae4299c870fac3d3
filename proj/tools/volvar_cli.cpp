// Experiment runner: volvar CONFIG [--validate-only] [--out DIR] [--seed N]

#include "volvar/experiment.hpp"

#ifdef VOLVAR_CLI11_PACKAGE
#include <CLI/CLI.hpp>
#else
#include <CLI11.hpp>
#endif

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Run a varifold experiment from an INI configuration"};
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool validate_only = false;
  app.add_option("config", config_path, "Experiment configuration (INI)")->required();
  app.add_flag("--validate-only", validate_only, "Check preconditions without running");
  app.add_option("--out", out_dir, "Output directory (overrides [experiment] output)");
  app.add_option("--seed", seed, "Random seed (overrides [experiment] seed)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    volvar::ExperimentConfig config = volvar::load_config(config_path);
    if (seed) volvar::override_seed(config, *seed);

    if (validate_only) {
      const auto diags = volvar::validate(config);
      bool fatal = false;
      for (const auto& d : diags) {
        std::cout << (d.fatal ? "error: " : "warning: ") << d.message << '\n';
        fatal = fatal || d.fatal;
      }
      if (diags.empty()) std::cout << "ok\n";
      return fatal ? 3 : 0;
    }

    if (out_dir.empty()) out_dir = config.output;
    if (out_dir.empty()) {
      std::cerr << "error: no output directory (use --out or [experiment] output)\n";
      return 2;
    }
    const auto outcome = volvar::run_experiment(config, out_dir);
    for (const auto& line : outcome.checks) std::cout << line << '\n';
    std::cout << "wrote " << outcome.files.size() << " files to " << out_dir << '\n';
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return volvar::exit_status_for(e);
  }
}
