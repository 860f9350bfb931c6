#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "config.hpp"
#include "fredholm/parallel.hpp"
#include "run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Fredholm-determinant solver for second-kind integral equations on the real line"};
  std::string config_path;
  std::string output_dir = ".";
  unsigned threads = 0;
  bool reproducible = false;
  app.add_option("--config", config_path, "run configuration (JSON, schema 1)")->required();
  app.add_option("--output", output_dir, "directory for report files")->capture_default_str();
  app.add_option("--threads", threads, "worker cap (default: FREDHOLM_THREADS or all cores)")
      ->check(CLI::PositiveNumber);
  app.add_flag("--reproducible", reproducible, "omit timing metadata from reports");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return fredholm::cli::exit_error;
  }
  if (threads > 0) fredholm::set_thread_cap(threads);

  fredholm::cli::RunConfig cfg;
  try {
    cfg = fredholm::cli::load_config(config_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "fredholm: %s\n", e.what());
    fredholm::cli::write_failure(output_dir, e.what());
    return fredholm::cli::exit_error;
  }
  cfg.reproducible = cfg.reproducible || reproducible;
  const auto result = fredholm::cli::run(cfg, output_dir);
  if (!result.error.empty()) std::fprintf(stderr, "fredholm: %s\n", result.error.c_str());
  return result.exit_code;
}
