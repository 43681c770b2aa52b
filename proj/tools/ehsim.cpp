#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ebuf/cli.hpp"
#include "ebuf/errors.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> slots;
  std::optional<std::string> out_dir;
  std::optional<std::string> format;
};

void add_common(CLI::App* sub, Overrides& ov) {
  sub->add_option("--config", ov.config, "config file (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--seed", ov.seed, "override sim.seed");
  sub->add_option("--slots", ov.slots, "override sim.slots");
  sub->add_option("--out", ov.out_dir, "override output.out_dir");
  sub->add_option("--format", ov.format, "csv|json|both")
      ->check(CLI::IsMember({"csv", "json", "both"}));
}

int run(const std::string& command, const Overrides& ov) {
  auto cfg = ebuf::cli::load_config(ov.config);
  if (ov.seed) cfg.seed = *ov.seed;
  if (ov.slots) cfg.slots = *ov.slots;
  if (ov.out_dir) cfg.out_dir = *ov.out_dir;
  if (ov.format) cfg.format = *ov.format;
  cfg.validate();
  return ebuf::cli::run_command(command, cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-buffer limiting distributions, outage and throughput"};
  app.require_subcommand(1);

  Overrides ov;
  std::string command;
  for (const char* name : {"dist", "outage", "sweep", "throughput", "compare"}) {
    auto* sub = app.add_subcommand(name);
    add_common(sub, ov);
    sub->callback([&command, name] { command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    return run(command, ov);
  } catch (const ebuf::config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const ebuf::regime_error& e) {
    std::fprintf(stderr, "regime error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 3;
  }
}
