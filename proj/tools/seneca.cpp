#include <iostream>

#include "CLI11.hpp"
#include "seneca/pipeline.hpp"

using seneca::pipeline::PipelineConfig;

namespace {

std::string stage_list() {
  std::string out;
  for (const auto& s : seneca::pipeline::stage_names()) out += "  " + s + "\n";
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"seneca: entity-driven summarization pipeline"};
  app.footer("Stages, in order:\n" + stage_list() + "  all  (every stage above)");

  std::string stage;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::size_t> beam;
  std::optional<double> alpha;
  std::optional<std::size_t> max_len;
  std::optional<std::string> checkpoint;
  std::vector<std::string> overrides;
  bool print_config = false;

  app.add_option("stage", stage, "Stage to run")->required();
  app.add_option("-c,--config", config_path, "key = value config file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Override the run seed");
  app.add_option("--out", out_dir, "Override the output directory");
  app.add_option("--beam", beam, "Beam width for summarize (1 = greedy)");
  app.add_option("--alpha", alpha, "Length normalisation exponent for beam scores");
  app.add_option("--max-len", max_len, "Maximum decoded summary length");
  app.add_option("--checkpoint", checkpoint, "Generator checkpoint directory for summarize");
  app.add_option("--set", overrides, "Extra key=value override (repeatable)");
  app.add_flag("--print-config", print_config, "Print the effective config and exit");
  CLI11_PARSE(app, argc, argv);

  PipelineConfig cfg;
  try {
    if (!config_path.empty()) cfg = PipelineConfig::load(config_path);
    for (const auto& kv : overrides) {
      auto eq = kv.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got " + kv);
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed) cfg.seed = *seed;
    if (out_dir) cfg.out_dir = *out_dir;
    if (beam) cfg.decode.beam = *beam;
    if (alpha) cfg.decode.alpha = *alpha;
    if (max_len) cfg.decode.max_len = *max_len;
    if (checkpoint) cfg.summarize_checkpoint = *checkpoint;
    cfg.validate();
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }
  if (print_config) {
    std::cout << cfg.serialize();
    return 0;
  }

  std::vector<std::string> stages;
  if (stage == "all") {
    stages = seneca::pipeline::stage_names();
  } else {
    stages = {stage};
  }
  for (const auto& s : stages) {
    try {
      auto manifest = seneca::pipeline::run_stage(s, cfg);
      std::cout << s << " (" << manifest.wall_clock_seconds << " s)\n" << manifest.metrics.dump(2) << '\n';
    } catch (const seneca::pipeline::PrerequisiteError& e) {
      std::cerr << s << ": missing prerequisite: " << e.what() << '\n';
      return 3;
    } catch (const std::invalid_argument& e) {
      std::cerr << s << ": " << e.what() << '\n';
      return 2;
    } catch (const std::exception& e) {
      std::cerr << s << ": " << e.what() << '\n';
      return 1;
    }
  }
  return 0;
}
