// paraprod <experiment> --config <file.json> [--seed S] [--out DIR]
//
// Exit codes: 0 all enabled assertions pass, 1 assertion failure,
// 2 configuration or I/O error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "paraprod/paraprod.hpp"

int main(int argc, char** argv) {
  CLI::App app{"dyadic/Fourier paraproduct experiment runner"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<uint64_t> seed_override;

  std::vector<CLI::App*> subs;
  for (paraprod::ExperimentKind kind :
       {paraprod::ExperimentKind::OpnormDyadic,
        paraprod::ExperimentKind::Equivalence,
        paraprod::ExperimentKind::AdjointGap,
        paraprod::ExperimentKind::SparseCertify,
        paraprod::ExperimentKind::FourierVerify,
        paraprod::ExperimentKind::AtomBuild, paraprod::ExperimentKind::Hedberg,
        paraprod::ExperimentKind::Ppn}) {
    CLI::App* sub = app.add_subcommand(paraprod::to_string(kind), "");
    sub->add_option("--config", config_path, "experiment config (JSON)")
        ->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed_override, "override the config seed");
    subs.push_back(sub);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    std::ifstream in(config_path);
    if (!in.good()) {
      std::cerr << "cannot read config: " << config_path << "\n";
      return 2;
    }
    paraprod::ordered_json j = paraprod::ordered_json::parse(in);
    // the subcommand names the experiment; the config may repeat it
    j["experiment"] = app.get_subcommands().front()->get_name();
    paraprod::ExperimentConfig cfg = paraprod::ExperimentConfig::from_json(j);
    if (seed_override) cfg.seed = *seed_override;
    if (!out_dir.empty()) cfg.output = out_dir;
    if (cfg.output.empty()) cfg.output = "paraprod-out";

    const int code = paraprod::run_and_emit(cfg, cfg.output);
    std::cout << "experiment " << paraprod::to_string(cfg.experiment)
              << (code == 0 ? ": PASS" : ": FAIL") << " (report in "
              << cfg.output << ")\n";
    return code;
  } catch (const paraprod::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config parse error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
