// risbound: bounds and optimizers for 1-bit RIS channel gain.
//
//   risbound gen --ns 8 --seed 3 --out model.json
//   risbound bound --model model.json --loads pm --bounds ni,nio,ibd,sdr
//   risbound optimize --model model.json --loads pin --methods es,cd,ga,psdr
//   risbound sweep --model model.json --loads pm --ns 1,2,4,8 --bounds sdr --methods es
//   risbound verify --seed 0 --count 20

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "risbound/commands.hpp"

namespace {

using namespace risbound;

constexpr int kExitOk = 0;
constexpr int kExitPropertyFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidModel:
    case ErrorCode::ParseError:
    case ErrorCode::TooLarge:
    case ErrorCode::InvalidNoise:
      return kExitConfig;
    default:
      return kExitNumerical;
  }
}

void error_record(std::string_view code, std::string_view message) {
  nlohmann::ordered_json j;
  j["error"] = code;
  j["message"] = message;
  std::cerr << j.dump() << "\n";
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(out);
  if (!f) fail(ErrorCode::InvalidArgument, "cannot write " + out);
  f << text;
}

std::string render(const std::vector<ResultRow>& rows, const std::string& format) {
  if (format == "json") return to_json(rows).dump(2) + "\n";
  return to_csv(rows);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Upper bounds and optimizers for 1-bit RIS channel gain"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string bounds = "ni,nio,ibd,sdr";
  std::string methods = "es,cd,ga,psdr";
  std::string ns;
  std::string out;
  std::string format = "csv";
  std::size_t count = 20;

  ScenarioSpec spec;
  std::string direct = "random";

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--model", cfg.model_path, "Model file (JSON)")->check(CLI::ExistingFile);
    sub->add_option("--loads", cfg.loads, "Load set: pm, pin or 01");
    sub->add_option("--seed", cfg.seed, "Seed for randomized methods");
    sub->add_option("--pt-mw", cfg.pt_mw, "Transmit power in mW")->capture_default_str();
    sub->add_option("--sigma2-mw", cfg.sigma2_mw, "Noise power in mW")->capture_default_str();
    sub->add_option("--out", out, "Output path (default: stdout)");
    sub->add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    sub->add_option("--solver", cfg.solver, "SDP backend: ipm or admm")->capture_default_str();
    sub->add_option("--jobs", cfg.jobs, "Worker threads")->capture_default_str();
    sub->add_option("--es-cap", cfg.es_cap, "Largest n_s for exhaustive search")->capture_default_str();
  };

  auto* gen = app.add_subcommand("gen", "Generate a synthetic passive scenario");
  gen->add_option("--ns", spec.n_s, "Number of RIS elements")->required();
  gen->add_option("--seed", spec.seed, "Generator seed");
  gen->add_option("--max-sv", spec.max_singular_value, "Largest singular value of S")->capture_default_str();
  gen->add_flag("--reciprocal", spec.reciprocal, "Symmetric scattering matrix");
  gen->add_option("--coupling-scale", spec.coupling_scale, "Scale of inter-element coupling")->capture_default_str();
  gen->add_option("--direct-path", direct, "Direct path policy")->check(CLI::IsMember({"zero", "random"}))->capture_default_str();
  gen->add_option("--loads", cfg.loads, "Load set stored in the file (default pm)");
  gen->add_option("--out", out, "Output model path")->required();

  auto* bound = app.add_subcommand("bound", "Compute upper bounds");
  add_common(bound);
  bound->add_option("--bounds", bounds, "Subset of ni,nio,ibd,sdr")->capture_default_str();

  auto* optimize = app.add_subcommand("optimize", "Run configuration optimizers");
  add_common(optimize);
  optimize->add_option("--methods", methods, "Subset of es,cd,ga,psdr")->capture_default_str();

  auto* sweep = app.add_subcommand("sweep", "Bounds and optimizers over reduced models");
  add_common(sweep);
  sweep->add_option("--ns", ns, "Comma-separated n_s values")->required();
  sweep->add_option("--bounds", bounds, "Subset of ni,nio,ibd,sdr")->capture_default_str();
  sweep->add_option("--methods", methods, "Subset of es,cd,ga,psdr")->capture_default_str();

  auto* verify = app.add_subcommand("verify", "Run the property suite on random scenarios");
  verify->add_option("--seed", cfg.seed, "Suite seed");
  verify->add_option("--count", count, "Number of scenarios")->capture_default_str();
  verify->add_option("--jobs", cfg.jobs, "Worker threads")->capture_default_str();
  verify->add_option("--out", out, "CSV output path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    error_record("ConfigError", e.what());
    return kExitConfig;
  }

  try {
    if (gen->parsed()) {
      spec.direct_path = direct == "zero" ? DirectPath::Zero : DirectPath::Random;
      const LoadSet ls = load_set(cfg.loads.empty() ? "PM" : cfg.loads);
      spec.alpha = ls.alpha;
      spec.beta = ls.beta;
      cmd_gen(spec, out);
      return kExitOk;
    }
    if (verify->parsed()) {
      const VerifyResult res = cmd_verify(cfg.seed, count, cfg.jobs);
      emit(res.csv(), out);
      std::cerr << (res.passed() ? "verify: all properties hold" : "verify: " + std::to_string(res.failed) + " property checks failed")
                << "\n";
      return res.passed() ? kExitOk : kExitPropertyFailure;
    }
    if (cfg.model_path.empty()) fail(ErrorCode::InvalidArgument, "--model is required");

    CommandResult res;
    if (bound->parsed()) {
      cfg.bounds = parse_bounds(bounds);
      res = cmd_bound(cfg);
    } else if (optimize->parsed()) {
      cfg.methods = parse_methods(methods);
      res = cmd_optimize(cfg);
    } else if (sweep->parsed()) {
      cfg.bounds = parse_bounds(bounds);
      cfg.methods = parse_methods(methods);
      cfg.ns = parse_ns(ns);
      res = cmd_sweep(cfg);
    }
    emit(render(res.rows, format), out);
    if (res.failures > 0) {
      error_record("NumericalFailure", std::to_string(res.failures) + " computations failed; see the note column");
      return kExitNumerical;
    }
    return kExitOk;
  } catch (const Error& e) {
    error_record(to_string(e.code()), e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    error_record("NumericalFailure", e.what());
    return kExitNumerical;
  }
}
