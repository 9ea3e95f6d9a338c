// Command-line front end for the fdctmc shared library. Talks to the library
// exclusively through the C API in fdctmc.h.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "fdctmc.h"

namespace {

struct ReportDeleter {
  void operator()(fdc_report* r) const { fdc_report_free(r); }
};
struct ModelDeleter {
  void operator()(fdc_model* m) const { fdc_model_free(m); }
};
using ReportPtr = std::unique_ptr<fdc_report, ReportDeleter>;
using ModelPtr = std::unique_ptr<fdc_model, ModelDeleter>;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CLI::ValidationError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int finish(fdc_status status, ReportPtr report, bool kv_as_comments = false) {
  if (status != FDC_OK) {
    std::cerr << "error: " << fdc_last_error() << "\n";
    return static_cast<int>(status);
  }
  std::cout << fdc_report_text(report.get());
  std::istringstream kv(fdc_report_kv(report.get()));
  std::string line;
  while (std::getline(kv, line)) {
    if (kv_as_comments) std::cout << "# ";
    std::cout << line << "\n";
  }
  return 0;
}

ModelPtr load_model(const std::string& path, int& status) {
  fdc_model* raw = nullptr;
  status = fdc_model_parse(read_file(path).c_str(), &raw);
  return ModelPtr(raw);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"analysis and timeout synthesis for fixed-delay continuous-time Markov chains"};
  app.require_subcommand(1);

  fdc_options opts;
  fdc_options_init(&opts);
  std::string model_path, delays_path, cnf_path, out_path;

  auto add_model_arg = [&](CLI::App* cmd) {
    cmd->add_option("model", model_path, "model file")->required();
  };
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--theta", opts.theta, "kernel truncation error (default 1e-9)");
  };

  auto* analyze = app.add_subcommand("analyze", "expected cost and reach under fixed delays");
  add_model_arg(analyze);
  analyze->add_option("--delays", delays_path, "delays file: '<state> <delay>' lines")->required();
  add_common(analyze);

  auto* params = app.add_subcommand("params", "print model constants and mesh parameters");
  add_model_arg(params);
  params->add_option("--epsilon", opts.epsilon, "target error (default 0.1)");
  params->add_option("--dmin", opts.dmin, "also print partial-observation bounds from this dmin");
  params->add_option("--dmax", opts.dmax, "upper delay bound for the partial-observation block");
  params->add_flag("--theoretical-vmax", opts.use_theoretical_vmax,
                   "use the worst-case value bound instead of the constant-delay heuristic");
  add_common(params);

  auto* synth = app.add_subcommand("synth", "unconstrained epsilon-optimal timeout synthesis");
  add_model_arg(synth);
  synth->add_option("--epsilon", opts.epsilon, "target error (default 0.1)");
  synth->add_option("--delta", opts.delta, "mesh step override");
  synth->add_option("--dmax", opts.dmax, "delay bound override");
  synth->add_option("--kappa", opts.kappa, "rounding grid override (0 disables rounding)");
  synth->add_option("--vmax", opts.vmax, "value bound override");
  synth->add_flag("--theoretical-vmax", opts.use_theoretical_vmax,
                  "use the worst-case value bound");
  synth->add_option("--action-cap", opts.action_cap, "total action limit (default 1e6)");
  add_common(synth);

  auto* synth_po = app.add_subcommand(
      "synth-po", "bounded synthesis under the model's observation classes");
  add_model_arg(synth_po);
  synth_po->add_option("--epsilon", opts.epsilon, "target error (default 0.1)")->required();
  synth_po->add_option("--dmin", opts.dmin, "lower delay bound")->required();
  synth_po->add_option("--dmax", opts.dmax, "upper delay bound")->required();
  synth_po->add_option("--delta", opts.delta, "mesh step override");
  synth_po->add_option("--kappa", opts.kappa, "rounding grid override (0 disables rounding)");
  synth_po->add_option("--action-cap", opts.action_cap, "total action limit (default 1e6)");
  synth_po->add_option("--strategy-cap", opts.strategy_cap,
                       "enumeration limit (default 1e7)");
  add_common(synth_po);

  auto* threshold = app.add_subcommand("threshold", "approximate threshold decision");
  add_model_arg(threshold);
  threshold->add_option("--x", opts.x, "cost threshold")->required();
  threshold->add_option("--epsilon", opts.epsilon, "slack (default 0.1)")->required();
  threshold->add_option("--dmin", opts.dmin, "lower delay bound")->required();
  threshold->add_option("--dmax", opts.dmax, "upper delay bound")->required();
  threshold->add_option("--delta", opts.delta, "mesh step override");
  threshold->add_option("--kappa", opts.kappa, "rounding grid override");
  threshold->add_option("--strategy-cap", opts.strategy_cap, "enumeration limit");
  add_common(threshold);

  auto* verify = app.add_subcommand("verify", "check a candidate delay function certificate");
  add_model_arg(verify);
  verify->add_option("--delays", delays_path, "candidate delays file")->required();
  verify->add_option("--x", opts.x, "cost threshold")->required();
  verify->add_option("--dmin", opts.dmin, "lower delay bound")->required();
  verify->add_option("--dmax", opts.dmax, "upper delay bound")->required();
  verify->add_option("--epsilon", opts.epsilon, "slack used to derive the mesh");
  verify->add_option("--delta", opts.delta, "mesh step override");
  verify->add_option("--kappa", opts.kappa, "rounding grid override");
  add_common(verify);

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo estimate under fixed delays");
  add_model_arg(simulate);
  simulate->add_option("--delays", delays_path, "delays file")->required();
  simulate->add_option("--runs", opts.runs, "number of runs (default 100000)");
  simulate->add_option("--seed", opts.seed, "RNG seed (default 1)");
  simulate->add_option("--max-steps", opts.max_steps, "per-run step cap (default 1e6)");

  auto* gen_sat = app.add_subcommand("gen-sat", "emit the SAT reduction model for a CNF formula");
  gen_sat->add_option("--cnf", cnf_path, "DIMACS CNF file")->required();
  gen_sat->add_option("--out", out_path, "write the model here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    fdc_report* raw = nullptr;
    if (gen_sat->parsed()) {
      fdc_status status = fdc_gen_sat(read_file(cnf_path).c_str(), &raw);
      ReportPtr report(raw);
      if (status != FDC_OK) {
        std::cerr << "error: " << fdc_last_error() << "\n";
        return static_cast<int>(status);
      }
      const char* warning = fdc_report_get_str(report.get(), "warning");
      if (warning != nullptr) std::cerr << "warning: " << warning << "\n";
      if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) {
          std::cerr << "error: cannot write '" << out_path << "'\n";
          return 1;
        }
        out << fdc_report_get_str(report.get(), "model");
        std::cout << fdc_report_kv(report.get());
        return 0;
      }
      // the whole stdout stays a parseable model file: the report block is
      // emitted as comments
      std::cout << fdc_report_get_str(report.get(), "model");
      std::istringstream kv(fdc_report_kv(report.get()));
      std::string line;
      while (std::getline(kv, line)) std::cout << "# " << line << "\n";
      return 0;
    }

    int status = 0;
    ModelPtr model = load_model(model_path, status);
    if (status != FDC_OK) {
      std::cerr << "error: " << fdc_last_error() << "\n";
      return status;
    }

    fdc_status st = FDC_ERR_USAGE;
    if (analyze->parsed())
      st = fdc_analyze(model.get(), read_file(delays_path).c_str(), &opts, &raw);
    else if (params->parsed())
      st = fdc_params(model.get(), &opts, &raw);
    else if (synth->parsed())
      st = fdc_synth(model.get(), &opts, &raw);
    else if (synth_po->parsed())
      st = fdc_synth_po(model.get(), &opts, &raw);
    else if (threshold->parsed())
      st = fdc_threshold(model.get(), &opts, &raw);
    else if (verify->parsed())
      st = fdc_verify(model.get(), read_file(delays_path).c_str(), &opts, &raw);
    else if (simulate->parsed())
      st = fdc_simulate(model.get(), read_file(delays_path).c_str(), &opts, &raw);
    return finish(st, ReportPtr(raw));
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
