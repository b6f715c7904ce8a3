// Command-line front end: generate micro-kernels, verify schedules, run the
// shape workloads, and query the cache model. See README.md for usage.

#include <CLI11.hpp>
#include <iostream>

#include "ukgen/commands.hpp"

using namespace ukgen;

int main(int argc, char** argv) {
  CLI::App app{"user-schedulable GEMM micro-kernel generator"};
  app.require_subcommand(1);

  // ---- generate ----
  GenerateOptions gen;
  std::string gen_prec = "f32", gen_mode = "unit";
  auto* generate = app.add_subcommand("generate", "schedule a kernel and emit C");
  generate->add_option("--mr", gen.spec.mr, "rows of the register tile")->required();
  generate->add_option("--nr", gen.spec.nr, "columns of the register tile")->required();
  generate->add_option("--precision", gen_prec, "f32 or f16");
  generate->add_option("--target", gen.spec.target, "target library name");
  generate->add_flag("--packed-a,!--no-packed-a", gen.spec.packed_a,
                     "assume A is packed (default)");
  generate->add_option("--alpha-beta", gen_mode, "unit or generic");
  generate->add_option("--out-dir", gen.out_dir, "output directory");
  generate->add_option("--harness-k", gen.harness_k, "k extent used by the harness");
  generate->add_flag("--restrict", gen.restrict_pointers, "emit restrict-qualified pointers");

  // ---- verify ----
  VerifyOptions ver;
  std::string ver_spec, ver_preset, ver_mode_s = "integer_exact", ver_prec = "f32";
  std::string ver_target = "neon_f32", ver_ab = "unit";
  bool ver_no_packed = false;
  auto* verify = app.add_subcommand("verify", "check schedules against the interpreter");
  verify->add_option("--spec", ver_spec, "kernel size MRxNR, e.g. 8x12");
  verify->add_option("--preset", ver_preset, "paper-8x12, paper-family, vgg-family, full-family");
  verify->add_option("--script", ver.script_file, "replay a schedule script file");
  verify->add_option("--trials", ver.trials, "random trials per step");
  verify->add_option("--mode", ver_mode_s, "integer_exact or real_tolerance");
  verify->add_option("--seed", ver.seed, "random seed (UKF_SEED overrides)");
  verify->add_option("--precision", ver_prec, "f32 or f16");
  verify->add_option("--target", ver_target, "target library name");
  verify->add_option("--alpha-beta", ver_ab, "unit or generic");
  verify->add_flag("--no-packed-a", ver_no_packed, "use the broadcast variant");

  // ---- shapes ----
  ShapesOptions shp;
  auto* shapes = app.add_subcommand("shapes", "verify the layer workloads through the driver");
  shapes->add_option("--model", shp.model, "resnet50, vgg16 or square")->required();
  shapes->add_option("--family", shp.family, "kernel family preset");
  shapes->add_option("--csv", shp.csv_path, "write per-(shape,kernel) records to a CSV file");
  shapes->add_flag("--full", shp.full, "run full sizes (no k or m/n caps)");
  shapes->add_option("--max-layers", shp.max_layers, "verify only the first N layers");
  shapes->add_option("--trials", shp.trials, "verification trials per layer");
  shapes->add_option("--seed", shp.seed, "random seed (UKF_SEED overrides)");

  // ---- model ----
  ModelOptions mdl;
  std::string mdl_prec = "f32";
  auto* model = app.add_subcommand("model", "print cache blocking parameters");
  model->add_option("--cache", mdl.cache, "carmel or a descriptor file");
  model->add_option("--mr", mdl.mr, "kernel rows");
  model->add_option("--nr", mdl.nr, "kernel columns");
  model->add_option("--precision", mdl_prec, "f32 or f16");

  // ---- targets ----
  std::string targets_dir = "data/targets";
  auto* targets = app.add_subcommand("targets", "write builtin target documents");
  targets->add_option("--out-dir", targets_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage and configuration problems
  }

  try {
    if (*generate) {
      gen.spec.precision = commands::parse_precision_name(gen_prec);
      gen.spec.generic_alpha_beta = gen_mode == "generic";
      return cmd_generate(gen, std::cout, std::cerr);
    }
    if (*verify) {
      if (!ver.script_file.empty()) {
        ver.script_base.precision = commands::parse_precision_name(ver_prec);
        ver.script_base.target = ver_target;
        ver.script_base.generic_alpha_beta = ver_ab == "generic";
        return cmd_verify(ver, std::cout, std::cerr);
      }
      auto parse_spec = [&](const std::string& text) {
        size_t x = text.find('x');
        if (x == std::string::npos)
          fail(ErrKind::ValidationError, "--spec expects MRxNR, e.g. 8x12");
        KernelSpec s = spec_for(std::stoi(text.substr(0, x)), std::stoi(text.substr(x + 1)),
                                commands::parse_precision_name(ver_prec), ver_target,
                                ver_ab == "generic");
        if (ver_no_packed) s.packed_a = false;
        return s;
      };
      if (!ver_spec.empty()) {
        ver.specs.push_back(parse_spec(ver_spec));
      } else if (!ver_preset.empty()) {
        for (auto [mr, nr] : preset_members(ver_preset)) {
          ver.specs.push_back(spec_for(mr, nr, commands::parse_precision_name(ver_prec),
                                       ver_target, ver_ab == "generic"));
        }
      } else {
        std::cerr << "verify needs --spec, --preset or --script\n";
        return 2;
      }
      ver.mode = ver_mode_s == "real_tolerance" ? ValueMode::real_tolerance
                                                : ValueMode::integer_exact;
      return cmd_verify(ver, std::cout, std::cerr);
    }
    if (*shapes) return cmd_shapes(shp, std::cout, std::cerr);
    if (*model) {
      mdl.precision = commands::parse_precision_name(mdl_prec);
      return cmd_model(mdl, std::cout, std::cerr);
    }
    if (*targets) return cmd_targets(targets_dir, std::cout, std::cerr);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrKind::ValidationError ? 2 : 1;
  }
  return 2;
}
