#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "mattekit/checkpoint.hpp"
#include "mattekit/compositing.hpp"
#include "mattekit/config.hpp"
#include "mattekit/dgm.hpp"
#include "mattekit/gradcheck_suite.hpp"
#include "mattekit/metrics.hpp"
#include "mattekit/png_io.hpp"
#include "mattekit/train.hpp"
#include "mattekit/trimap.hpp"

namespace fs = std::filesystem;
using namespace mattekit;

namespace {

struct SynthArgs {
  std::string out;
  uint64_t seed = 0;
  int num_fg = 8, bgs_per_fg = 8, size = 64;
  int kernel_min = 3, kernel_max = 9;
  std::string kinds = "soft_disk,soft_ring,hair_strokes";
};

struct TrimapArgs {
  std::string alpha, out;
  std::string method = "morphology";
  int kernel = 9;
  double radius = 4.0;
};

struct DgmMapArgs {
  std::string alpha, out;
  double sigma2 = 0.25, mu = 0.5;
  std::string normalize = "raw_pdf";
};

struct TrainArgs {
  std::string config;
  uint64_t seed = 0;
  std::string out;
  std::vector<std::string> overrides;
  std::string resume;
};

struct EvalArgs {
  std::string manifest, pred;
  std::string out = "eval.csv";
  double grad_sigma = 1.4, conn_step = 0.1, conn_theta = 0.15;
};

struct InferArgs {
  std::string checkpoint, image, trimap, out;
};

struct AblateArgs {
  std::string config;
  std::string out = "ablation";
  std::string suite = "loss";
  std::string seeds = "1";
  std::vector<std::string> custom;  // name:ov1;ov2
};

std::vector<FgKind> parse_kinds(const std::string& csv) {
  std::vector<FgKind> kinds;
  std::string item;
  std::stringstream ss(csv);
  while (std::getline(ss, item, ',')) kinds.push_back(fg_kind_from_string(item));
  return kinds;
}

std::vector<uint64_t> parse_seeds(const std::string& csv) {
  std::vector<uint64_t> seeds;
  std::string item;
  std::stringstream ss(csv);
  while (std::getline(ss, item, ',')) seeds.push_back(std::stoull(item));
  if (seeds.empty()) throw ConfigError("no seeds given");
  return seeds;
}

ExperimentConfig load_or_default(const std::string& path) {
  return path.empty() ? ExperimentConfig{} : load_config(path);
}

int cmd_synth(const SynthArgs& a) {
  SynthesisConfig cfg;
  cfg.num_fg = a.num_fg;
  cfg.bgs_per_fg = a.bgs_per_fg;
  cfg.size = a.size;
  cfg.trimap_kernel_min = a.kernel_min;
  cfg.trimap_kernel_max = a.kernel_max;
  cfg.kinds = parse_kinds(a.kinds);
  const DatasetManifest m = synthesize_dataset(cfg, a.out, a.seed);
  std::printf("wrote %zu entries under %s (manifest.json alongside)\n", m.entries.size(),
              a.out.c_str());
  return 0;
}

int cmd_trimap(const TrimapArgs& a) {
  const AlphaMatte alpha = read_png_gray(a.alpha);
  Trimap t;
  if (a.method == "morphology") t = from_alpha_morphology(alpha, a.kernel);
  else if (a.method == "distance") t = from_alpha_distance(alpha, a.radius);
  else throw ConfigError("trimap method must be morphology or distance");
  write_trimap_png(a.out, t);
  std::printf("%s: %lld unknown pixels of %d\n", a.out.c_str(),
              static_cast<long long>(unknown_count(t)), t.height * t.width);
  return 0;
}

int cmd_dgm_map(const DgmMapArgs& a) {
  const AlphaMatte alpha = read_png_gray(a.alpha);
  const ResponseNormalize norm =
      a.normalize == "peak_one" ? ResponseNormalize::PeakOne : ResponseNormalize::RawPdf;
  const ResponseMap r = response_map(alpha, a.mu, a.sigma2, norm);
  double peak = 0.0;
  for (double v : r.values) peak = std::max(peak, v);
  AlphaMatte heat(r.height, r.width);
  for (size_t i = 0; i < r.values.size(); ++i) heat.values[i] = peak > 0.0 ? r.values[i] / peak : 0.0;
  write_png_gray(a.out, heat);
  std::printf("%s: sigma2=%g peak response %g\n", a.out.c_str(), a.sigma2, peak);
  return 0;
}

int cmd_train(const TrainArgs& a) {
  ExperimentConfig cfg = load_or_default(a.config);
  for (const std::string& o : a.overrides) apply_override(cfg, o);
  cfg.train.seed = a.seed;
  if (!a.out.empty()) cfg.train.out_dir = a.out;
  {
    MattingNet probe(cfg.net, 0);
    std::printf("network parameters: %lld\n", static_cast<long long>(probe.param_count()));
  }
  const TrainSummary s = train(cfg, a.resume);
  std::printf("run %s: %lld iterations, SAD %.6f -> %.6f, final metrics "
              "SAD %.4f MSE %.5f Grad %.4f Conn %.4f (%.1fs)\n",
              s.run_dir.c_str(), static_cast<long long>(s.total_iterations), s.sad_initial,
              s.sad_final, s.final_metrics.sad, s.final_metrics.mse, s.final_metrics.grad,
              s.final_metrics.conn, s.wall_seconds);
  return 0;
}

int cmd_eval(const EvalArgs& a) {
  const DatasetManifest m = load_manifest(a.manifest);
  MetricParams params;
  params.grad_sigma = a.grad_sigma;
  params.conn_step = a.conn_step;
  params.conn_theta = a.conn_theta;
  const EvalResult r = evaluate(m, a.pred, params);
  write_eval_csv(r, a.out);
  std::printf("scored %zu/%zu entries: SAD %.4f MSE %.5f Grad %.4f Conn %.4f\n",
              r.per_image.size(), m.entries.size(), r.aggregate.sad, r.aggregate.mse,
              r.aggregate.grad, r.aggregate.conn);
  for (const std::string& miss : r.missing)
    std::fprintf(stderr, "missing prediction: %s\n", miss.c_str());
  return r.missing.empty() ? 0 : 1;
}

int cmd_infer(const InferArgs& a) {
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  MattingNet net(ck.net_config, 0);
  for (Parameter& p : net.params()) {
    const Parameter* src = ck.find(p.name);
    if (!src || src->shape != p.shape)
      throw ConfigError("checkpoint does not match its own network config at '" + p.name + "'");
    p.value = src->value;
  }
  const Image image = read_png_rgb(a.image);
  const Trimap trimap = read_trimap_png(a.trimap);
  const AlphaMatte alpha = infer(net, image, trimap);
  write_png_gray(a.out, alpha);
  std::printf("wrote %s\n", a.out.c_str());
  return 0;
}

int cmd_ablate(const AblateArgs& a) {
  ExperimentConfig cfg = load_or_default(a.config);
  std::vector<AblateVariant> variants;
  if (a.suite == "loss") variants = default_loss_variants();
  else if (a.suite == "modules") variants = default_module_variants();
  else if (a.suite == "both") {
    variants = default_loss_variants();
    const auto mods = default_module_variants();
    variants.insert(variants.end(), mods.begin(), mods.end());
  } else if (a.suite != "custom")
    throw ConfigError("ablate suite must be loss, modules, both or custom");
  for (const std::string& spec : a.custom) {
    const auto colon = spec.find(':');
    AblateVariant v;
    v.name = colon == std::string::npos ? spec : spec.substr(0, colon);
    if (colon != std::string::npos) {
      std::stringstream ss(spec.substr(colon + 1));
      std::string o;
      while (std::getline(ss, o, ';'))
        if (!o.empty()) v.overrides.push_back(o);
    }
    variants.push_back(std::move(v));
  }
  const AblateResult r = ablate(cfg, variants, parse_seeds(a.seeds), a.out);
  std::fputs(r.table.c_str(), stdout);
  for (const AblateRun& run : r.runs)
    if (run.failed)
      std::fprintf(stderr, "failed: %s seed %llu: %s\n", run.variant.c_str(),
                   static_cast<unsigned long long>(run.seed), run.error.c_str());
  return 0;
}

int cmd_gradcheck(double epsilon) {
  const auto cases = run_gradcheck_suite(epsilon);
  for (const auto& c : cases)
    std::printf("%-24s max_rel_err %.3e  (tol %.0e)  %s\n", c.name.c_str(), c.max_rel_err,
                c.tolerance, c.passed ? "ok" : "FAIL");
  return all_passed(cases) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mattekit: desk-scale trimap image matting with Gaussian-weighted training"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "synthesize a composited dataset");
  synth->add_option("--out", synth_args.out, "output directory")->required();
  synth->add_option("--seed", synth_args.seed, "dataset seed")->required();
  synth->add_option("--num-fg", synth_args.num_fg, "number of foregrounds");
  synth->add_option("--bgs-per-fg", synth_args.bgs_per_fg, "backgrounds per foreground");
  synth->add_option("--size", synth_args.size, "square raster size");
  synth->add_option("--kernel-min", synth_args.kernel_min, "smallest trimap kernel (odd)");
  synth->add_option("--kernel-max", synth_args.kernel_max, "largest trimap kernel (odd)");
  synth->add_option("--kinds", synth_args.kinds, "comma list of foreground kinds");

  TrimapArgs trimap_args;
  auto* trimap_cmd = app.add_subcommand("trimap", "generate a trimap from an alpha PNG");
  trimap_cmd->add_option("--alpha", trimap_args.alpha, "ground-truth alpha PNG")->required();
  trimap_cmd->add_option("--out", trimap_args.out, "output trimap PNG")->required();
  trimap_cmd->add_option("--method", trimap_args.method, "morphology|distance");
  trimap_cmd->add_option("--kernel", trimap_args.kernel, "erosion kernel (odd, 3..25)");
  trimap_cmd->add_option("--radius", trimap_args.radius, "distance radius");

  DgmMapArgs dgm_args;
  auto* dgm_cmd = app.add_subcommand("dgm-map", "export a response-map heatmap PNG");
  dgm_cmd->add_option("--alpha", dgm_args.alpha, "ground-truth alpha PNG")->required();
  dgm_cmd->add_option("--out", dgm_args.out, "output heatmap PNG")->required();
  dgm_cmd->add_option("--sigma2", dgm_args.sigma2, "Gaussian variance");
  dgm_cmd->add_option("--mu", dgm_args.mu, "Gaussian mean");
  dgm_cmd->add_option("--normalize", dgm_args.normalize, "raw_pdf|peak_one");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "run the training loop");
  train_cmd->add_option("--config", train_args.config, "config file");
  train_cmd->add_option("--seed", train_args.seed, "run seed")->required();
  train_cmd->add_option("--out", train_args.out, "run directory (overrides config)");
  train_cmd->add_option("--set", train_args.overrides, "config override key=value")
      ->take_all();
  train_cmd->add_option("--resume", train_args.resume, "checkpoint to resume from");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "score predictions against a manifest");
  eval_cmd->add_option("--manifest", eval_args.manifest, "dataset manifest.json")->required();
  eval_cmd->add_option("--pred", eval_args.pred, "directory of prediction PNGs")->required();
  eval_cmd->add_option("--out", eval_args.out, "per-image CSV path");
  eval_cmd->add_option("--grad-sigma", eval_args.grad_sigma, "gradient metric scale");
  eval_cmd->add_option("--conn-step", eval_args.conn_step, "connectivity threshold step");
  eval_cmd->add_option("--conn-theta", eval_args.conn_theta, "connectivity penalty cutoff");

  InferArgs infer_args;
  auto* infer_cmd = app.add_subcommand("infer", "predict an alpha matte");
  infer_cmd->add_option("--checkpoint", infer_args.checkpoint, "parameter checkpoint")->required();
  infer_cmd->add_option("--image", infer_args.image, "input RGB PNG")->required();
  infer_cmd->add_option("--trimap", infer_args.trimap, "input trimap PNG")->required();
  infer_cmd->add_option("--out", infer_args.out, "output alpha PNG")->required();

  AblateArgs ablate_args;
  auto* ablate_cmd = app.add_subcommand("ablate", "run an ablation table");
  ablate_cmd->add_option("--config", ablate_args.config, "base config file");
  ablate_cmd->add_option("--out", ablate_args.out, "output directory");
  ablate_cmd->add_option("--suite", ablate_args.suite, "loss|modules|both|custom");
  ablate_cmd->add_option("--seeds", ablate_args.seeds, "comma list of seeds");
  ablate_cmd->add_option("--variant", ablate_args.custom, "custom variant name:key=v;key=v")
      ->take_all();

  double gradcheck_eps = 1e-4;
  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  gradcheck_cmd->add_option("--epsilon", gradcheck_eps, "central difference step");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed()) return cmd_synth(synth_args);
    if (trimap_cmd->parsed()) return cmd_trimap(trimap_args);
    if (dgm_cmd->parsed()) return cmd_dgm_map(dgm_args);
    if (train_cmd->parsed()) return cmd_train(train_args);
    if (eval_cmd->parsed()) return cmd_eval(eval_args);
    if (infer_cmd->parsed()) return cmd_infer(infer_args);
    if (ablate_cmd->parsed()) return cmd_ablate(ablate_args);
    if (gradcheck_cmd->parsed()) return cmd_gradcheck(gradcheck_eps);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
