#include "mattekit/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "mattekit/losses.hpp"
#include "mattekit/png_io.hpp"
#include "mattekit/rng.hpp"

namespace fs = std::filesystem;

namespace mattekit {

namespace {

constexpr uint64_t kTagInit = 0x1717;
constexpr uint64_t kTagOrder = 0x02d3;
constexpr uint64_t kTagAugment = 0xa001;
constexpr uint64_t kTagData = 0xd474;

std::vector<double> image_planar(const Image& img) {
  std::vector<double> out(img.pixels.size());
  const int64_t hw = static_cast<int64_t>(img.height) * img.width;
  for (int c = 0; c < 3; ++c)
    for (int64_t i = 0; i < hw; ++i)
      out[static_cast<size_t>(c * hw + i)] = img.pixels[static_cast<size_t>(i * 3 + c)];
  return out;
}

Image apply_geometry(const Image& src, const AugmentResult& geo, int resolution) {
  Image out = crop(src, geo.y0, geo.x0, geo.crop_size, geo.crop_size);
  if (geo.crop_size != resolution) out = resize_bilinear(out, resolution, resolution);
  if (geo.flipped) out = flip_horizontal(out);
  return out;
}

struct BatchTensors {
  Tensor rgb, trimap_ch, alpha_g, mask, response;
  Tensor fg, bg, comp;  // defined only for the compositing loss
};

Tensor dispatch_loss(Tape& tape, const LossConfig& lc, const Tensor& alpha_out,
                     const BatchTensors& b) {
  switch (lc.kind) {
    case LossKind::GaussianL1Dynamic:
    case LossKind::GaussianL1Static:
      return weighted_alpha_loss(tape, alpha_out, b.alpha_g, b.response, b.mask, lc.epsilon_comp);
    case LossKind::PlainL1:
      return plain_l1_loss(tape, alpha_out, b.alpha_g, b.mask, lc.epsilon_comp);
    case LossKind::CompPlusAlpha:
      return comp_plus_alpha_loss(tape, alpha_out, b.alpha_g, b.fg, b.bg, b.comp, b.mask,
                                  lc.epsilon_comp);
    case LossKind::L1L2Hybrid:
      return l1_l2_hybrid_loss(tape, alpha_out, b.alpha_g, b.mask, lc.hybrid_exclusive,
                               lc.epsilon_comp);
  }
  throw ConfigError("unhandled loss kind");
}

void create_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw IoError("cannot create directory " + p.string());
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

LoadedDataset load_dataset(const DatasetManifest& manifest) {
  LoadedDataset data;
  data.manifest = manifest;
  data.entries.resize(manifest.entries.size());
  parallel_for(static_cast<int64_t>(manifest.entries.size()), [&](int64_t i) {
    const ManifestEntry& e = manifest.entries[static_cast<size_t>(i)];
    LoadedEntry& le = data.entries[static_cast<size_t>(i)];
    le.id = fs::path(e.alpha_path).stem().string();
    le.fg = read_png_rgb(manifest.resolve(e.foreground_path));
    le.bg = read_png_rgb(manifest.resolve(e.background_path));
    le.alpha = read_png_gray(manifest.resolve(e.alpha_path));
    le.trimap = read_trimap_png(manifest.resolve(e.trimap_path));
    le.composite = composite(le.fg, le.bg, le.alpha);
  });
  return data;
}

AlphaMatte infer(const MattingNet& net, const Image& image, const Trimap& trimap) {
  if (image.height != trimap.height || image.width != trimap.width)
    throw ConfigError("infer: image and trimap sizes differ");
  Tape tape;
  Tensor rgb = Tensor::from_vector({1, 3, image.height, image.width}, image_planar(image));
  Tensor tch = Tensor::from_vector({1, 1, image.height, image.width}, encode_channel(trimap));
  NetForward fw = net.forward(tape, rgb, tch, /*with_grad=*/false);
  AlphaMatte out(image.height, image.width);
  out.values = fw.alpha_refined.values();
  return out;
}

double mean_unknown_sad(const MattingNet& net, const LoadedDataset& data) {
  if (data.entries.empty()) return 0.0;
  std::vector<double> per_entry(data.entries.size(), 0.0);
  parallel_for(static_cast<int64_t>(data.entries.size()), [&](int64_t i) {
    const LoadedEntry& e = data.entries[static_cast<size_t>(i)];
    const AlphaMatte pred = infer(net, e.composite, e.trimap);
    per_entry[static_cast<size_t>(i)] = sad(pred, e.alpha, unknown_mask(e.trimap));
  });
  return std::accumulate(per_entry.begin(), per_entry.end(), 0.0) /
         static_cast<double>(per_entry.size());
}

TrainSummary train(const ExperimentConfig& cfg_in, const std::string& resume_checkpoint) {
  ExperimentConfig cfg = cfg_in;
  cfg.validate();
  const auto wall_start = std::chrono::steady_clock::now();

  const fs::path run_dir(cfg.train.out_dir);
  create_dir(run_dir);
  create_dir(run_dir / "checkpoints");
  create_dir(run_dir / "csv");
  create_dir(run_dir / "preds");

  DatasetManifest manifest;
  if (cfg.dataset.manifest.empty()) {
    SynthesisConfig syn;
    syn.num_fg = cfg.dataset.num_fg;
    syn.bgs_per_fg = cfg.dataset.bgs_per_fg;
    syn.size = cfg.dataset.size;
    syn.trimap_kernel_min = cfg.dataset.trimap_kernel_min;
    syn.trimap_kernel_max = cfg.dataset.trimap_kernel_max;
    manifest = synthesize_dataset(syn, (run_dir / "data").string(),
                                  derive_seed(cfg.train.seed, kTagData));
    cfg.dataset.manifest = (run_dir / "data" / "manifest.json").string();
  } else {
    manifest = load_manifest(cfg.dataset.manifest);
  }
  {
    std::ofstream snap(run_dir / "config.snapshot");
    if (!snap) throw IoError("cannot write " + (run_dir / "config.snapshot").string());
    snap << dump_config(cfg);
  }

  LoadedDataset data = load_dataset(manifest);
  const int n_entries = static_cast<int>(data.entries.size());
  if (n_entries == 0) throw ConfigError("train: dataset is empty");

  const int batch = cfg.train.batch_size;
  const int64_t iters_per_epoch = (n_entries + batch - 1) / batch;
  const int64_t total_iters = iters_per_epoch * cfg.train.epochs;

  MattingNet net(cfg.net, derive_seed(cfg.train.seed, kTagInit));
  Adam adam({cfg.optimizer.beta1, cfg.optimizer.beta2, cfg.optimizer.eps}, net.params());

  int64_t start_iter = 0;
  if (!resume_checkpoint.empty()) {
    Checkpoint ck = load_checkpoint(resume_checkpoint);
    if (!ck.state) throw ConfigError("checkpoint carries no training state: " + resume_checkpoint);
    for (Parameter& p : net.params()) {
      const Parameter* src = ck.find(p.name);
      if (!src || src->shape != p.shape)
        throw ConfigError("checkpoint does not match the configured network at '" + p.name + "'");
      p.value = src->value;
    }
    std::vector<std::vector<double>> m, v;
    for (const Parameter& p : net.params()) {
      const Parameter* pm = ck.find("adam.m." + p.name);
      const Parameter* pv = ck.find("adam.v." + p.name);
      if (!pm || !pv)
        throw ConfigError("checkpoint is missing optimizer moments for '" + p.name + "'");
      m.push_back(pm->value);
      v.push_back(pv->value);
    }
    adam.restore(ck.state->adam_t, std::move(m), std::move(v));
    start_iter = ck.state->iteration;
  }

  const fs::path csv_path = run_dir / "csv" / "loss.csv";
  const bool csv_fresh = !fs::exists(csv_path) || fs::file_size(csv_path) == 0;
  std::ofstream csv(csv_path, start_iter == 0 ? std::ios::trunc : std::ios::app);
  if (!csv) throw IoError("cannot write " + csv_path.string());
  if (start_iter == 0 || csv_fresh) csv << "iteration,epoch,lr,sigma2,loss,loss_prelim,loss_refined\n";

  TrainSummary summary;
  summary.run_dir = run_dir.string();
  summary.total_iterations = total_iters;
  summary.sad_initial = mean_unknown_sad(net, data);

  AugmentConfig aug_cfg;
  aug_cfg.crop_sizes = cfg.train.crop_sizes;
  aug_cfg.resolution = cfg.train.resolution;

  const bool need_comp = cfg.loss.kind == LossKind::CompPlusAlpha;
  const bool gaussian_kind =
      cfg.loss.kind == LossKind::GaussianL1Dynamic || cfg.loss.kind == LossKind::GaussianL1Static;
  const int res = cfg.train.resolution;
  const int64_t hw = static_cast<int64_t>(res) * res;
  bool warned_empty_mask = false;

  auto save_ckpt = [&](int completed_epoch, int64_t next_iter) {
    Checkpoint ck;
    ck.net_config = cfg.net;
    ck.tensors = net.params();
    for (size_t pi = 0; pi < net.params().size(); ++pi) {
      Parameter pm;
      pm.name = "adam.m." + net.params()[pi].name;
      pm.shape = net.params()[pi].shape;
      pm.value = adam.m()[pi];
      ck.tensors.push_back(std::move(pm));
      Parameter pv;
      pv.name = "adam.v." + net.params()[pi].name;
      pv.shape = net.params()[pi].shape;
      pv.value = adam.v()[pi];
      ck.tensors.push_back(std::move(pv));
    }
    CheckpointState st;
    st.iteration = next_iter;
    st.epoch = completed_epoch;
    st.adam_t = adam.t();
    st.sigma2_current = sigma2_at(next_iter, cfg.dgm);
    ck.state = st;
    char name[32];
    std::snprintf(name, sizeof(name), "epoch_%04d.ckpt", completed_epoch);
    save_checkpoint((run_dir / "checkpoints" / name).string(), ck);
  };

  for (int64_t t = start_iter; t < total_iters; ++t) {
    const int epoch = static_cast<int>(t / iters_per_epoch);
    double lr = cfg.optimizer.lr_init;
    for (const auto& [drop_epoch, drop_lr] : cfg.optimizer.lr_drops)
      if (epoch >= drop_epoch) lr = drop_lr;
    const double sigma2 = sigma2_at(t, cfg.dgm);
    const double sigma2_used = cfg.loss.kind == LossKind::GaussianL1Static
                                   ? cfg.dgm.sigma2_init
                                   : sigma2;

    std::vector<int> perm(static_cast<size_t>(n_entries));
    std::iota(perm.begin(), perm.end(), 0);
    Rng order_rng(derive_seed(cfg.train.seed, kTagOrder, static_cast<uint64_t>(epoch)));
    order_rng.shuffle(perm);

    std::vector<double> rgb_buf, tch_buf, alpha_buf, mask_buf, resp_buf, fg_buf, bg_buf, comp_buf;
    rgb_buf.reserve(static_cast<size_t>(batch) * 3 * hw);
    for (int s = 0; s < batch; ++s) {
      const int64_t pos = ((t % iters_per_epoch) * batch + s) % n_entries;
      const LoadedEntry& entry = data.entries[static_cast<size_t>(perm[static_cast<size_t>(pos)])];
      const uint64_t aug_seed =
          derive_seed(cfg.train.seed, kTagAugment, static_cast<uint64_t>(t) * batch + s);
      AugmentResult aug = augment(entry.composite, entry.alpha, entry.trimap, aug_seed, aug_cfg);
      if (aug.fallback_uniform && !warned_empty_mask) {
        warned_empty_mask = true;
        warn("augment fell back to a uniform crop (no Unknown pixels) at iteration " +
             std::to_string(t));
      }
      const Image afg = apply_geometry(entry.fg, aug, res);
      const Image abg = apply_geometry(entry.bg, aug, res);
      const Image acomp = composite(afg, abg, aug.alpha);  // keeps the batch Eq-1 consistent

      const auto planar = image_planar(acomp);
      rgb_buf.insert(rgb_buf.end(), planar.begin(), planar.end());
      const auto tch = encode_channel(aug.trimap);
      tch_buf.insert(tch_buf.end(), tch.begin(), tch.end());
      alpha_buf.insert(alpha_buf.end(), aug.alpha.values.begin(), aug.alpha.values.end());
      if (cfg.loss.region == LossRegion::UnknownOnly) {
        const auto m = unknown_mask(aug.trimap);
        mask_buf.insert(mask_buf.end(), m.begin(), m.end());
      } else {
        mask_buf.insert(mask_buf.end(), static_cast<size_t>(hw), 1.0);
      }
      for (double a : aug.alpha.values)
        resp_buf.push_back(gaussian_kind
                               ? gaussian_response(a, cfg.dgm.mu, sigma2_used, cfg.dgm.normalize)
                               : 1.0);
      if (need_comp) {
        const auto pf = image_planar(afg), pb = image_planar(abg);
        fg_buf.insert(fg_buf.end(), pf.begin(), pf.end());
        bg_buf.insert(bg_buf.end(), pb.begin(), pb.end());
        comp_buf.insert(comp_buf.end(), planar.begin(), planar.end());
      }
    }

    BatchTensors bt;
    bt.rgb = Tensor::from_vector({batch, 3, res, res}, std::move(rgb_buf));
    bt.trimap_ch = Tensor::from_vector({batch, 1, res, res}, std::move(tch_buf));
    bt.alpha_g = Tensor::from_vector({batch, 1, res, res}, std::move(alpha_buf));
    bt.mask = Tensor::from_vector({batch, 1, res, res}, std::move(mask_buf));
    bt.response = Tensor::from_vector({batch, 1, res, res}, std::move(resp_buf));
    if (need_comp) {
      bt.fg = Tensor::from_vector({batch, 3, res, res}, std::move(fg_buf));
      bt.bg = Tensor::from_vector({batch, 3, res, res}, std::move(bg_buf));
      bt.comp = Tensor::from_vector({batch, 3, res, res}, std::move(comp_buf));
    }

    Tape tape;
    NetForward fw = net.forward(tape, bt.rgb, bt.trimap_ch, /*with_grad=*/true);
    Tensor loss_pre = dispatch_loss(tape, cfg.loss, fw.alpha_prelim, bt);
    Tensor loss_ref = dispatch_loss(tape, cfg.loss, fw.alpha_refined, bt);
    Tensor loss = cfg.train.dual_supervision ? scale(tape, add(tape, loss_pre, loss_ref), 0.5)
                                             : loss_ref;
    if (!std::isfinite(loss.values()[0]))
      throw NumericError("train: non-finite loss at iteration " + std::to_string(t));
    tape.backward(loss);

    std::vector<const std::vector<double>*> grads;
    grads.reserve(fw.bound_params.size());
    for (const Tensor& leaf : fw.bound_params) grads.push_back(&leaf.grad());
    adam.step(net.params(), grads, lr, "iteration " + std::to_string(t));

    char line[256];
    std::snprintf(line, sizeof(line), "%lld,%d,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  static_cast<long long>(t), epoch, lr, sigma2, loss.values()[0],
                  loss_pre.values()[0], loss_ref.values()[0]);
    csv << line;

    const bool epoch_end = (t + 1) % iters_per_epoch == 0;
    const bool last = t + 1 == total_iters;
    if ((epoch_end && (epoch + 1) % cfg.train.checkpoint_every == 0) || last)
      save_ckpt(epoch + 1, t + 1);
  }
  csv.flush();

  summary.sad_final = mean_unknown_sad(net, data);

  parallel_for(static_cast<int64_t>(data.entries.size()), [&](int64_t i) {
    const LoadedEntry& e = data.entries[static_cast<size_t>(i)];
    const AlphaMatte pred = infer(net, e.composite, e.trimap);
    const fs::path name = fs::path(manifest.entries[static_cast<size_t>(i)].alpha_path).filename();
    write_png_gray((run_dir / "preds" / name).string(), pred);
  });
  const EvalResult ev = evaluate(manifest, (run_dir / "preds").string());
  write_eval_csv(ev, (run_dir / "metrics.csv").string());
  summary.final_metrics = ev.aggregate;

  summary.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return summary;
}

std::vector<AblateVariant> default_loss_variants() {
  return {{"plain_l1", {"loss.kind=plain_l1"}},
          {"l1_l2_hybrid", {"loss.kind=l1_l2_hybrid"}},
          {"comp_plus_alpha", {"loss.kind=comp_plus_alpha"}},
          {"gaussian_l1_static", {"loss.kind=gaussian_l1_static"}},
          {"gaussian_l1_dynamic", {"loss.kind=gaussian_l1_dynamic"}}};
}

std::vector<AblateVariant> default_module_variants() {
  return {{"full", {}},
          {"no_ia", {"net.use_ia=false"}},
          {"no_msr", {"net.use_msr=false"}}};
}

AblateResult ablate(const ExperimentConfig& base_in, const std::vector<AblateVariant>& variants,
                    const std::vector<uint64_t>& seeds, const std::string& out_dir) {
  if (variants.empty() || seeds.empty())
    throw ConfigError("ablate: needs at least one variant and one seed");
  for (const AblateVariant& v : variants)
    for (const std::string& o : v.overrides)
      if (o.rfind("loss.", 0) != 0 && o.rfind("net.", 0) != 0)
        throw ConfigError("ablate: overrides may only touch loss.* or net.* keys, got '" + o + "'");

  ExperimentConfig base = base_in;
  create_dir(out_dir);
  if (base.dataset.manifest.empty()) {
    SynthesisConfig syn;
    syn.num_fg = base.dataset.num_fg;
    syn.bgs_per_fg = base.dataset.bgs_per_fg;
    syn.size = base.dataset.size;
    syn.trimap_kernel_min = base.dataset.trimap_kernel_min;
    syn.trimap_kernel_max = base.dataset.trimap_kernel_max;
    synthesize_dataset(syn, (fs::path(out_dir) / "data").string(),
                       derive_seed(base.train.seed, kTagData));
    base.dataset.manifest = (fs::path(out_dir) / "data" / "manifest.json").string();
  }

  AblateResult result;
  const int64_t total = static_cast<int64_t>(variants.size() * seeds.size());
  result.runs.resize(static_cast<size_t>(total));
  parallel_for(total, [&](int64_t i) {
    const AblateVariant& variant = variants[static_cast<size_t>(i) / seeds.size()];
    const uint64_t seed = seeds[static_cast<size_t>(i) % seeds.size()];
    AblateRun& run = result.runs[static_cast<size_t>(i)];
    run.variant = variant.name;
    run.seed = seed;
    try {
      ExperimentConfig cfg = base;
      for (const std::string& o : variant.overrides) apply_override(cfg, o);
      cfg.train.seed = seed;
      cfg.train.out_dir =
          (fs::path(out_dir) / (variant.name + "_seed" + std::to_string(seed))).string();
      const TrainSummary s = train(cfg);
      run.sad_initial = s.sad_initial;
      run.sad_final = s.sad_final;
      run.metrics = s.final_metrics;
    } catch (const std::exception& e) {
      run.failed = true;
      run.error = e.what();
    }
  });

  {
    std::ofstream csv(fs::path(out_dir) / "ablation.csv");
    if (!csv) throw IoError("cannot write " + (fs::path(out_dir) / "ablation.csv").string());
    csv << "variant,seed,failed,sad_initial,sad_final,sad,mse,grad,conn\n";
    char line[320];
    for (const AblateRun& r : result.runs) {
      std::snprintf(line, sizeof(line), "%s,%llu,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                    r.variant.c_str(), static_cast<unsigned long long>(r.seed), r.failed ? 1 : 0,
                    r.sad_initial, r.sad_final, r.metrics.sad, r.metrics.mse, r.metrics.grad,
                    r.metrics.conn);
      csv << line;
    }
  }

  char line[256];
  std::snprintf(line, sizeof(line), "%-22s %10s %10s %10s %10s\n", "variant", "SAD", "MSE", "Grad",
                "Conn");
  result.table = line;
  for (const AblateVariant& v : variants) {
    std::vector<double> sads, mses, grads, conns;
    int failed = 0;
    for (const AblateRun& r : result.runs) {
      if (r.variant != v.name) continue;
      if (r.failed) {
        ++failed;
        continue;
      }
      sads.push_back(r.metrics.sad);
      mses.push_back(r.metrics.mse);
      grads.push_back(r.metrics.grad);
      conns.push_back(r.metrics.conn);
    }
    if (sads.empty()) {
      std::snprintf(line, sizeof(line), "%-22s %10s %10s %10s %10s\n", v.name.c_str(), "FAILED",
                    "FAILED", "FAILED", "FAILED");
    } else {
      std::snprintf(line, sizeof(line), "%-22s %10.4f %10.5f %10.4f %10.4f%s\n", v.name.c_str(),
                    median(sads), median(mses), median(grads), median(conns),
                    failed ? "  (some seeds failed)" : "");
    }
    result.table += line;
  }
  {
    std::ofstream txt(fs::path(out_dir) / "ablation.txt");
    txt << result.table;
  }
  return result;
}

}  // namespace mattekit
