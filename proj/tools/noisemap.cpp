// noisemap: dataset generation, training, evaluation, prediction and the HTTP service.
#include <csignal>
#include <cstdio>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "noisemap/errors.hpp"
#include "noisemap/harness.hpp"
#include "noisemap/raster.hpp"

namespace fs = std::filesystem;
using namespace noisemap;

namespace {

// Options shared by several subcommands; unset values fall back to the config file.
struct Flags {
  fs::path config;
  std::optional<std::size_t> n, size;
  std::optional<std::uint64_t> seed;
  std::optional<double> ratio;
  std::optional<int> epochs, threads;
  std::optional<unsigned> workers;
  fs::path data, out, ckpt, scene;
};

JobConfig job_from(const Flags& f) {
  JobConfig cfg = f.config.empty() ? default_job_config() : load_job_config(f.config);
  if (f.n) cfg.n = *f.n;
  if (f.seed) {
    cfg.seed = *f.seed;
    cfg.train.seed = *f.seed;
  }
  if (f.ratio) cfg.split_ratio = *f.ratio;
  if (f.size) {
    cfg.image_size = *f.size;
    cfg.train.image_size = static_cast<std::int64_t>(*f.size);
  }
  if (f.epochs) cfg.train.epochs = *f.epochs;
  if (f.threads) cfg.train.threads = *f.threads;
  if (f.workers) cfg.workers = *f.workers;
  if (!f.data.empty()) cfg.data_root = f.data;
  return cfg;
}

std::string format_summary(const char* name, const Summary& s) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-8s mean %.4f  std %.4f  median %.4f  min %.4f  max %.4f", name, s.mean, s.stddev,
                s.median, s.min, s.max);
  return buf;
}

Service* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Traffic-noise map dataset builder, surrogate trainer and prediction service"};
  app.require_subcommand(1);
  Flags f;
  app.add_option("--config", f.config, "JSON job configuration; flags override it")->check(CLI::ExistingFile);

  auto* gen = app.add_subcommand("gen", "Generate scenes, simulate them and write the paired dataset");
  gen->add_option("--n", f.n, "Number of samples");
  gen->add_option("--seed", f.seed, "Base seed");
  gen->add_option("--size", f.size, "Image size (128 or 256)");
  gen->add_option("--ratio", f.ratio, "Training fraction");
  gen->add_option("--workers", f.workers, "Parallel samples (0 = all cores)");
  gen->add_option("--out", f.data, "Dataset root (default $NOISEMAP_DATA_ROOT or ./data)");

  auto* spl = app.add_subcommand("split", "Reassign the train/val split of an existing dataset");
  spl->add_option("--data", f.data, "Dataset root");
  spl->add_option("--ratio", f.ratio, "Training fraction")->required();
  spl->add_option("--seed", f.seed, "Shuffle seed")->required();

  auto* trn = app.add_subcommand("train", "Train the surrogate on a dataset");
  trn->add_option("--data", f.data, "Dataset root");
  trn->add_option("--epochs", f.epochs, "Epochs");
  trn->add_option("--size", f.size, "Image size; must match the dataset");
  trn->add_option("--seed", f.seed, "Training seed");
  trn->add_option("--threads", f.threads, "Torch threads (0 = library default)");
  trn->add_option("--out", f.out, "Run directory for checkpoints and loss traces")->required();

  auto* evl = app.add_subcommand("eval", "Score a checkpoint on the validation split");
  evl->add_option("--ckpt", f.ckpt, "Checkpoint file")->required()->check(CLI::ExistingFile);
  evl->add_option("--data", f.data, "Dataset root");
  evl->add_option("--out", f.out, "Report directory")->required();

  auto* prd = app.add_subcommand("predict", "Predict the noise map of a scene");
  prd->add_option("--ckpt", f.ckpt, "Checkpoint file")->required()->check(CLI::ExistingFile);
  prd->add_option("--scene", f.scene, "Scene JSON")->required()->check(CLI::ExistingFile);
  prd->add_option("--out", f.out, "Output PNG")->required();

  auto* sim = app.add_subcommand("simulate", "Run the acoustic simulator on a scene");
  sim->add_option("--scene", f.scene, "Scene JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--size", f.size, "Image size");
  sim->add_option("--out", f.out, "Output PNG")->required();
  fs::path grid_out;
  sim->add_option("--grid", grid_out, "Also write the raw level grid");

  auto* srv = app.add_subcommand("serve", "Serve predictions over HTTP");
  ServiceConfig scfg;
  srv->add_option("--ckpt", f.ckpt, "Checkpoint file")->required()->check(CLI::ExistingFile);
  srv->add_option("--port", scfg.port, "Port (0 = ephemeral)")->capture_default_str();
  srv->add_option("--host", scfg.host, "Bind address")->capture_default_str();
  srv->add_option("--static", scfg.static_dir, "Directory served at /");
  double budget_s = 10.0;
  srv->add_option("--budget", budget_s, "Simulation time budget, seconds")->capture_default_str();

  auto* cln = app.add_subcommand("clean", "Flag and remove sample files not backed by a manifest");
  bool dry_run = false;
  cln->add_option("--data", f.data, "Dataset root");
  cln->add_flag("--dry-run", dry_run, "Only list the files");

  auto* val = app.add_subcommand("validate", "Check a scene file and list violations");
  val->add_option("--scene", f.scene, "Scene JSON")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    JobConfig cfg = job_from(f);
    const fs::path root = resolve_data_root(cfg);

    if (*gen) {
      const auto m = build_dataset(cfg, root, [](std::size_t done, std::size_t total) {
        if (done % 10 == 0 || done == total) std::fprintf(stderr, "\r%zu/%zu", done, total);
      });
      std::fprintf(stderr, "\n");
      std::printf("%zu samples (%zu train, %zu val) in %s\nmanifest %s\n", m.entries.size(), m.count(Split::Train),
                  m.count(Split::Val), root.c_str(), manifest_hash(m).c_str());
    } else if (*spl) {
      auto m = split(read_manifest(root), *f.ratio, *f.seed);
      write_manifest(m, root);
      std::printf("%zu train, %zu val\n", m.count(Split::Train), m.count(Split::Val));
    } else if (*trn) {
      const auto m = read_manifest(root);
      if (!f.size) {
        cfg.image_size = m.image_size;
        cfg.train.image_size = static_cast<std::int64_t>(m.image_size);
      }
      cfg.train.out_dir = f.out;
      const auto train_set = load_pairs(m, root, Split::Train);
      const auto val_set = load_pairs(m, root, Split::Val);
      TrainHooks hooks;
      hooks.on_epoch = [](const EpochRecord& e) {
        std::printf("epoch %3d  d %.4f  g_adv %.4f  g_l1 %.4f  val_l1 %.4f  %.0fs\n", e.epoch, e.d_loss, e.g_adv,
                    e.g_l1, e.val_l1, e.seconds);
        std::fflush(stdout);
      };
      train(train_set, val_set, cfg.train, hooks);
      std::printf("checkpoints in %s\n", f.out.c_str());
    } else if (*evl) {
      Surrogate model = load_checkpoint(f.ckpt);
      EvaluationJob job;
      job.data_root = root;
      job.out_dir = f.out;
      job.propagation = cfg.propagation;
      const auto r = run_evaluation(model, job);
      std::printf("%zu samples\n%s\n%s\n%s\ntiming   simulate %.1f ms  predict %.1f ms\n", r.samples.size(),
                  format_summary("mse", r.mse).c_str(), format_summary("ssim", r.ssim).c_str(),
                  format_summary("db_mae", r.db_mae).c_str(), r.simulate_ms, r.predict_ms);
    } else if (*prd) {
      Surrogate model = load_checkpoint(f.ckpt);
      const CityScene scene = import_scene(read_file(f.scene));
      write_file_atomic(f.out, encode_png(predict_scene(model, scene)));
    } else if (*sim) {
      const CityScene scene = import_scene(read_file(f.scene));
      const NoiseGrid grid = simulate_grid(scene, cfg.propagation);
      if (!grid_out.empty()) write_grid(grid, grid_out);
      write_file_atomic(f.out, encode_png(encode_noise(fill_masked(grid), f.size.value_or(cfg.image_size))));
    } else if (*srv) {
      scfg.simulate_budget = std::chrono::milliseconds(static_cast<long long>(budget_s * 1000.0));
      scfg.propagation = cfg.propagation;
      Service service(load_checkpoint(f.ckpt), scfg);
      const int port = service.bind();
      std::printf("listening on http://%s:%d\n", scfg.host.c_str(), port);
      std::fflush(stdout);
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      service.run();
      g_service = nullptr;
    } else if (*cln) {
      const auto r = clean_dataset(root, dry_run);
      std::printf("%s; %zu file(s) %s\n", r.complete ? "manifest present" : "no manifest (incomplete build)",
                  r.flagged.size(), dry_run ? "flagged" : "removed");
      for (const auto& p : r.flagged) std::printf("  %s\n", p.c_str());
    } else if (*val) {
      CityScene scene;
      try {
        scene = parse_scene(read_file(f.scene));
      } catch (const ParseError& e) {
        std::printf("%s\n", e.what());
        return 1;
      }
      const auto violations = validate_scene(scene);
      for (const auto& v : violations) {
        std::printf("%s[%zu]: %s\n", std::string(to_string(v.kind)).c_str(), v.index, v.reason.c_str());
      }
      if (violations.empty()) std::printf("valid\n");
      return violations.empty() ? 0 : 1;
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: invalid scene\n";
    for (const auto& v : e.violations()) std::cerr << "  " << to_string(v.kind) << "[" << v.index << "]: " << v.reason << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
