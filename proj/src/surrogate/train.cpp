#include <chrono>
#include <cmath>
#include <numeric>

#include "noisemap/errors.hpp"
#include "noisemap/rng.hpp"
#include "noisemap/surrogate.hpp"

namespace noisemap {

Surrogate Surrogate::create(const TrainConfig& config) {
  check_train_config(config);
  Surrogate m;
  m.config = config;
  m.generator_spec = GeneratorSpec::for_image_size(config.image_size);
  torch::manual_seed(config.seed);
  m.generator = UNetGenerator(m.generator_spec);
  m.discriminator = PatchDiscriminator(m.discriminator_spec);
  init_weights(*m.generator);
  init_weights(*m.discriminator);
  return m;
}

namespace {

void check_pairs(const std::vector<ImagePair>& set, std::int64_t size, const char* which) {
  for (const auto& p : set) {
    for (const auto* t : {&p.plan, &p.noise}) {
      if (!t->defined() || t->dim() != 3 || t->size(0) != 3 || t->size(1) != size || t->size(2) != size) {
        throw InputError(std::string(which) + " pair " + p.id + " does not match image size " +
                         std::to_string(size));
      }
    }
  }
}

void write_traces(const Surrogate& m, const std::filesystem::path& dir) {
  write_file_atomic(dir / "loss_trace.csv", trace_csv(m.trace));
  write_file_atomic(dir / "epochs.csv", epochs_csv(m.trace));
}

}  // namespace

double validation_l1(Surrogate& model, const std::vector<ImagePair>& set) {
  if (set.empty()) return std::nan("");
  const bool was_training = model.generator->is_training();
  model.generator->eval();
  torch::NoGradGuard no_grad;
  double sum = 0.0;
  for (const auto& p : set) {
    const auto pred = model.generator->forward(p.plan.unsqueeze(0));
    sum += (p.noise.unsqueeze(0) - pred).abs().mean().item<double>();
  }
  if (was_training) model.generator->train();
  return sum / static_cast<double>(set.size());
}

Surrogate train(const std::vector<ImagePair>& train_set, const std::vector<ImagePair>& val_set,
                const TrainConfig& cfg, const TrainHooks& hooks) {
  check_train_config(cfg);
  if (train_set.size() < 2) throw InputError("training needs at least two pairs");
  check_pairs(train_set, cfg.image_size, "training");
  check_pairs(val_set, cfg.image_size, "validation");
  if (cfg.threads > 0) torch::set_num_threads(cfg.threads);

  Surrogate m = Surrogate::create(cfg);
  const auto adam = torch::optim::AdamOptions(cfg.learning_rate).betas({cfg.beta1, cfg.beta2});
  torch::optim::Adam opt_g(m.generator->parameters(), adam);
  torch::optim::Adam opt_d(m.discriminator->parameters(), adam);
  m.generator->train();
  m.discriminator->train();

  Rng rng(mix_seed(cfg.seed, 1));
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  std::int64_t batch_index = 0;
  double best = std::numeric_limits<double>::infinity();
  if (!cfg.out_dir.empty()) std::filesystem::create_directories(cfg.out_dir);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    rng.shuffle(std::span<std::size_t>(order));
    EpochRecord rec;
    rec.epoch = epoch;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      std::vector<torch::Tensor> xs, ys;
      for (std::size_t i = start; i < end; ++i) {
        const auto& p = train_set[order[i]];
        bool flip = false;
        int turns = 0;
        if (cfg.augment) {
          flip = rng.bernoulli(0.5);
          turns = static_cast<int>(rng.uniform_int(0, 3));
        }
        xs.push_back(augment_tensor(p.plan, flip, turns));
        ys.push_back(augment_tensor(p.noise, flip, turns));
      }
      const auto x = torch::stack(xs), y = torch::stack(ys);

      const auto fake = m.generator->forward(x);
      const auto ld = d_loss(m.discriminator->forward(x, y), m.discriminator->forward(x, fake.detach()));
      opt_d.zero_grad();
      ld.backward();
      opt_d.step();

      const auto lg = g_loss(m.discriminator->forward(x, fake), fake, y, cfg.lambda_l1);
      opt_g.zero_grad();
      lg.total.backward();
      opt_g.step();

      LossRecord r{batch_index++, ld.item<double>(), lg.adversarial.item<double>(), lg.l1.item<double>()};
      m.trace.batches.push_back(r);
      if (!std::isfinite(r.d_loss) || !std::isfinite(r.g_adv) || !std::isfinite(r.g_l1)) {
        throw TrainingError("non-finite loss at batch " + std::to_string(r.batch), m.trace);
      }
      rec.d_loss += r.d_loss;
      rec.g_adv += r.g_adv;
      rec.g_l1 += r.g_l1;
      ++batches;
    }
    rec.d_loss /= static_cast<double>(batches);
    rec.g_adv /= static_cast<double>(batches);
    rec.g_l1 /= static_cast<double>(batches);
    rec.val_l1 = validation_l1(m, val_set);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    m.trace.epochs.push_back(rec);
    m.epoch = epoch;

    if (!cfg.out_dir.empty()) {
      const double score = std::isfinite(rec.val_l1) ? rec.val_l1 : rec.g_l1;
      if (score < best) {
        best = score;
        save_checkpoint(m, cfg.out_dir / "best.ckpt");
      }
      if (epoch == cfg.epochs || (cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0)) {
        save_checkpoint(m, cfg.out_dir / "last.ckpt");
      }
      write_traces(m, cfg.out_dir);
    }
    if (hooks.on_epoch) hooks.on_epoch(rec);
  }
  return m;
}

}  // namespace noisemap
