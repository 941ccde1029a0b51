#include <cmath>
#include <cstdio>

#include "noisemap/errors.hpp"
#include "noisemap/surrogate.hpp"

namespace noisemap {

torch::Tensor to_tensor(const RgbImage& img) {
  const auto h = static_cast<std::int64_t>(img.height), w = static_cast<std::int64_t>(img.width);
  auto bytes = torch::from_blob(const_cast<std::uint8_t*>(img.data.data()), {h, w, 3}, torch::kUInt8);
  return bytes.permute({2, 0, 1}).to(torch::kFloat32).div(127.5).sub(1.0).contiguous();
}

RgbImage from_tensor(const torch::Tensor& t) {
  torch::Tensor x = t.detach().to(torch::kCPU);
  if (x.dim() == 4 && x.size(0) == 1) x = x.squeeze(0);
  if (x.dim() != 3 || x.size(0) != 3) throw ModelError("from_tensor expects [3,H,W]");
  x = x.to(torch::kFloat32).add(1.0).mul(127.5).round().clamp(0.0, 255.0).to(torch::kUInt8);
  x = x.permute({1, 2, 0}).contiguous();
  RgbImage img;
  img.height = static_cast<std::size_t>(x.size(0));
  img.width = static_cast<std::size_t>(x.size(1));
  img.data.assign(x.data_ptr<std::uint8_t>(), x.data_ptr<std::uint8_t>() + x.numel());
  return img;
}

torch::Tensor augment_tensor(const torch::Tensor& t, bool flip, int quarter_turns) {
  torch::Tensor x = flip ? t.flip({-1}) : t;
  const int k = ((quarter_turns % 4) + 4) % 4;
  if (k != 0) x = torch::rot90(x, k, {-2, -1});
  return x.contiguous();
}

void check_train_config(const TrainConfig& cfg) {
  const auto fail = [](const std::string& what) { throw ConfigError("train config: " + what); };
  if (!(cfg.lambda_l1 >= 0.0) || !std::isfinite(cfg.lambda_l1)) fail("lambda_l1 must be finite and >= 0");
  if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate)) fail("learning_rate must be > 0");
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0)) fail("beta1 must be in [0, 1)");
  if (!(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) fail("beta2 must be in [0, 1)");
  if (cfg.batch_size < 1) fail("batch_size must be >= 1");
  if (cfg.epochs < 1) fail("epochs must be >= 1");
  if (cfg.image_size != 128 && cfg.image_size != 256) fail("image_size must be 128 or 256");
  if (cfg.checkpoint_every < 0) fail("checkpoint_every must be >= 0");
  if (cfg.threads < 0) fail("threads must be >= 0");
}

std::string trace_csv(const LossTrace& trace) {
  std::string out = "batch,d_loss,g_adv,g_l1\n";
  char line[128];
  for (const auto& r : trace.batches) {
    std::snprintf(line, sizeof(line), "%lld,%.9g,%.9g,%.9g\n", static_cast<long long>(r.batch), r.d_loss, r.g_adv,
                  r.g_l1);
    out += line;
  }
  return out;
}

std::string epochs_csv(const LossTrace& trace) {
  std::string out = "epoch,d_loss,g_adv,g_l1,val_l1,seconds\n";
  char line[160];
  for (const auto& e : trace.epochs) {
    std::snprintf(line, sizeof(line), "%d,%.9g,%.9g,%.9g,%.9g,%.3f\n", e.epoch, e.d_loss, e.g_adv, e.g_l1, e.val_l1,
                  e.seconds);
    out += line;
  }
  return out;
}

}  // namespace noisemap
