#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "noisemap/image.hpp"

namespace noisemap {

// ---------------------------------------------------------------------------
// Network specifications

struct GeneratorSpec {
  std::int64_t image_size = 256;
  std::int64_t in_channels = 3;
  std::int64_t out_channels = 3;
  /// Encoder stage widths, outermost first. Every stage halves the spatial
  /// size, so image_size must equal 2^widths.size().
  std::vector<std::int64_t> widths{64, 128, 256, 512, 512, 512, 512, 512};
  /// Dropout on this many decoder stages, starting next to the bottleneck.
  int dropout_stages = 3;
  double dropout = 0.5;

  /// Eight stages at 256 px; the innermost stage is dropped at 128 px.
  static GeneratorSpec for_image_size(std::int64_t px);
};

struct DiscriminatorSpec {
  std::int64_t in_channels = 6;
  /// The last width uses stride 1, the others stride 2; a 1-channel stride-1
  /// convolution follows. {64,128,256,512} gives a 70x70 receptive field.
  std::vector<std::int64_t> widths{64, 128, 256, 512};
};

/// Shapes seen during one generator forward pass.
struct StageTrace {
  std::vector<std::vector<std::int64_t>> encoder;  // output of each encoder stage
  std::vector<std::vector<std::int64_t>> decoder;  // output of each decoder stage, before concatenation
  std::vector<std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>>> skips;  // (decoder, encoder) pairs joined
};

// ---------------------------------------------------------------------------
// Networks

/// U-Net: 4x4 stride-2 convolutions down to 1x1, mirrored transposed
/// convolutions up, each decoder output concatenated with its encoder peer.
/// Output passes through tanh.
class UNetGeneratorImpl : public torch::nn::Module {
 public:
  explicit UNetGeneratorImpl(GeneratorSpec spec);

  /// x: [N, in_channels, S, S] in [-1, 1]. Throws ModelError on shape mismatch.
  torch::Tensor forward(const torch::Tensor& x, StageTrace* trace = nullptr);

  const GeneratorSpec& spec() const { return spec_; }

 private:
  struct Stage {
    torch::nn::Conv2d conv{nullptr};
    torch::nn::ConvTranspose2d deconv{nullptr};
    torch::nn::InstanceNorm2d norm{nullptr};
  };

  GeneratorSpec spec_;
  std::vector<Stage> down_;
  std::vector<Stage> up_;
};
TORCH_MODULE(UNetGenerator);

/// PatchGAN: scores overlapping patches of the (condition, image) pair.
class PatchDiscriminatorImpl : public torch::nn::Module {
 public:
  explicit PatchDiscriminatorImpl(DiscriminatorSpec spec);

  /// Returns a [N, 1, H', W'] logit map. Throws ModelError on shape mismatch.
  torch::Tensor forward(const torch::Tensor& condition, const torch::Tensor& image);

  const DiscriminatorSpec& spec() const { return spec_; }

 private:
  DiscriminatorSpec spec_;
  std::vector<torch::nn::Conv2d> convs_;
  std::vector<torch::nn::InstanceNorm2d> norms_;  // null where unused
};
TORCH_MODULE(PatchDiscriminator);

/// Normal(0, 0.02) convolution weights, Normal(1, 0.02) norm scales, zero biases.
void init_weights(torch::nn::Module& module);

// ---------------------------------------------------------------------------
// Objectives

/// Mean binary cross-entropy of real patches against 1 and fake patches
/// against 0, averaged over the two terms.
torch::Tensor d_loss(const torch::Tensor& real_logits, const torch::Tensor& fake_logits);

struct GeneratorLoss {
  torch::Tensor total, adversarial, l1;
};

/// adversarial = BCE(fake logits vs 1) (non-saturating form),
/// l1 = mean |y_true - y_pred|, total = adversarial + lambda * l1.
GeneratorLoss g_loss(const torch::Tensor& fake_logits, const torch::Tensor& y_pred, const torch::Tensor& y_true,
                     double lambda_l1);

// ---------------------------------------------------------------------------
// Image <-> tensor

/// [3, H, W] float tensor, v / 127.5 - 1.
torch::Tensor to_tensor(const RgbImage& img);
/// Inverse of to_tensor with rounding and clamping; accepts [3,H,W] or [1,3,H,W].
RgbImage from_tensor(const torch::Tensor& t);

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  double lambda_l1 = 100.0;
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  std::int64_t batch_size = 1;
  int epochs = 1;
  std::uint64_t seed = 0;
  std::int64_t image_size = 256;
  bool augment = true;
  /// Save last.ckpt every this many epochs (and best.ckpt on improvement).
  int checkpoint_every = 1;
  /// 0 leaves torch's default; deterministic runs use 1.
  int threads = 1;
  std::filesystem::path out_dir;
};

/// Throws ConfigError on out-of-range fields.
void check_train_config(const TrainConfig& cfg);

struct LossRecord {
  std::int64_t batch = 0;
  double d_loss = 0.0;
  double g_adv = 0.0;
  double g_l1 = 0.0;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double d_loss = 0.0;
  double g_adv = 0.0;
  double g_l1 = 0.0;
  double val_l1 = 0.0;  // NaN without a validation split
  double seconds = 0.0;
};

struct LossTrace {
  std::vector<LossRecord> batches;
  std::vector<EpochRecord> epochs;
};

/// "batch,d_loss,g_adv,g_l1" with one row per batch.
std::string trace_csv(const LossTrace& trace);
std::string epochs_csv(const LossTrace& trace);

class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, LossTrace trace) : std::runtime_error(what), trace_(std::move(trace)) {}
  const LossTrace& trace() const noexcept { return trace_; }

 private:
  LossTrace trace_;
};

struct ImagePair {
  std::string id;
  torch::Tensor plan;   // [3, S, S] in [-1, 1]
  torch::Tensor noise;  // [3, S, S] in [-1, 1]
};

/// Trained (or freshly initialised) generator/discriminator pair with its
/// configuration and loss history.
struct Surrogate {
  GeneratorSpec generator_spec;
  DiscriminatorSpec discriminator_spec;
  TrainConfig config;
  int epoch = 0;
  LossTrace trace;
  UNetGenerator generator{nullptr};
  PatchDiscriminator discriminator{nullptr};

  /// Builds and initialises both networks from `config.seed`.
  static Surrogate create(const TrainConfig& config);
  std::int64_t image_size() const { return generator_spec.image_size; }
};

struct TrainHooks {
  std::function<void(const EpochRecord&)> on_epoch;
};

/// Alternates one discriminator and one generator Adam step per batch.
/// Throws InputError for an empty/mismatched dataset and TrainingError on a
/// non-finite loss.
Surrogate train(const std::vector<ImagePair>& train_set, const std::vector<ImagePair>& val_set,
                const TrainConfig& cfg, const TrainHooks& hooks = {});

/// Mean |y - G(x)| over the set with dropout off.
double validation_l1(Surrogate& model, const std::vector<ImagePair>& set);

/// Applies flip (when `flip`) then `quarter_turns` counter-clockwise turns.
torch::Tensor augment_tensor(const torch::Tensor& t, bool flip, int quarter_turns);

// ---------------------------------------------------------------------------
// Checkpoints

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Single-file container: magic, version, JSON header, named float32 blobs.
void save_checkpoint(const Surrogate& model, const std::filesystem::path& path);
/// Refuses unknown magic or versions with IoError.
Surrogate load_checkpoint(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Inference

/// Generator in inference mode (dropout off), denormalised to 8-bit RGB.
/// Throws InputError if the plan size differs from the model's image size.
RgbImage predict(Surrogate& model, const RgbImage& plan);

}  // namespace noisemap
