#include <cmath>

#include "noisemap/errors.hpp"
#include "noisemap/surrogate.hpp"

namespace noisemap {

namespace nn = torch::nn;

GeneratorSpec GeneratorSpec::for_image_size(std::int64_t px) {
  GeneratorSpec spec;
  spec.image_size = px;
  if (px == 128) {
    spec.widths = {64, 128, 256, 512, 512, 512, 512};
  } else if (px != 256) {
    throw ConfigError("generator supports 128 or 256 px, got " + std::to_string(px));
  }
  return spec;
}

namespace {

nn::InstanceNorm2d instance_norm(std::int64_t channels) {
  return nn::InstanceNorm2d(nn::InstanceNorm2dOptions(channels).affine(true).track_running_stats(false));
}

std::string shape_str(const torch::Tensor& t) {
  std::string s = "[";
  for (std::int64_t i = 0; i < t.dim(); ++i) s += (i ? "," : "") + std::to_string(t.size(i));
  return s + "]";
}

}  // namespace

UNetGeneratorImpl::UNetGeneratorImpl(GeneratorSpec spec) : spec_(std::move(spec)) {
  const auto& w = spec_.widths;
  const std::size_t depth = w.size();
  if (depth < 2) throw ConfigError("generator needs at least two stages");
  if ((std::int64_t{1} << depth) != spec_.image_size) {
    throw ConfigError("generator: image_size must equal 2^stages");
  }

  // Encoder. No norm on the outermost stage, nor on the 1x1 bottleneck.
  for (std::size_t k = 0; k < depth; ++k) {
    const std::int64_t in = k == 0 ? spec_.in_channels : w[k - 1];
    const bool normed = k != 0 && k != depth - 1;
    Stage s;
    s.conv = register_module("down" + std::to_string(k),
                             nn::Conv2d(nn::Conv2dOptions(in, w[k], 4).stride(2).padding(1).bias(!normed)));
    if (normed) s.norm = register_module("down" + std::to_string(k) + "_norm", instance_norm(w[k]));
    down_.push_back(std::move(s));
  }

  // Decoder stage j consumes encoder stage `peer` (plus its skip for j > 0)
  // and produces the width of stage peer-1; the last stage emits the image.
  for (std::size_t j = 0; j < depth; ++j) {
    const std::size_t peer = depth - 1 - j;
    const std::int64_t in = j == 0 ? w[depth - 1] : 2 * w[peer];
    const bool last = j == depth - 1;
    const std::int64_t out = last ? spec_.out_channels : w[peer - 1];
    Stage s;
    s.deconv = register_module("up" + std::to_string(j),
                               nn::ConvTranspose2d(nn::ConvTranspose2dOptions(in, out, 4).stride(2).padding(1).bias(last)));
    if (!last) s.norm = register_module("up" + std::to_string(j) + "_norm", instance_norm(out));
    up_.push_back(std::move(s));
  }
}

torch::Tensor UNetGeneratorImpl::forward(const torch::Tensor& x, StageTrace* trace) {
  if (x.dim() != 4 || x.size(1) != spec_.in_channels || x.size(2) != spec_.image_size ||
      x.size(3) != spec_.image_size) {
    throw ModelError("generator expects [N," + std::to_string(spec_.in_channels) + "," +
                     std::to_string(spec_.image_size) + "," + std::to_string(spec_.image_size) + "], got " +
                     shape_str(x));
  }
  const std::size_t depth = down_.size();
  std::vector<torch::Tensor> skips;
  skips.reserve(depth);
  torch::Tensor h = x;
  for (std::size_t k = 0; k < depth; ++k) {
    if (k > 0) h = torch::leaky_relu(h, 0.2);
    h = down_[k].conv->forward(h);
    if (down_[k].norm) h = down_[k].norm->forward(h);
    skips.push_back(h);
    if (trace) trace->encoder.push_back(h.sizes().vec());
  }
  for (std::size_t j = 0; j < depth; ++j) {
    auto& s = up_[j];
    h = s.deconv->forward(torch::relu(h));
    if (j == depth - 1) break;
    h = s.norm->forward(h);
    if (static_cast<int>(j) < spec_.dropout_stages) h = torch::dropout(h, spec_.dropout, is_training());
    if (trace) trace->decoder.push_back(h.sizes().vec());
    const auto& skip = skips[depth - 2 - j];
    if (trace) trace->skips.emplace_back(h.sizes().vec(), skip.sizes().vec());
    h = torch::cat({h, skip}, 1);
  }
  h = torch::tanh(h);
  if (trace) trace->decoder.push_back(h.sizes().vec());
  return h;
}

PatchDiscriminatorImpl::PatchDiscriminatorImpl(DiscriminatorSpec spec) : spec_(std::move(spec)) {
  const auto& w = spec_.widths;
  if (w.empty()) throw ConfigError("discriminator needs at least one stage");
  std::int64_t in = spec_.in_channels;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const bool last = k + 1 == w.size();
    const bool normed = k != 0;
    convs_.push_back(register_module(
        "conv" + std::to_string(k),
        nn::Conv2d(nn::Conv2dOptions(in, w[k], 4).stride(last ? 1 : 2).padding(1).bias(!normed))));
    norms_.push_back(normed ? register_module("norm" + std::to_string(k), instance_norm(w[k])) : nn::InstanceNorm2d(nullptr));
    in = w[k];
  }
  convs_.push_back(register_module("logits", nn::Conv2d(nn::Conv2dOptions(in, 1, 4).stride(1).padding(1))));
}

torch::Tensor PatchDiscriminatorImpl::forward(const torch::Tensor& condition, const torch::Tensor& image) {
  if (condition.dim() != 4 || image.dim() != 4 || condition.size(0) != image.size(0) ||
      condition.size(2) != image.size(2) || condition.size(3) != image.size(3) ||
      condition.size(1) + image.size(1) != spec_.in_channels) {
    throw ModelError("discriminator: incompatible inputs " + shape_str(condition) + " and " + shape_str(image));
  }
  torch::Tensor h = torch::cat({condition, image}, 1);
  for (std::size_t k = 0; k + 1 < convs_.size(); ++k) {
    h = convs_[k]->forward(h);
    if (norms_[k]) h = norms_[k]->forward(h);
    h = torch::leaky_relu(h, 0.2);
  }
  return convs_.back()->forward(h);
}

void init_weights(torch::nn::Module& module) {
  torch::NoGradGuard no_grad;
  for (auto& m : module.modules(/*include_self=*/false)) {
    if (auto* conv = m->as<nn::Conv2d>()) {
      torch::nn::init::normal_(conv->weight, 0.0, 0.02);
      if (conv->bias.defined()) torch::nn::init::zeros_(conv->bias);
    } else if (auto* deconv = m->as<nn::ConvTranspose2d>()) {
      torch::nn::init::normal_(deconv->weight, 0.0, 0.02);
      if (deconv->bias.defined()) torch::nn::init::zeros_(deconv->bias);
    } else if (auto* norm = m->as<nn::InstanceNorm2d>()) {
      torch::nn::init::normal_(norm->weight, 1.0, 0.02);
      torch::nn::init::zeros_(norm->bias);
    }
  }
}

}  // namespace noisemap
