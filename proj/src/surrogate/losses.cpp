#include "noisemap/surrogate.hpp"

namespace noisemap {

torch::Tensor d_loss(const torch::Tensor& real_logits, const torch::Tensor& fake_logits) {
  namespace F = torch::nn::functional;
  const auto real = F::binary_cross_entropy_with_logits(real_logits, torch::ones_like(real_logits));
  const auto fake = F::binary_cross_entropy_with_logits(fake_logits, torch::zeros_like(fake_logits));
  return 0.5 * (real + fake);
}

GeneratorLoss g_loss(const torch::Tensor& fake_logits, const torch::Tensor& y_pred, const torch::Tensor& y_true,
                     double lambda_l1) {
  namespace F = torch::nn::functional;
  GeneratorLoss out;
  out.adversarial = F::binary_cross_entropy_with_logits(fake_logits, torch::ones_like(fake_logits));
  out.l1 = (y_true - y_pred).abs().mean();
  out.total = out.adversarial + lambda_l1 * out.l1;
  return out;
}

}  // namespace noisemap
