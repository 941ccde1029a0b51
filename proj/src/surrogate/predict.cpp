#include "noisemap/errors.hpp"
#include "noisemap/surrogate.hpp"

namespace noisemap {

RgbImage predict(Surrogate& model, const RgbImage& plan) {
  const auto size = static_cast<std::size_t>(model.image_size());
  if (plan.width != size || plan.height != size) {
    throw InputError("plan is " + std::to_string(plan.width) + "x" + std::to_string(plan.height) +
                     ", model expects " + std::to_string(size) + "x" + std::to_string(size));
  }
  // Checkpoints load in eval mode; only a freshly trained model needs the switch,
  // so concurrent readers never write the module state.
  if (model.generator->is_training()) model.generator->eval();
  torch::NoGradGuard no_grad;
  return from_tensor(model.generator->forward(to_tensor(plan).unsqueeze(0)));
}

}  // namespace noisemap
