#include <bit>
#include <cmath>
#include <cstring>
#include <map>

#include <json.hpp>

#include "noisemap/errors.hpp"
#include "noisemap/surrogate.hpp"

namespace noisemap {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'N', 'M', 'C', 'K', 'P', 'T', '\0', '\0'};
constexpr std::uint8_t kFloat32 = 0;

using json = nlohmann::ordered_json;

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    T v;
    std::memcpy(&v, take(sizeof(T)).data(), sizeof(T));
    return v;
  }

  std::string_view take(std::size_t n) {
    if (n > bytes_.size() - pos_) throw IoError("checkpoint truncated");
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

double nan_to_null_get(const json& j) { return j.is_null() ? std::nan("") : j.get<double>(); }

json header_json(const Surrogate& m) {
  const auto& g = m.generator_spec;
  const auto& d = m.discriminator_spec;
  const auto& c = m.config;
  json j;
  j["generator"] = {{"image_size", g.image_size}, {"in_channels", g.in_channels}, {"out_channels", g.out_channels},
                    {"widths", g.widths},         {"dropout_stages", g.dropout_stages}, {"dropout", g.dropout}};
  j["discriminator"] = {{"in_channels", d.in_channels}, {"widths", d.widths}};
  j["config"] = {{"lambda_l1", c.lambda_l1}, {"learning_rate", c.learning_rate}, {"beta1", c.beta1},
                 {"beta2", c.beta2},         {"batch_size", c.batch_size},       {"epochs", c.epochs},
                 {"seed", c.seed},           {"image_size", c.image_size},       {"augment", c.augment},
                 {"checkpoint_every", c.checkpoint_every}, {"threads", c.threads}};
  j["epoch"] = m.epoch;
  auto batches = json::array();
  for (const auto& r : m.trace.batches) batches.push_back({r.batch, r.d_loss, r.g_adv, r.g_l1});
  auto epochs = json::array();
  for (const auto& e : m.trace.epochs) {
    epochs.push_back({e.epoch, e.d_loss, e.g_adv, e.g_l1, std::isfinite(e.val_l1) ? json(e.val_l1) : json(nullptr),
                      e.seconds});
  }
  j["trace"] = {{"batches", std::move(batches)}, {"epochs", std::move(epochs)}};
  return j;
}

void read_header(const json& j, Surrogate& m) {
  const auto& g = j.at("generator");
  m.generator_spec.image_size = g.at("image_size");
  m.generator_spec.in_channels = g.at("in_channels");
  m.generator_spec.out_channels = g.at("out_channels");
  m.generator_spec.widths = g.at("widths").get<std::vector<std::int64_t>>();
  m.generator_spec.dropout_stages = g.at("dropout_stages");
  m.generator_spec.dropout = g.at("dropout");
  const auto& d = j.at("discriminator");
  m.discriminator_spec.in_channels = d.at("in_channels");
  m.discriminator_spec.widths = d.at("widths").get<std::vector<std::int64_t>>();
  const auto& c = j.at("config");
  m.config.lambda_l1 = c.at("lambda_l1");
  m.config.learning_rate = c.at("learning_rate");
  m.config.beta1 = c.at("beta1");
  m.config.beta2 = c.at("beta2");
  m.config.batch_size = c.at("batch_size");
  m.config.epochs = c.at("epochs");
  m.config.seed = c.at("seed");
  m.config.image_size = c.at("image_size");
  m.config.augment = c.at("augment");
  m.config.checkpoint_every = c.at("checkpoint_every");
  m.config.threads = c.at("threads");
  m.epoch = j.at("epoch");
  for (const auto& r : j.at("trace").at("batches")) {
    m.trace.batches.push_back({r.at(0).get<std::int64_t>(), r.at(1), r.at(2), r.at(3)});
  }
  for (const auto& e : j.at("trace").at("epochs")) {
    m.trace.epochs.push_back({e.at(0).get<int>(), e.at(1), e.at(2), e.at(3), nan_to_null_get(e.at(4)), e.at(5)});
  }
}

std::vector<std::pair<std::string, torch::Tensor>> state(const Surrogate& m) {
  std::vector<std::pair<std::string, torch::Tensor>> out;
  const auto collect = [&](const std::string& prefix, const torch::nn::Module& mod) {
    for (const auto& p : mod.named_parameters()) out.emplace_back(prefix + p.key(), p.value());
    for (const auto& b : mod.named_buffers()) out.emplace_back(prefix + b.key(), b.value());
  };
  collect("generator.", *m.generator);
  collect("discriminator.", *m.discriminator);
  return out;
}

}  // namespace

void save_checkpoint(const Surrogate& model, const std::filesystem::path& path) {
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  const std::string header = header_json(model).dump();
  put<std::uint64_t>(out, header.size());
  out += header;
  const auto tensors = state(model);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    const torch::Tensor x = t.detach().to(torch::kCPU, torch::kFloat32).contiguous();
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put<std::uint8_t>(out, kFloat32);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(x.dim()));
    for (auto s : x.sizes()) put<std::int64_t>(out, s);
    out.append(static_cast<const char*>(x.data_ptr()), static_cast<std::size_t>(x.numel()) * sizeof(float));
  }
  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  write_file_atomic(path, out);
}

Surrogate load_checkpoint(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  Reader in(bytes);
  if (std::memcmp(in.take(sizeof(kMagic)).data(), kMagic, sizeof(kMagic)) != 0) {
    throw IoError(path.string() + ": not a checkpoint file");
  }
  const auto version = in.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw IoError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_len = in.get<std::uint64_t>();
  Surrogate m;
  try {
    read_header(json::parse(in.take(header_len)), m);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": bad checkpoint header: " + e.what());
  }
  m.generator = UNetGenerator(m.generator_spec);
  m.discriminator = PatchDiscriminator(m.discriminator_spec);

  std::map<std::string, torch::Tensor> targets;
  for (auto& [name, t] : state(m)) targets.emplace(name, t);
  const auto count = in.get<std::uint32_t>();
  if (count != targets.size()) throw IoError(path.string() + ": tensor count does not match the stored specs");

  torch::NoGradGuard no_grad;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = in.get<std::uint32_t>();
    const std::string name(in.take(name_len));
    if (in.get<std::uint8_t>() != kFloat32) throw IoError(path.string() + ": unsupported dtype for " + name);
    const auto ndim = in.get<std::uint32_t>();
    std::vector<std::int64_t> dims(ndim);
    std::int64_t numel = 1;
    for (auto& d : dims) {
      d = in.get<std::int64_t>();
      if (d < 0) throw IoError(path.string() + ": negative dimension in " + name);
      numel *= d;
    }
    const auto it = targets.find(name);
    if (it == targets.end()) throw IoError(path.string() + ": unexpected tensor " + name);
    if (it->second.sizes().vec() != dims) throw IoError(path.string() + ": shape mismatch for " + name);
    const auto raw = in.take(static_cast<std::size_t>(numel) * sizeof(float));
    std::memcpy(it->second.data_ptr(), raw.data(), raw.size());
    targets.erase(it);
  }
  if (!in.done()) throw IoError(path.string() + ": trailing bytes");
  m.generator->eval();
  m.discriminator->eval();
  return m;
}

}  // namespace noisemap
