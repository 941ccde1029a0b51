#include <bit>
#include <cstring>
#include <fstream>

#include "noisemap/acoustics.hpp"
#include "noisemap/errors.hpp"

namespace noisemap {

static_assert(std::endian::native == std::endian::little, "grid files are written little-endian");

namespace {

constexpr char kGridMagic[8] = {'N', 'M', 'G', 'R', 'I', 'D', '\0', '\0'};
constexpr std::uint32_t kGridVersion = 1;

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw IoError("grid file truncated");
  return v;
}

}  // namespace

void write_grid(const NoiseGrid& grid, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(kGridMagic, sizeof(kGridMagic));
  put(os, kGridVersion);
  put(os, grid.extent_m);
  put(os, grid.spacing_m);
  put(os, static_cast<std::uint32_t>(grid.rows));
  put(os, static_cast<std::uint32_t>(grid.cols));
  os.write(reinterpret_cast<const char*>(grid.values.data()),
           static_cast<std::streamsize>(grid.values.size() * sizeof(double)));
  os.write(reinterpret_cast<const char*>(grid.mask.data()), static_cast<std::streamsize>(grid.mask.size()));
  if (!os) throw IoError("failed writing " + path.string());
}

NoiseGrid read_grid(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kGridMagic, sizeof(magic)) != 0) {
    throw IoError(path.string() + ": not a noise grid file");
  }
  if (const auto v = get<std::uint32_t>(is); v != kGridVersion) {
    throw IoError(path.string() + ": unsupported grid version " + std::to_string(v));
  }
  NoiseGrid g;
  g.extent_m = get<double>(is);
  g.spacing_m = get<double>(is);
  g.rows = get<std::uint32_t>(is);
  g.cols = get<std::uint32_t>(is);
  g.values.resize(g.rows * g.cols);
  g.mask.resize(g.rows * g.cols);
  if (!is.read(reinterpret_cast<char*>(g.values.data()), static_cast<std::streamsize>(g.values.size() * sizeof(double))) ||
      !is.read(reinterpret_cast<char*>(g.mask.data()), static_cast<std::streamsize>(g.mask.size()))) {
    throw IoError("grid file truncated");
  }
  return g;
}

}  // namespace noisemap
