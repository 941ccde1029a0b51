// Torch headers define glog-style CHECK macros; doctest must come last.
#include "noisemap/harness.hpp"
#undef CHECK
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <set>

#include <json.hpp>

#include "noisemap/errors.hpp"
#include "noisemap/raster.hpp"

using namespace noisemap;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("noisemap_harness_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

DatasetManifest synthetic_manifest(std::size_t n) {
  DatasetManifest m;
  for (std::size_t i = 0; i < n; ++i) {
    ManifestEntry e;
    e.id = "s" + std::to_string(100000 + i);
    m.entries.push_back(e);
  }
  return m;
}

JobConfig small_job(std::size_t n) {
  JobConfig cfg = default_job_config();
  cfg.n = n;
  cfg.seed = 31;
  cfg.propagation.grid_spacing = 25.0;
  cfg.workers = 1;
  return cfg;
}

int run_cli(const std::string& args) { return std::system((std::string(NOISEMAP_CLI) + " " + args + " > /dev/null 2>&1").c_str()); }

}  // namespace

TEST_CASE("job config defaults and parsing") {
  const auto d = default_job_config();
  CHECK(d.n == 400);
  CHECK(d.split_ratio == 0.8);
  CHECK(d.image_size == 128);
  CHECK(d.train.image_size == 128);
  CHECK_NOTHROW(check_job_config(d));

  const auto c = parse_job_config(R"({"n": 12, "seed": 5, "train": {"epochs": 3}, "propagation": {"grid_spacing": 10}})");
  CHECK(c.n == 12);
  CHECK(c.seed == 5);
  CHECK(c.train.epochs == 3);
  CHECK(c.propagation.grid_spacing == 10.0);
  CHECK(c.split_ratio == 0.8);

  // Serialised configs parse back to the same text.
  CHECK(job_config_json(parse_job_config(job_config_json(c))) == job_config_json(c));

  const auto path_of = [](const char* text) {
    try {
      parse_job_config(text);
    } catch (const ParseError& e) {
      return e.path();
    }
    return std::string("<none>");
  };
  CHECK(path_of(R"({"train": {"epochs": "many"}})") == "$.train.epochs");
  CHECK(path_of(R"({"colour": 1})") == "$.colour");
  CHECK(path_of("[1, 2]") == "$");
}

TEST_CASE("job config range checks") {
  auto cfg = default_job_config();
  cfg.n = 1;
  CHECK_THROWS_AS(check_job_config(cfg), ConfigError);
  cfg = default_job_config();
  cfg.split_ratio = 1.0;
  CHECK_THROWS_AS(check_job_config(cfg), ConfigError);
  cfg = default_job_config();
  cfg.image_size = 200;
  CHECK_THROWS_AS(check_job_config(cfg), ConfigError);
  cfg = default_job_config();
  cfg.train.image_size = 256;
  CHECK_THROWS_AS(check_job_config(cfg), ConfigError);
}

TEST_CASE("hashing") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  const auto base = default_job_config();
  auto other = base;
  other.train.epochs = 99;
  CHECK(generation_hash(base) == generation_hash(other));  // training settings do not shape the data
  other = base;
  other.seed = 1;
  CHECK(generation_hash(base) != generation_hash(other));
  other = base;
  other.propagation.lumped_absorption = 0.004;
  CHECK(generation_hash(base) != generation_hash(other));
}

TEST_CASE("data root resolution") {
  auto cfg = default_job_config();
  cfg.data_root = "/explicit";
  CHECK(resolve_data_root(cfg) == fs::path("/explicit"));
  cfg.data_root.clear();
  ::setenv("NOISEMAP_DATA_ROOT", "/from/env", 1);
  CHECK(resolve_data_root(cfg) == fs::path("/from/env"));
  ::unsetenv("NOISEMAP_DATA_ROOT");
  CHECK(resolve_data_root(cfg) == fs::path("data"));
}

TEST_CASE("split sizes and disjointness") {
  const auto m = split(synthetic_manifest(10), 0.8, 3);
  CHECK(m.count(Split::Train) == 8);
  CHECK(m.count(Split::Val) == 2);
  std::set<std::string> ids;
  for (const auto& e : m.entries) ids.insert(e.id);
  CHECK(ids.size() == 10);

  const auto again = split(synthetic_manifest(10), 0.8, 3);
  CHECK(manifest_json(again) == manifest_json(m));
  bool differs = false;
  for (std::uint64_t seed = 4; seed < 10 && !differs; ++seed) {
    differs = manifest_json(split(synthetic_manifest(10), 0.8, seed)) != manifest_json(m);
  }
  CHECK(differs);

  CHECK(split(synthetic_manifest(400), 0.8, 7).count(Split::Val) == 80);
  CHECK(split(synthetic_manifest(2200), 0.8, 7).count(Split::Val) == 440);
  CHECK(split(synthetic_manifest(2200), 0.8, 7).count(Split::Train) == 1760);
  CHECK_THROWS_AS(split(synthetic_manifest(10), 1.0, 1), ConfigError);
  CHECK_THROWS_AS(split(synthetic_manifest(2), 0.9, 1), InputError);
}

TEST_CASE("dataset build is reproducible and verifiable") {
  const auto a = scratch("a"), b = scratch("b");
  auto cfg = small_job(4);
  std::size_t calls = 0;
  const auto ma = build_dataset(cfg, a, [&](std::size_t done, std::size_t total) {
    CHECK(done <= total);
    ++calls;
  });
  CHECK(calls == 4);
  cfg.workers = 3;
  const auto mb = build_dataset(cfg, b);
  CHECK(manifest_hash(ma) == manifest_hash(mb));
  CHECK(read_file(a / kManifestFile) == read_file(b / kManifestFile));
  CHECK(ma.config_hash == generation_hash(cfg));
  CHECK(ma.count(Split::Train) + ma.count(Split::Val) == 4);
  CHECK(ma.count(Split::Val) >= 1);
  for (const auto& e : ma.entries) CHECK(read_file(a / e.noise) == read_file(b / e.noise));
  CHECK(verify_dataset(ma, a).empty());
  CHECK(manifest_hash(read_manifest(a)) == manifest_hash(ma));

  // Every noise pixel decodes into the display range; plans use palette colours only.
  for (const auto& e : ma.entries) {
    const auto noise = read_png(a / e.noise);
    CHECK(noise.width == 128);
    for (double v : decode_noise(noise).data) {
      CHECK(v >= 45.0);
      CHECK(v <= 80.0);
    }
    const auto plan = read_png(a / e.plan);
    for (std::size_t i = 0; i < plan.width * plan.height; ++i) CHECK(is_plan_color(plan.get(i)));
    CHECK(plan == encode_plan(import_scene(read_file(a / e.scene)), 128));
  }

  const auto train_pairs = load_pairs(ma, a, Split::Train);
  CHECK(train_pairs.size() == ma.count(Split::Train));
  CHECK(train_pairs[0].plan.sizes().vec() == std::vector<std::int64_t>{3, 128, 128});
  CHECK(load_eval_samples(ma, a, Split::Val).size() == ma.count(Split::Val));

  // Tampering is detected.
  write_png(RgbImage(128, 128), a / ma.entries[1].noise);
  const auto problems = verify_dataset(ma, a);
  REQUIRE(problems.size() == 1);
  CHECK(problems[0].find(ma.entries[1].id) != std::string::npos);
  fs::remove(a / ma.entries[2].plan);
  CHECK(verify_dataset(ma, a).size() == 2);

  // Stray files are flagged, and removed only without --dry-run.
  write_file_atomic(b / "noise" / "s99999.png", "x");
  write_file_atomic(b / "plans" / "half.png.tmp", "x");
  auto report = clean_dataset(b, true);
  CHECK(report.complete);
  CHECK(report.flagged.size() == 2);
  CHECK(fs::exists(b / "noise" / "s99999.png"));
  report = clean_dataset(b, false);
  CHECK(report.removed);
  CHECK_FALSE(fs::exists(b / "noise" / "s99999.png"));
  CHECK(verify_dataset(mb, b).empty());

  // Without a manifest the whole dataset is incomplete.
  fs::remove(b / kManifestFile);
  CHECK_THROWS_AS(read_manifest(b), IoError);
  report = clean_dataset(b, true);
  CHECK_FALSE(report.complete);
  CHECK(report.flagged.size() >= 4 * 4);

  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("manifest parsing errors") {
  const auto dir = scratch("bad_manifest");
  write_file_atomic(dir / kManifestFile, "{\"version\": 1, \"entries\": 3}");
  CHECK_THROWS_AS(read_manifest(dir), ParseError);
  fs::remove_all(dir);
}

TEST_CASE("scene helpers") {
  CityScene s;
  s.roads.push_back({{{0, 250}, {500, 250}}, RoadClass::MainRoad, traffic_defaults(RoadClass::MainRoad)});
  s.buildings.push_back({{{100, 300}, {200, 300}, {200, 400}, {100, 400}}, 20.0});
  PropagationConfig cfg;
  cfg.grid_spacing = 25.0;
  const auto img = simulate_scene(s, cfg, 128);
  CHECK(img.width == 128);
  const auto stats = noise_stats(img, s);
  CHECK(stats.min <= stats.mean);
  CHECK(stats.mean <= stats.max);
  CHECK(stats.max <= 80.0 + 1e-9);
  CHECK(stats.min >= 45.0 - 1e-9);
  CHECK(stats.pixels < 128u * 128u);

  CityScene covered;
  covered.buildings.push_back({{{0, 0}, {500, 0}, {500, 500}, {0, 500}}, 20.0});
  CHECK(noise_stats(RgbImage(128, 128, {0, 0, 128}), covered).pixels == 128u * 128u);
}

TEST_CASE("command line end to end") {
  const auto dir = scratch("cli");
  const auto cfg_path = dir / "job.json";
  write_file_atomic(cfg_path, R"({"propagation": {"grid_spacing": 25}})");
  const std::string conf = "--config " + cfg_path.string() + " ";
  REQUIRE(run_cli(conf + "gen --n 4 --seed 3 --workers 1 --out " + (dir / "data").string()) == 0);
  const auto m = read_manifest(dir / "data");
  CHECK(m.entries.size() == 4);
  CHECK(verify_dataset(m, dir / "data").empty());

  REQUIRE(run_cli("split --data " + (dir / "data").string() + " --ratio 0.5 --seed 2") == 0);
  CHECK(read_manifest(dir / "data").count(Split::Val) == 2);

  REQUIRE(run_cli("train --data " + (dir / "data").string() + " --epochs 1 --seed 1 --out " + (dir / "run").string()) == 0);
  CHECK(fs::exists(dir / "run" / "last.ckpt"));
  CHECK(fs::exists(dir / "run" / "loss_trace.csv"));

  REQUIRE(run_cli(conf + "eval --ckpt " + (dir / "run" / "last.ckpt").string() + " --data " + (dir / "data").string() +
                  " --out " + (dir / "eval").string()) == 0);
  const auto report = nlohmann::json::parse(read_file(dir / "eval" / "report.json"));
  CHECK(report["count"] == 2);
  CHECK(report["timing"]["simulate_ms"].get<double>() > 0.0);

  const auto scene_path = dir / "data" / m.entries[0].scene;
  REQUIRE(run_cli("predict --ckpt " + (dir / "run" / "last.ckpt").string() + " --scene " + scene_path.string() +
                  " --out " + (dir / "p.png").string()) == 0);
  auto model = load_checkpoint(dir / "run" / "last.ckpt");
  CHECK(read_file(dir / "p.png") == encode_png(predict_scene(model, import_scene(read_file(scene_path)))));

  REQUIRE(run_cli(conf + "simulate --scene " + scene_path.string() + " --out " + (dir / "s.png").string()) == 0);
  CHECK(read_file(dir / "s.png") == read_file(dir / "data" / m.entries[0].noise));

  CHECK(run_cli("validate --scene " + scene_path.string()) == 0);
  write_file_atomic(dir / "bad.json", R"({"extent_m":500,"buildings":[{"footprint":[[0,0],[1,1],[1,0],[0,1]],"height":20}]})");
  CHECK(run_cli("validate --scene " + (dir / "bad.json").string()) != 0);
  CHECK(run_cli("clean --dry-run --data " + (dir / "data").string()) == 0);
  CHECK(run_cli("train --data " + (dir / "missing").string() + " --out " + (dir / "x").string()) != 0);
  fs::remove_all(dir);
}
