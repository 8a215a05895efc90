#include <gtest/gtest.h>

#include <fstream>
#include <json.hpp>
#include <random>
#include <sstream>

#include "support/test_support.hpp"
#include "viewforge/dataset.hpp"
#include "viewforge/harness/commands.hpp"
#include "viewforge/harness/experiment.hpp"
#include "viewforge/harness/image_io.hpp"

using namespace viewforge;
using namespace viewforge::harness;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "viewforge");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

void write_images(const fs::path& dir, int n, std::uint64_t seed) {
  fs::create_directories(dir);
  std::mt19937_64 gen(seed);
  for (int i = 0; i < n; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "img_%02d.ppm", i);
    write_pnm(testing_support::random_image(10 + i % 3, 12, 3, gen), dir / name);
  }
}


std::vector<std::string> tiny_sets() {
  return {"--set", "train.steps=4",        "--set", "loader.batch_size=8",     "--set", "toy.samples=32",
          "--set", "toy.size=10",          "--set", "augment.out_size=6",      "--set", "model.encoder=8",
          "--set", "model.projector_depth=1", "--set", "model.projector_out=4"};
}

std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli({}).code, kExitUsage);
  EXPECT_EQ(cli({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(cli({"--help"}).code, kExitOk);
  EXPECT_EQ(cli({"pack"}).code, kExitUsage);
  EXPECT_EQ(cli({"train", "--set", "nonsense"}).code, kExitUsage);
  EXPECT_EQ(cli({"train", "--set", "train.method=byol"}).code, kExitUsage);
  EXPECT_EQ(cli({"sweep", "--set", "sweep.grid=ema"}).code, kExitUsage);
  EXPECT_EQ(cli({"bench"}).code, kExitUsage);
}

TEST(Cli, PackDirectoryAndInspect) {
  testing_support::TempDir dir;
  write_images(dir.path() / "imgs", 10, 1);
  const fs::path packed = dir.path() / "d.sslp";
  const CliResult p = cli({"pack", (dir.path() / "imgs").string(), packed.string()});
  ASSERT_EQ(p.code, kExitOk) << p.err;
  EXPECT_EQ(json::parse(p.out).at("count"), 10);
  EXPECT_EQ(json::parse(p.out).at("mode"), "raw");

  const CliResult i = cli({"inspect", packed.string()});
  ASSERT_EQ(i.code, kExitOk) << i.err;
  const json j = json::parse(i.out);
  EXPECT_EQ(j.at("count"), 10);
  EXPECT_TRUE(j.at("validation").at("ok").get<bool>());
  EXPECT_EQ(j.at("data_region_offset").get<std::uint64_t>() % 4096, 0u);

  {
    std::fstream f(packed, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(static_cast<std::streamoff>(j.at("data_region_offset").get<std::uint64_t>() + 5));
    f.put('\x7f');
  }
  const CliResult bad = cli({"inspect", packed.string()});
  EXPECT_EQ(bad.code, kExitRunFailure);
  EXPECT_EQ(json::parse(bad.out).at("validation").at("failed_indices"), json::array({0}));
  EXPECT_EQ(cli({"inspect", packed.string(), "--no-verify"}).code, kExitOk);
}

TEST(Cli, PackManifestKeepsLabels) {
  testing_support::TempDir dir;
  write_images(dir.path() / "imgs", 4, 2);
  std::ofstream(dir.path() / "list.txt") << "# path label\nimgs/img_02.ppm 7\nimgs/img_00.ppm 3\nimgs/img_03.ppm 0\n";
  const fs::path packed = dir.path() / "m.sslp";
  const CliResult p = cli({"pack", (dir.path() / "list.txt").string(), packed.string(), "--encoding", "jpeg"});
  ASSERT_EQ(p.code, kExitOk) << p.err;
  const DatasetHandle ds = open_dataset(packed);
  ASSERT_EQ(ds.sample_count(), 3u);
  EXPECT_EQ(ds.descriptor(0).label, 7u);
  EXPECT_EQ(ds.descriptor(1).label, 3u);
  EXPECT_EQ(ds.descriptor(2).label, 0u);
  EXPECT_EQ(ds.header().encoding_mode, EncodingMode::Jpeg);
}

TEST(Cli, PackMissingInput) {
  testing_support::TempDir dir;
  EXPECT_EQ(cli({"pack", (dir.path() / "none").string(), (dir.path() / "x.sslp").string()}).code, kExitUsage);
}

TEST(Cli, BenchEchoesConfig) {
  testing_support::TempDir dir;
  write_images(dir.path() / "imgs", 12, 3);
  const fs::path packed = dir.path() / "b.sslp";
  ASSERT_EQ(cli({"pack", (dir.path() / "imgs").string(), packed.string()}).code, kExitOk);
  const CliResult b = cli({"bench", "--set", "data.path=" + packed.string(), "--set", "bench.presets=+jitter,crops",
                           "--set", "bench.batch_size=4", "--set", "bench.out_size=8", "--format", "json",
                           "--no-timing", "--out", dir.path().string()});
  ASSERT_EQ(b.code, kExitOk) << b.err;
  const json j = json::parse(b.out);
  EXPECT_EQ(j.at("presets"), json::array({"+jitter", "crops"}));
  EXPECT_EQ(j.at("config").at("bench.batch_size"), "4");
  ASSERT_EQ(j.at("results").size(), 2u);
  EXPECT_EQ(j.at("results")[0].at("preset"), "+jitter");
  EXPECT_EQ(j.at("results")[0].at("images"), 12);
  EXPECT_FALSE(j.at("results")[0].contains("wall_seconds"));
  EXPECT_TRUE(fs::exists(dir.path() / "bench.json"));
}

TEST(Cli, TrainWritesArtifactsAndDumps) {
  testing_support::TempDir dir;
  const fs::path out = dir.path() / "run";
  const CliResult t = cli(cat({"train", "--out", out.string(), "--no-timing", "--seed", "5", "--dump-batches",
                               (dir.path() / "b.bin").string()},
                              tiny_sets()));
  ASSERT_EQ(t.code, kExitOk) << t.err;
  const json j = json::parse(t.out);
  EXPECT_EQ(j.at("status"), "ok");
  EXPECT_EQ(j.at("config").at("train.seed"), "5");
  for (const char* f : {"config.txt", "metrics.jsonl", "report.json"}) EXPECT_TRUE(fs::exists(out / f)) << f;
  EXPECT_EQ(read_batch_dump(dir.path() / "b.bin").size(), 4u);

  const CliResult r = cli({"report", dir.path().string(), "--format", "csv"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 2);
}

TEST(Cli, TrainDivergenceExitsOne) {
  const CliResult t = cli(cat(cat({"train", "--no-timing", "--set", "train.lr=1e6", "--set", "train.clip_norm=0"}, tiny_sets()),
                              {"--set", "train.steps=50", "--set", "train.method=vicreg"}));
  EXPECT_EQ(t.code, kExitRunFailure);
  EXPECT_NE(t.err.find("NanLoss"), std::string::npos);
}

TEST(Cli, ReportErrors) {
  testing_support::TempDir dir;
  EXPECT_EQ(cli({"report", (dir.path() / "missing").string()}).code, kExitUsage);
  EXPECT_EQ(cli({"report", dir.path().string()}).code, kExitRunFailure);
}
