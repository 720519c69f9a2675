#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include "fergan/cli/commands.hpp"
#include "fergan/cli/pipeline_config.hpp"
#include "fergan/common/error.hpp"
#include "fergan/common/fs.hpp"
#include "fergan/data/manifest.hpp"
#include "support/fixtures.hpp"

namespace fergan::cli {
namespace {

using testing::TempDir;

struct Invocation {
  int code = 0;
  std::string out, err;
};

Invocation invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "fergan");
  std::ostringstream out, err;
  Invocation r;
  r.code = run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

TEST(Overrides, ParseJsonOrString) {
  auto o = parse_override("fit.epochs=3");
  EXPECT_EQ(o.key, "fit.epochs");
  EXPECT_EQ(o.value, 3);
  EXPECT_EQ(parse_override("sweep.k_values=[1,2]").value, nlohmann::json::array({1, 2}));
  EXPECT_EQ(parse_override("paths.output_dir=out/x").value, "out/x");
  EXPECT_EQ(parse_override("a=b=c").value, "b=c");
  EXPECT_THROW(parse_override("fit.epochs"), ConfigError);
  EXPECT_THROW(parse_override("=3"), ConfigError);
}

TEST(Overrides, SetPathCreatesObjects) {
  nlohmann::json doc = nlohmann::json::object();
  set_path(doc, "gan.architecture.width", 8);
  set_path(doc, "seed", 2);
  EXPECT_EQ(doc, (nlohmann::json{{"gan", {{"architecture", {{"width", 8}}}}}, {"seed", 2}}));
}

TEST(LoadConfig, RelativePathsFollowTheirSource) {
  TempDir dir;
  write_file_atomic(dir / "cfg.json", R"({"paths": {"corpus_manifest": "data/m.csv",
    "heldout": [{"tag": "field", "manifest": "f/m.csv"}]}})");
  const auto cfg = load_config(dir / "cfg.json", {parse_override("paths.checkpoint=ck.bin")});
  EXPECT_EQ(cfg.paths.corpus_manifest, dir.path() / "data" / "m.csv");
  ASSERT_EQ(cfg.paths.heldout.size(), 1u);
  EXPECT_EQ(cfg.paths.heldout[0].manifest, dir.path() / "f" / "m.csv");
  EXPECT_EQ(cfg.paths.checkpoint, std::filesystem::current_path() / "ck.bin");
}

TEST(LoadConfig, TopLevelSeedFillsUnsetSubSeeds) {
  TempDir dir;
  write_file_atomic(dir / "cfg.json", R"({"seed": 7, "fit": {"seed": 3}})");
  const auto cfg = load_config(dir / "cfg.json", {});
  EXPECT_EQ(cfg.seed, 7u);
  EXPECT_EQ(cfg.fit.seed, 3u);
  EXPECT_EQ(cfg.gan.seed, 7u);
  EXPECT_EQ(cfg.split.seed, 7u);
  EXPECT_EQ(cfg.generate.seed, 7u);
  EXPECT_EQ(cfg.sweep.pool_seed, 7u);
  EXPECT_EQ(cfg.sweep.seeds, std::vector<std::uint64_t>{7});

  const auto forced = load_config(dir / "cfg.json", {}, 11);
  EXPECT_EQ(forced.fit.seed, 11u);
  EXPECT_EQ(forced.gan.seed, 11u);
  EXPECT_EQ(forced.sweep.seeds, std::vector<std::uint64_t>{11});
}

TEST(LoadConfig, RejectsUnknownKeysAndBadValues) {
  TempDir dir;
  write_file_atomic(dir / "a.json", R"({"fitt": {}})");
  EXPECT_THROW(load_config(dir / "a.json", {}), ConfigError);
  write_file_atomic(dir / "b.json", R"({"fit": {"epochs": "ten"}})");
  EXPECT_THROW(load_config(dir / "b.json", {}), ConfigError);
  write_file_atomic(dir / "c.json", "{not json");
  EXPECT_THROW(load_config(dir / "c.json", {}), ConfigError);
  EXPECT_THROW(load_config(dir / "missing.json", {}), ConfigError);
  EXPECT_THROW(load_config(std::nullopt, {parse_override("sweep.forgetting_margin=-1")}), ConfigError);
}

TEST(LoadConfig, ResolvedDocumentRoundTrips) {
  TempDir dir;
  write_file_atomic(dir / "cfg.json", R"({"seed": 5, "paths": {"corpus_manifest": "m.csv"},
    "split": {"train": 10, "val": 0.1}, "sweep": {"k_values": [1, 3]}})");
  const auto cfg = load_config(dir / "cfg.json", {});
  const auto again = PipelineConfig::from_json(cfg.to_json(), "/elsewhere");
  EXPECT_EQ(again.to_json(), cfg.to_json());
}

TEST(Run, HelpAndUsageErrors) {
  EXPECT_EQ(invoke({"--help"}).code, kExitOk);
  EXPECT_NE(invoke({"no-such-command"}).code, kExitOk);
  const auto neg = invoke({"sweep", "--k", "0,-1"});
  EXPECT_EQ(neg.code, kExitConfig);
}

TEST(Run, MissingInputNamesThePath) {
  TempDir dir;
  const auto missing = (dir / "nope.csv").string();
  const auto r = invoke({"train-translator", "--corpus", missing, "-o", (dir / "out").string(), "-q"});
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find(missing), std::string::npos) << r.err;
  EXPECT_FALSE(std::filesystem::exists(dir / "out" / "translator.bin"));
}

TEST(Run, ToyCorpusWritesManifest) {
  TempDir dir;
  const auto r = invoke({"toy-corpus", "--identities", "3", "--size", "16", "-o", (dir / "toy").string(), "-q"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto rows = data::read_manifest(dir / "toy" / "manifest.csv");
  EXPECT_EQ(rows.size(), 18u);
  EXPECT_EQ(rows[0].identity_id, "toy0000");
}

// Every stage on a corpus small enough to finish in seconds.
TEST(Run, EndToEndPipeline) {
  TempDir dir;
  const auto p = [&](const std::string& rel) { return (dir / rel).string(); };
  ASSERT_EQ(invoke({"toy-corpus", "--identities", "16", "--size", "32", "--seed", "1", "-o", p("real"), "-q"}).code, 0);
  ASSERT_EQ(invoke({"toy-corpus", "--identities", "3", "--size", "32", "--seed", "2", "--prefix", "field", "--source-db",
                    "field", "-o", p("field"), "-q"})
                .code,
            0);
  write_file_atomic(dir / "cfg.json", R"({
    "seed": 4,
    "paths": {"corpus_manifest": "real/manifest.csv", "output_dir": "out",
              "heldout": [{"tag": "field", "manifest": "field/manifest.csv"}]},
    "preprocess": {"output_size": 32, "crop_fraction": 1.0},
    "gan": {"steps": 2, "batch_size": 4,
            "architecture": {"width": 4, "downsamples": 1, "residual_blocks": 1, "disc_width": 4, "disc_layers": 2}},
    "generate": {"image_size": 32, "identities": 2},
    "classifier": {"input_size": 32, "conv_widths": [2, 4, 4, 4], "dense_units": 8},
    "fit": {"epochs": 1, "batch_size": 16, "patience": null},
    "split": {"train": 10, "val": 2, "test": 4},
    "sweep": {"k_values": [1]}
  })");
  const std::string cfg = p("cfg.json");

  auto r = invoke({"train-translator", "-c", cfg, "-q"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const std::string ckpt = p("out/translator.bin");
  EXPECT_TRUE(std::filesystem::exists(ckpt));
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "config.json"));

  r = invoke({"generate", "-c", cfg, "--checkpoint", ckpt, "-o", p("gen"), "-q"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(data::read_manifest(dir / "gen" / "manifest.csv").size(), 12u);

  r = invoke({"train-fer", "-c", cfg, "--train", p("real/manifest.csv"), "-o", p("fer"), "-q"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  ASSERT_TRUE(std::filesystem::exists(dir / "fer" / "classifier.bin"));

  r = invoke({"evaluate", "-c", cfg, "--model", p("fer/classifier.bin"), "--manifest", p("field/manifest.csv"), "--tag",
              "field", "--training-manifest", p("real/manifest.csv"), "-o", p("eval"), "-q"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  // The training corpus is not a held-out set.
  r = invoke({"evaluate", "-c", cfg, "--model", p("fer/classifier.bin"), "--manifest", p("real/manifest.csv"),
              "--training-manifest", p("real/manifest.csv"), "-o", p("eval2"), "-q"});
  EXPECT_EQ(r.code, kExitRuntime);

  r = invoke({"sweep", "-c", cfg, "--checkpoint", ckpt, "-o", p("sweep"), "-q"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto csv = read_file(dir / "sweep" / "sweep.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_TRUE(std::filesystem::exists(dir / "sweep" / "summary.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "sweep" / "pool" / "pool.json"));

  // A second sweep reuses the pool and every row.
  r = invoke({"sweep", "-c", cfg, "--checkpoint", ckpt, "-o", p("sweep")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.err.find("reusing"), std::string::npos);
  EXPECT_EQ(read_file(dir / "sweep" / "sweep.csv"), csv);

  r = invoke({"report", "--sweep-dir", p("sweep"), "-q"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(read_file(dir / "sweep" / "sweep.csv"), csv);
}

}  // namespace
}  // namespace fergan::cli
