#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "fergan/common/csv.hpp"
#include "fergan/common/error.hpp"
#include "fergan/common/fs.hpp"
#include "fergan/data/balance.hpp"
#include "fergan/data/cache.hpp"
#include "fergan/data/image_io.hpp"
#include "fergan/data/manifest.hpp"
#include "fergan/data/mixing.hpp"
#include "fergan/data/preprocess.hpp"
#include "fergan/data/split.hpp"
#include "support/fixtures.hpp"

namespace fergan {
namespace {

using testing::TempDir;
using testing::tiny_dataset;

std::size_t identity_overlap(const data::FaceDataset& a, const data::FaceDataset& b) {
  std::size_t n = 0;
  for (const auto& id : a.identities()) n += b.contains_identity(id) ? 1 : 0;
  return n;
}

std::array<std::size_t, kNumEmotions> class_counts(const data::FaceDataset& ds) {
  std::array<std::size_t, kNumEmotions> counts{};
  for (const auto& r : ds.records()) ++counts[static_cast<std::size_t>(index_of(r.emotion))];
  return counts;
}

TEST(Emotion, ParsesCorpusSpellingsAndRejectsNeutral) {
  EXPECT_EQ(parse_emotion("happy"), Emotion::kHappiness);
  EXPECT_EQ(parse_emotion("Surprise"), Emotion::kSurprised);
  EXPECT_EQ(parse_emotion("angry"), Emotion::kAnger);
  EXPECT_FALSE(parse_emotion("neutral"));
  EXPECT_FALSE(parse_emotion("contempt"));
  for (Emotion e : kAllEmotions) {
    EXPECT_EQ(parse_emotion(to_string(e)), e);
    EXPECT_EQ(emotion_from_index(index_of(e)), e);
  }
  EXPECT_THROW(emotion_from_index(6), DataError);
}

TEST(Emotion, DomainCodeIsOneHot) {
  const auto v = DomainCode::of(Emotion::kFear).one_hot();
  EXPECT_EQ(v, (std::array<float, 6>{0, 0, 1, 0, 0, 0}));
  EXPECT_EQ(DomainCode::from_values(v).emotion(), Emotion::kFear);
  const std::array<float, 6> two{1, 1, 0, 0, 0, 0}, half{0.5f, 0, 0, 0, 0, 0.5f};
  EXPECT_THROW(DomainCode::from_values(two), Error);
  EXPECT_THROW(DomainCode::from_values(half), Error);
}

TEST(Csv, HandlesQuotesAndLineEndings) {
  const auto rows = csv::parse("a,\"b,c\",\"say \"\"hi\"\"\"\r\n\r\nx,y,z\n");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].fields, (csv::Row{"a", "b,c", "say \"hi\""}));
  EXPECT_EQ(rows[1].line, 3u);
  EXPECT_EQ(csv::escape("plain"), "plain");
  const csv::Row tricky{"x", "a,b", "q\"q"};
  EXPECT_EQ(csv::parse(csv::format_row(tricky)).at(0).fields, tricky);
}

TEST(Preprocess, CenterBoxArithmetic) {
  // 100 x 80 at 0.8: side round(80 * 0.8) = 64, centred.
  const data::FaceBox box = data::center_box(100, 80, 0.8);
  EXPECT_EQ(box, (data::FaceBox{8, 18, 64, 64}));
}

TEST(Preprocess, GrayscaleUsesLumaWeights) {
  ImageTensor rgb(1, 1, 3, std::vector<float>{1.0f, 0.5f, 0.0f});
  EXPECT_NEAR(data::to_grayscale(rgb).at(0, 0), 0.299 + 0.587 * 0.5, 1e-6);
}

TEST(Preprocess, SameSizeResizeIsExactAndConstantsStayConstant) {
  std::mt19937 gen(3);
  std::uniform_real_distribution<float> u(0, 1);
  std::vector<float> v(12 * 9);
  for (auto& x : v) x = u(gen);
  const ImageTensor img(12, 9, 1, v);
  EXPECT_EQ(data::resize_bilinear(img, 12, 9), img);
  const ImageTensor flat(10, 7, 1, 0.37f);
  const ImageTensor big = data::resize_bilinear(flat, 23, 31);
  for (float x : big.values()) EXPECT_NEAR(x, 0.37f, 1e-6);
}

TEST(Preprocess, OutputIsSquareGreyAndClamped) {
  ImageTensor img(40, 30, 3, 1.5f);
  const ImageTensor out = data::preprocess(img, std::nullopt, {16, 0.8});
  EXPECT_EQ(out.height(), 16u);
  EXPECT_EQ(out.width(), 16u);
  EXPECT_EQ(out.channels(), 1u);
  EXPECT_TRUE(out.within(0.0f, 1.0f));
  EXPECT_THROW(data::preprocess(img, data::FaceBox{25, 0, 10, 10}, {}), DataError);
  EXPECT_THROW(data::preprocess(img, data::FaceBox{0, 0, 0, 10}, {}), DataError);
}

TEST(ImageIo, PngRoundTripWithinQuantization) {
  TempDir dir;
  std::vector<float> v(5 * 6);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(i) / static_cast<float>(v.size());
  const ImageTensor img(5, 6, 1, v);
  data::write_png(dir / "a.png", img);
  data::write_png(dir / "b.png", img);
  EXPECT_EQ(read_file(dir / "a.png"), read_file(dir / "b.png"));
  const ImageTensor back = data::read_image(dir / "a.png");
  ASSERT_TRUE(back.same_shape(img));
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(back.values()[i], v[i], 0.5 / 255 + 1e-6);
}

TEST(Dataset, RejectsInvalidRecords) {
  data::FaceDataset ds = tiny_dataset(1);
  data::LabeledFace dup = ds[0];
  EXPECT_THROW(ds.add(dup), DataError);
  data::LabeledFace other_source = ds[0];
  other_source.source_db = "elsewhere";
  EXPECT_NO_THROW(ds.add(other_source));
  data::LabeledFace nameless = ds[0];
  nameless.identity_id.clear();
  EXPECT_THROW(ds.add(nameless), DataError);
  data::LabeledFace nan = ds[0];
  nan.identity_id = "x";
  nan.image = ImageTensor(2, 2, 1, std::nanf(""));
  EXPECT_THROW(ds.add(nan), DataError);
}

TEST(Manifest, SaveAndLoadRoundTrip) {
  TempDir dir;
  const data::FaceDataset ds = tiny_dataset(3, "p", data::Provenance::kGenerated, 8);
  const data::FaceDataset saved = data::save_dataset(ds, dir.path());
  const data::FaceDataset loaded = data::load_corpus(dir / "manifest.csv", {8, 1.0});
  ASSERT_EQ(loaded.size(), ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(loaded[i].identity_id, ds[i].identity_id);
    EXPECT_EQ(loaded[i].emotion, ds[i].emotion);
    EXPECT_EQ(loaded[i].provenance, data::Provenance::kGenerated);
    EXPECT_EQ(loaded[i].path, saved[i].path);
  }
  // Paths under the manifest directory are written relative to it.
  EXPECT_EQ(read_file(dir / "manifest.csv").find(dir.path().string()), std::string::npos);
  const auto summary = data::summarize_manifest(dir / "manifest.csv");
  EXPECT_EQ(summary.identities, ds.identities());
  EXPECT_EQ(summary.image_paths.size(), ds.size());
}

TEST(Manifest, ErrorsNameTheLine) {
  TempDir dir;
  write_file_atomic(dir / "m.csv", std::string(data::kManifestHeader) +
                                       "\na.png,s1,happy,real,db\nb.png,s1,bored,real,db\n");
  try {
    data::read_manifest(dir / "m.csv");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("m.csv:3:"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("bored"), std::string::npos);
  }
  write_file_atomic(dir / "p.csv", std::string(data::kManifestHeader) + "\na.png,s1,happy,imagined,db\n");
  EXPECT_THROW(data::read_manifest(dir / "p.csv"), DataError);
  EXPECT_THROW(data::resolve_image_path(dir / "m.csv", "../outside.png"), DataError);
  EXPECT_THROW(data::read_manifest(dir / "missing.csv"), DataError);
}

TEST(Manifest, InMemoryFacesCannotBeListed) {
  TempDir dir;
  EXPECT_THROW(data::write_manifest(tiny_dataset(1), dir / "m.csv"), DataError);
}

TEST(Balance, ReportsOffendingIdentities) {
  data::FaceDataset ds = tiny_dataset(4);
  const auto ok = data::validate_balance(ds);
  EXPECT_TRUE(ok.balanced);
  for (auto c : ok.per_class_counts) EXPECT_EQ(c, 4u);
  std::vector<std::string> ids = ds.identities();
  data::FaceDataset partial = ds.subset(std::span<const std::string>(ids).first(3));
  data::LabeledFace lone = ds[0];
  lone.identity_id = "lonely";
  partial.add(lone);
  const auto bad = data::validate_balance(partial);
  EXPECT_FALSE(bad.balanced);
  EXPECT_EQ(bad.offending_identities, std::vector<std::string>{"lonely"});
}

TEST(Split, ExactCountsAndDegenerateSplit) {
  const data::FaceDataset ds = tiny_dataset(144);
  const auto s = data::split_by_identity(ds, data::SplitSpec::counts(109, 10, 25, 7));
  EXPECT_EQ(s.train.identity_count(), 109u);
  EXPECT_EQ(s.val.identity_count(), 10u);
  EXPECT_EQ(s.test.identity_count(), 25u);

  data::SplitSpec all;
  all.train.fraction = 1.0;
  all.val.count = 0;
  all.test.count = 0;
  const auto a = data::split_by_identity(ds, all);
  EXPECT_EQ(a.train.size(), ds.size());
  EXPECT_EQ(a.train.identities(), ds.identities());
  EXPECT_TRUE(a.val.empty());
  EXPECT_TRUE(a.test.empty());
}

TEST(Split, ResolvesFractionsAndRejectsImpossibleSpecs) {
  data::SplitSpec spec;
  spec.val.fraction = 0.1;
  spec.test.fraction = 0.17;
  // 0.1 * 144 = 14.4 -> 14, 0.17 * 144 = 24.48 -> 24, train takes the rest.
  const auto c = data::resolve_split(spec, 144);
  EXPECT_EQ(c.val, 14u);
  EXPECT_EQ(c.test, 24u);
  EXPECT_EQ(c.train, 106u);
  EXPECT_THROW(data::resolve_split(data::SplitSpec::counts(100, 10, 10), 100), ConfigError);
  EXPECT_THROW(data::resolve_split(data::SplitSpec{}, 10), ConfigError);
  data::SplitSpec bad;
  bad.train.fraction = 1.5;
  EXPECT_THROW(data::resolve_split(bad, 10), ConfigError);
}

TEST(Split, JsonRoundTrip) {
  data::SplitSpec spec = data::SplitSpec::counts(5, 1, 2, 9);
  spec.val.count.reset();
  spec.val.fraction = 0.25;
  const auto back = data::SplitSpec::from_json(spec.to_json());
  EXPECT_EQ(back.to_json(), spec.to_json());
  EXPECT_THROW(data::SplitSpec::from_json({{"train", "most"}}), ConfigError);
  EXPECT_THROW(data::SplitSpec::from_json({{"training", 3}}), ConfigError);
}

TEST(Split, RandomSplitsAreDisjointAndConserveRecords) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 3 + gen() % 60;
    const data::FaceDataset ds = tiny_dataset(n, "t");
    const std::size_t train = gen() % (n + 1), val = gen() % (n - train + 1);
    const auto s = data::split_by_identity(ds, data::SplitSpec::counts(train, val, n - train - val, gen()));
    EXPECT_EQ(identity_overlap(s.train, s.val), 0u);
    EXPECT_EQ(identity_overlap(s.train, s.test), 0u);
    EXPECT_EQ(identity_overlap(s.val, s.test), 0u);
    EXPECT_EQ(s.train.size() + s.val.size() + s.test.size(), ds.size());
    EXPECT_EQ(s.train.identity_count(), train);
  }
}

TEST(Split, DeterministicInSeed) {
  TempDir dir;
  const data::FaceDataset ds = data::save_dataset(tiny_dataset(30), dir.path());
  const auto a = data::split_by_identity(ds, data::SplitSpec::counts(20, 4, 6, 5));
  const auto b = data::split_by_identity(ds, data::SplitSpec::counts(20, 4, 6, 5));
  const auto c = data::split_by_identity(ds, data::SplitSpec::counts(20, 4, 6, 6));
  EXPECT_EQ(data::format_manifest(a.train, dir / "x.csv"), data::format_manifest(b.train, dir / "x.csv"));
  EXPECT_NE(data::format_manifest(a.train, dir / "x.csv"), data::format_manifest(c.train, dir / "x.csv"));
}

TEST(Mixing, ZeroUnitsReturnsRealSet) {
  const auto real = tiny_dataset(5);
  const auto pool = tiny_dataset(20, "g", data::Provenance::kGenerated);
  const auto mixed = data::mix(real, 0, pool);
  EXPECT_EQ(mixed.identities(), real.identities());
  EXPECT_EQ(mixed.size(), real.size());
}

TEST(Mixing, UnitArithmetic) {
  const auto real = tiny_dataset(109);
  const auto pool = tiny_dataset(109 * 5, "g", data::Provenance::kGenerated);
  const auto two = data::mix(real, 2, pool);
  EXPECT_EQ(two.identity_count(), 327u);
  const auto five = data::mix(real, 5, pool);
  EXPECT_EQ(five.identity_count(), 654u);
  EXPECT_EQ(five.size(), 3924u);
  for (auto c : class_counts(five)) EXPECT_EQ(c, 654u);
  EXPECT_THROW(data::mix(real, 6, pool), DataError);
}

TEST(Mixing, RandomSizesMatchUnitFormula) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t r = 1 + gen() % 12, k = gen() % 21;
    const auto real = tiny_dataset(r);
    const auto pool = tiny_dataset(r * k + gen() % 5, "g", data::Provenance::kGenerated);
    const auto mixed = data::mix(real, k, pool);
    EXPECT_EQ(mixed.identity_count(), r * (1 + k));
    for (auto c : class_counts(mixed)) EXPECT_EQ(c, r + k * r);
  }
}

TEST(Mixing, LargerKExtendsSmallerKInPoolOrder) {
  const auto real = tiny_dataset(4);
  const auto pool = data::shuffle_identities(tiny_dataset(40, "g", data::Provenance::kGenerated), 3);
  const auto one = data::mix(real, 1, pool), three = data::mix(real, 3, pool);
  for (const auto& id : one.identities()) EXPECT_TRUE(three.contains_identity(id));
  const std::vector<std::string> expected(pool.identities().begin(), pool.identities().begin() + 12);
  const std::vector<std::string> got(three.identities().begin() + 4, three.identities().end());
  EXPECT_EQ(got, expected);
}

TEST(Cache, StoresAndKeysByOptions) {
  TempDir dir;
  data::PreprocessCache cache(dir / "cache");
  const ImageTensor img(4, 4, 1, 0.25f);
  const std::string k1 = data::PreprocessCache::key("abc", {64, 0.8}, std::nullopt);
  const std::string k2 = data::PreprocessCache::key("abc", {32, 0.8}, std::nullopt);
  const std::string k3 = data::PreprocessCache::key("abc", {64, 0.8}, data::FaceBox{1, 2, 3, 4});
  EXPECT_NE(k1, k2);
  EXPECT_NE(k1, k3);
  EXPECT_FALSE(cache.get(k1));
  cache.put(k1, img);
  EXPECT_EQ(cache.get(k1), img);
  EXPECT_EQ(cache.hits(), 1u);
}

TEST(Cache, LoadCorpusReusesEntries) {
  TempDir dir;
  data::save_dataset(tiny_dataset(2, "c", data::Provenance::kReal, 12), dir / "ds");
  data::PreprocessCache cache(dir / "cache");
  const auto first = data::load_corpus(dir / "ds" / "manifest.csv", {8, 0.8}, &cache);
  EXPECT_EQ(cache.hits(), 0u);
  const auto second = data::load_corpus(dir / "ds" / "manifest.csv", {8, 0.8}, &cache);
  EXPECT_EQ(cache.hits(), first.size());
  for (std::size_t i = 0; i < first.size(); ++i) EXPECT_EQ(first[i].image, second[i].image);
}

}  // namespace
}  // namespace fergan
