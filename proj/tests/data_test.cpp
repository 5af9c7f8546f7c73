// Copyright 2026 The posereg Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "posereg/dataset.hpp"
#include "posereg/errors.hpp"
#include "posereg/image.hpp"

namespace posereg {
namespace {

namespace fs = std::filesystem;

const fs::path kFixtures = POSEREG_FIXTURE_DIR;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("posereg_data_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

DatasetManifest parse(const std::string& text, bool check_files = false) {
  return parse_manifest(text, "inline_train.txt", ".", ManifestOptions{check_files, ""});
}

TEST(ManifestTest, IdentityLine) {
  const auto m = parse("seq1/img0.png 0 0 0 1 0 0 0\n");
  ASSERT_EQ(m.records.size(), 1u);
  EXPECT_EQ(m.records[0].path, "seq1/img0.png");
  EXPECT_EQ(m.records[0].pose, Pose{});
  EXPECT_EQ(m.split, "train");
}

TEST(ManifestTest, QuaternionNormalizedAndCanonicalizedAtLoad) {
  EXPECT_EQ(parse("a.png 0 0 0 2 0 0 0").records[0].pose.q, (Quat{1, 0, 0, 0}));
  EXPECT_EQ(parse("a.png 0 0 0 -2 0 0 0").records[0].pose.q, (Quat{1, 0, 0, 0}));
  const Quat q = parse("a.png 0 0 0 -1 -1 0 0").records[0].pose.q;
  EXPECT_GT(q[0], 0.0);
  EXPECT_NEAR(q[0], std::sqrt(0.5), 1e-15);
}

TEST(ManifestTest, CommentsFrameNoteAndCambridgeHeader) {
  const auto m = parse(
      "Visual Landmark Dataset V1\n"
      "ImageFile, Camera Position [X Y Z W P Q R]\n"
      "\n"
      "# frame: world, meters\n"
      "a.png 1 2 3 1 0 0 0  # trailing comment\n");
  EXPECT_EQ(m.frame_note, "world, meters");
  ASSERT_EQ(m.records.size(), 1u);
  EXPECT_EQ(m.records[0].pose.p, (Vec3{1, 2, 3}));
}

TEST(ManifestTest, ParseErrorCarriesLineAndColumn) {
  try {
    parse("a.png 0 0 0 1 0 0 0\nb.png 0 0 zz 1 0 0 0\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.column(), 11u);
  }
  try {
    parse("a.png 0 0 0 1 0 0\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
}

TEST(ManifestTest, DataErrors) {
  EXPECT_THROW(parse("a.png 0 nan 0 1 0 0 0"), DataError);
  EXPECT_THROW(parse("a.png 0 0 0 0 0 0 0"), DataError);
  EXPECT_THROW(parse("a.png 0 0 0 1 0 0 0\na.png 1 0 0 1 0 0 0"), DataError);
}

TEST(ManifestTest, MissingFileErrorNamesTheFile) {
  const fs::path dir = scratch_dir("missing");
  std::ofstream(dir / "dataset_test.txt") << "nothere/img.ppm 0 0 0 1 0 0 0\n";
  try {
    load_manifest(dir / "dataset_test.txt");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("nothere/img.ppm"), std::string::npos);
  }
}

TEST(ManifestTest, CambridgeFixtureLoadsWithFiles) {
  const auto m = load_manifest(kFixtures / "cambridge" / "dataset_train.txt");
  ASSERT_EQ(m.records.size(), 3u);
  EXPECT_EQ(m.split, "train");
  EXPECT_EQ(m.records[2].path, "seq1/frame00003.ppm");
  for (const auto& r : m.records) {
    const Quat& q = r.pose.q;
    EXPECT_NEAR(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3], 1.0, 1e-12);
    EXPECT_GE(q[0], 0.0);
  }
  EXPECT_NEAR(m.records[0].pose.p[0], -7.592718, 1e-15);
}

TEST(ManifestTest, RoundTripIsExact) {
  const fs::path dir = scratch_dir("roundtrip");
  const auto m = load_manifest(kFixtures / "cambridge" / "dataset_train.txt");
  save_manifest(dir / "copy_train.txt", m);
  const ManifestOptions opts{false, ""};
  const auto again = load_manifest(dir / "copy_train.txt", opts);
  EXPECT_EQ(again.records, m.records);
  EXPECT_EQ(again.frame_note, m.frame_note);
  save_manifest(dir / "copy2_train.txt", again);
  EXPECT_EQ(serialize_manifest(load_manifest(dir / "copy2_train.txt", opts)),
            serialize_manifest(m));
}

TEST(ImageTest, PpmReadWriteRoundTrip) {
  const fs::path dir = scratch_dir("ppm");
  Image img = Image::filled(5, 7, 10);
  img.at(2, 3, 1) = 200;
  write_ppm(dir / "a.ppm", img);
  EXPECT_EQ(read_ppm(dir / "a.ppm"), img);
  const Image ascii = read_ppm(kFixtures / "cambridge" / "seq1" / "frame00001.ppm");
  EXPECT_EQ(ascii.width, 6u);
  EXPECT_EQ(ascii.height, 4u);
  EXPECT_EQ(ascii.at(1, 0, 2), 85);
}

TEST(ImageTest, ResizeShorterSide) {
  const Image img = Image::filled(40, 80, 7);
  const Image r = resize_shorter_side(img, 20);
  EXPECT_EQ(r.height, 20u);
  EXPECT_EQ(r.width, 40u);
  EXPECT_EQ(r.at(10, 10, 0), 7);
  EXPECT_EQ(resize_shorter_side(img, 0), img);
}

TEST(MeanImageTest, Examples) {
  const Image a = Image::filled(4, 4, 0), b = Image::filled(4, 4, 100);
  const std::vector<Image> one{b};
  const MeanImage m1 = compute_mean_image(one);
  for (double v : m1.values) EXPECT_EQ(v, 100.0);
  const std::vector<Image> two{a, b};
  for (double v : compute_mean_image(two).values) EXPECT_EQ(v, 50.0);
  Image c = Image::filled(4, 4, 0);
  for (std::size_t i = 0; i < c.pixels.size(); ++i) c.pixels[i] = static_cast<std::uint8_t>(i * 5 % 256);
  const std::vector<Image> copies(9, c);
  const MeanImage mc = compute_mean_image(copies);
  for (std::size_t i = 0; i < c.pixels.size(); ++i) EXPECT_NEAR(mc.values[i], c.pixels[i], 1e-9);
  EXPECT_THROW(compute_mean_image(std::span<const Image>{}), UsageError);
  const std::vector<Image> mixed{a, Image::filled(5, 4, 0)};
  EXPECT_THROW(compute_mean_image(mixed), DataError);
}

TEST(PreprocessTest, CentralCropIsDeterministicAndFullCropSubtractsMean) {
  Image img = Image::filled(6, 8, 0);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<std::uint8_t>(i % 251);
  const std::vector<Image> train{img, Image::filled(6, 8, 30)};
  const MeanImage mean = compute_mean_image(train);
  Rng r1(1), r2(2);
  EXPECT_EQ(preprocess(img, mean, Mode::eval, 4, r1), preprocess(img, mean, Mode::eval, 4, r2));

  Image sq = Image::filled(4, 4, 0);
  for (std::size_t i = 0; i < sq.pixels.size(); ++i) sq.pixels[i] = static_cast<std::uint8_t>(i * 3);
  const std::vector<Image> only{Image::filled(4, 4, 20)};
  const Tensor t = preprocess(sq, compute_mean_image(only), Mode::train, 4, r1);
  for (std::size_t i = 0; i < sq.pixels.size(); ++i) {
    EXPECT_DOUBLE_EQ(t[i], (sq.pixels[i] - 20.0) / 255.0);
  }
}

TEST(PreprocessTest, TrainCropsAreSeededAndVary) {
  Image img = Image::filled(16, 16, 0);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<std::uint8_t>(i % 253);
  const std::vector<Image> train{img};
  const MeanImage mean = compute_mean_image(std::vector<Image>{Image::filled(16, 16, 0)});
  Rng a(9), b(9);
  std::set<Storage> seen;
  for (int i = 0; i < 10; ++i) {
    const Tensor x = preprocess(img, mean, Mode::train, 8, a);
    EXPECT_EQ(x, preprocess(img, mean, Mode::train, 8, b));
    seen.insert(x.storage());
  }
  EXPECT_GT(seen.size(), 1u);
  EXPECT_THROW(preprocess(img, mean, Mode::eval, 17, a), DataError);
}

TEST(MeanImageTest, DependsOnlyOnTrainingSplit) {
  const fs::path dir = scratch_dir("mean");
  Image a = Image::filled(8, 8, 10), b = Image::filled(8, 8, 90), t = Image::filled(8, 8, 200);
  fs::create_directories(dir / "img");
  write_ppm(dir / "img" / "a.ppm", a);
  write_ppm(dir / "img" / "b.ppm", b);
  write_ppm(dir / "img" / "t.ppm", t);
  std::ofstream(dir / "dataset_train.txt") << "img/a.ppm 0 0 0 1 0 0 0\nimg/b.ppm 1 0 0 1 0 0 0\n";
  std::ofstream(dir / "dataset_test.txt") << "img/t.ppm 0 0 0 1 0 0 0\n";
  auto mean_of = [&] {
    const DataSplit s = load_images(load_manifest(dir / "dataset_train.txt"), 0);
    std::vector<Image> imgs;
    for (const auto& x : s.samples) imgs.push_back(x.image());
    return compute_mean_image(imgs);
  };
  const MeanImage before = mean_of();
  write_ppm(dir / "img" / "t.ppm", Image::filled(8, 8, 7));
  EXPECT_EQ(mean_of(), before);
}

TEST(FeatureStoreTest, RoundTripIsBitwise) {
  const fs::path dir = scratch_dir("store");
  FeatureStore store(3);
  store.add("a", Tensor::row({0.1, -2.5, 1e-300}));
  store.add("b", Tensor::row({std::nextafter(1.0, 2.0), 0.0, -0.0}));
  store.save(dir / "f.prfs");
  const FeatureStore back = FeatureStore::load(dir / "f.prfs");
  EXPECT_EQ(back, store);
  EXPECT_EQ(back.get("b").storage(), store.get("b").storage());
  EXPECT_THROW(back.get("zzz"), DataError);
  EXPECT_THROW(store.add("c", Tensor::row({1, 2})), DimensionError);
}

TEST(FeatureStoreTest, ExtractFeaturesLooksUpById) {
  FeatureStore store(2);
  store.add("x", Tensor::row({1, 2}));
  Sample s;
  s.id = "x";
  EXPECT_EQ(extract_features(store, s), Tensor::row({1, 2}));
  s.id = "y";
  EXPECT_THROW(extract_features(store, s), DataError);
}

TEST(FeatureStoreTest, RejectsCorruptFiles) {
  const fs::path dir = scratch_dir("corrupt");
  std::ofstream(dir / "bad.prfs") << "NOPE";
  EXPECT_THROW(FeatureStore::load(dir / "bad.prfs"), DataError);
}

TEST(SynthTest, SameSeedIsBitwiseIdentical) {
  SynthSpec spec;
  const SynthScene a = synth_scene(spec), b = synth_scene(spec);
  ASSERT_EQ(a.train.samples.size(), 200u);
  ASSERT_EQ(a.test.samples.size(), 50u);
  for (std::size_t i = 0; i < a.train.samples.size(); ++i) {
    EXPECT_EQ(a.train.samples[i].feature(), b.train.samples[i].feature());
    EXPECT_EQ(a.train.samples[i].pose, b.train.samples[i].pose);
  }
  spec.seed = 8;
  EXPECT_NE(synth_scene(spec).train.samples[0].pose, a.train.samples[0].pose);
}

TEST(SynthTest, PosesInBoxAndCanonical) {
  SynthSpec spec;
  const SynthScene s = synth_scene(spec);
  for (const auto& x : s.train.samples) {
    for (double c : x.pose.p) EXPECT_LE(std::abs(c), spec.extent_m / 2);
    const Quat& q = x.pose.q;
    EXPECT_NEAR(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3], 1.0, 1e-12);
    EXPECT_GE(q[0], 0.0);
  }
}

TEST(SynthTest, IdenticalPosesGiveIdenticalNoiselessFeatures) {
  const SynthFeatureMap map(SynthSpec{});
  const Pose p{{1, -2, 0.5}, quat_canonicalize(quat_normalize({0.3, -0.2, 0.9, 0.1}))};
  EXPECT_EQ(map(p), map(p));
}

TEST(SynthTest, NearestNeighbourBaselineFindsPoseSignal) {
  SynthSpec spec;
  const SynthScene s = synth_scene(spec);
  std::vector<std::vector<double>> rf, qf;
  std::vector<std::array<double, 3>> rp, qp;
  for (const auto& x : s.train.samples) {
    rf.emplace_back(x.feature().data().begin(), x.feature().data().end());
    rp.push_back(x.pose.p);
  }
  for (const auto& x : s.test.samples) {
    qf.emplace_back(x.feature().data().begin(), x.feature().data().end());
    qp.push_back(x.pose.p);
  }
  EXPECT_LT(oracle::nearest_neighbour_median_pos(rf, rp, qf, qp), spec.extent_m / 4);
}

TEST(SynthTest, ValidatesSpec) {
  SynthSpec spec;
  spec.n_train = 9;
  EXPECT_THROW(synth_scene(spec), ConfigError);
  spec = SynthSpec{};
  spec.extent_m = 0;
  EXPECT_THROW(synth_scene(spec), ConfigError);
}

}  // namespace
}  // namespace posereg
