#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include "aeaudit/datagen.hpp"
#include "aeaudit/error.hpp"
#include "oracles.hpp"

using namespace aeaudit;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("aeaudit_datagen_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no aeaudit::Error raised";
  return ErrorKind::Io;
}

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

void put_be32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) b.push_back(std::uint8_t(v >> s));
}

// Tiny IDX pair written by hand: `count` 2×3 images with pixel (k + p) % 256.
void write_idx_pair(const fs::path& img, const fs::path& lbl, const std::vector<int>& labels) {
  std::vector<std::uint8_t> a, b;
  put_be32(a, 2051);
  put_be32(a, std::uint32_t(labels.size()));
  put_be32(a, 2);
  put_be32(a, 3);
  for (std::size_t k = 0; k < labels.size(); ++k)
    for (int p = 0; p < 6; ++p) a.push_back(std::uint8_t((k * 40 + p * 51) % 256));
  put_be32(b, 2049);
  put_be32(b, std::uint32_t(labels.size()));
  for (int l : labels) b.push_back(std::uint8_t(l));
  write_bytes(img, a);
  write_bytes(lbl, b);
}

}  // namespace

TEST(Generate, SameSeedIsBitIdentical) {
  for (Family f : {Family::Gaussian, Family::DoubleGaussian, Family::Banana, Family::Diagonal}) {
    SyntheticSpec s;
    s.family = f;
    s.seed = 99;
    s.samples_per_component = 50;
    const Dataset a = generate(s), b = generate(s);
    EXPECT_EQ(a.x, b.x) << to_string(f);
    s.seed = 100;
    EXPECT_NE(generate(s).x, a.x) << to_string(f);
  }
}

TEST(Generate, RowCountsPerFamily) {
  SyntheticSpec s;
  s.samples_per_component = 37;
  s.family = Family::Gaussian;
  EXPECT_EQ(generate(s).size(), 37u);
  s.family = Family::DoubleGaussian;
  const Dataset dg = generate(s);
  EXPECT_EQ(dg.size(), 74u);
  ASSERT_TRUE(dg.labels.has_value());
  EXPECT_EQ((*dg.labels)[0], 0);
  EXPECT_EQ((*dg.labels)[73], 1);
  s.family = Family::Banana;
  EXPECT_EQ(generate(s).dim(), 2u);
}

TEST(Generate, NoiselessBananaLiesOnParabola) {
  SyntheticSpec s;
  s.family = Family::Banana;
  s.noise = 0.0;
  s.samples_per_component = 500;
  const Dataset d = generate(s);
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(d.x(i, 1), d.x(i, 0) * d.x(i, 0));
    EXPECT_GE(d.x(i, 0), s.x_lo);
    EXPECT_LE(d.x(i, 0), s.x_hi);
  }
}

TEST(Generate, DiagonalRowsHaveEqualCoordinatesInRange) {
  SyntheticSpec s;
  s.family = Family::Diagonal;
  s.alpha_lo = -1;
  s.alpha_hi = 4;
  s.samples_per_component = 300;
  const Dataset d = generate(s);
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(d.x(i, 0), d.x(i, 1));
    EXPECT_GE(d.x(i, 0), -1.0);
    EXPECT_LE(d.x(i, 0), 4.0);
  }
}

TEST(Generate, GaussianMomentsMatchRequestedCovariance) {
  SyntheticSpec s;
  s.family = Family::Gaussian;
  s.samples_per_component = 40000;
  s.seed = 3;
  s.components = {{{1.0, -2.0}, Matrix{{2.0, 0.6}, {0.6, 0.5}}}};
  const Dataset d = generate(s);
  long double m0 = 0, m1 = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    m0 += d.x(i, 0);
    m1 += d.x(i, 1);
  }
  m0 /= d.size();
  m1 /= d.size();
  long double c00 = 0, c01 = 0, c11 = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const long double a = d.x(i, 0) - m0, b = d.x(i, 1) - m1;
    c00 += a * a;
    c01 += a * b;
    c11 += b * b;
  }
  const double n = double(d.size() - 1);
  EXPECT_NEAR(double(m0), 1.0, 0.03);
  EXPECT_NEAR(double(m1), -2.0, 0.02);
  EXPECT_NEAR(double(c00) / n, 2.0, 0.06);
  EXPECT_NEAR(double(c01) / n, 0.6, 0.03);
  EXPECT_NEAR(double(c11) / n, 0.5, 0.015);
}

TEST(Generate, RejectsInvalidParameters) {
  SyntheticSpec s;
  s.samples_per_component = 0;
  EXPECT_EQ(kind_of([&] { generate(s); }), ErrorKind::InputDomain);
  s = {};
  s.components = {{{0.0, 0.0}, Matrix{{1.0, 2.0}, {2.0, 1.0}}}};
  EXPECT_EQ(kind_of([&] { generate(s); }), ErrorKind::InputDomain);
  s = {};
  s.family = Family::Banana;
  s.noise = -1;
  EXPECT_EQ(kind_of([&] { generate(s); }), ErrorKind::InputDomain);
  EXPECT_EQ(kind_of([] { family_from_string("spiral"); }), ErrorKind::InputDomain);
}

TEST(SpecJson, RoundTripsResolvedSpec) {
  SyntheticSpec s;
  s.family = Family::DoubleGaussian;
  s.seed = 17;
  s.samples_per_component = 12;
  const std::string text = synthetic_spec_to_json(s);
  const SyntheticSpec back = synthetic_spec_from_json(text);
  EXPECT_EQ(synthetic_spec_to_json(back), text);
  EXPECT_EQ(generate(back).x, generate(s).x);
  EXPECT_EQ(kind_of([] { synthetic_spec_from_json(R"({"family":"banana","colour":1})"); }),
            ErrorKind::Format);
}

TEST(Csv, RoundTripIsBitExact) {
  std::mt19937_64 gen(5);
  Dataset d;
  d.x = oracle::random_matrix(40, 3, gen, 1e3);
  d.x(0, 0) = 0.1;
  d.x(1, 1) = 1e-300;
  d.x(2, 2) = -0.0;
  d.x(3, 0) = 123456789.123456789;
  const fs::path p = temp_dir("csv") / "x.csv";
  save_csv(d, p);
  const Dataset back = load_csv(p, true);
  ASSERT_EQ(back.size(), 40u);
  for (std::size_t i = 0; i < 40; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(back.x(i, j), d.x(i, j));
}

TEST(Csv, LabelColumnIsSplitOff) {
  const fs::path p = temp_dir("label") / "x.csv";
  std::ofstream(p) << "a,label,b\n1,7,2\n3,8,4\n";
  const Dataset d = load_csv(p, true);
  EXPECT_EQ(d.dim(), 2u);
  ASSERT_TRUE(d.labels);
  EXPECT_EQ((*d.labels)[1], 8);
  EXPECT_EQ(d.x(1, 1), 4.0);
}

TEST(Csv, MalformedInputsRaiseTypedErrors) {
  const fs::path dir = temp_dir("bad");
  std::ofstream(dir / "ragged.csv") << "1,2\n3\n";
  std::ofstream(dir / "text.csv") << "1,2\n3,abc\n";
  std::ofstream(dir / "nan.csv") << "1,2\nnan,4\n";
  EXPECT_EQ(kind_of([&] { load_csv(dir / "ragged.csv", false); }), ErrorKind::Format);
  EXPECT_EQ(kind_of([&] { load_csv(dir / "text.csv", false); }), ErrorKind::Format);
  EXPECT_NE(kind_of([&] { load_csv(dir / "nan.csv", false); }), ErrorKind::Io);
  EXPECT_EQ(kind_of([&] { load_csv(dir / "absent.csv", false); }), ErrorKind::Io);
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1.0), "1");
  std::mt19937_64 gen(8);
  for (int i = 0; i < 1000; ++i) {
    const double v = oracle::random_vector(1, gen, 1e5)[0];
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

TEST(Mnist, HandWrittenIdxPairParses) {
  const fs::path dir = temp_dir("idx");
  write_idx_pair(dir / "img", dir / "lbl", {3, 1, 3, 3, 0});
  const Dataset all = load_mnist(dir / "img", dir / "lbl", {}, 0);
  ASSERT_EQ(all.size(), 5u);
  ASSERT_TRUE(all.image);
  EXPECT_EQ(all.image->height, 2u);
  EXPECT_EQ(all.image->width, 3u);
  EXPECT_DOUBLE_EQ(all.x(1, 1), ((40 + 51) % 256) / 255.0);
  const Dataset threes = load_mnist(dir / "img", dir / "lbl", {3}, 2);
  ASSERT_EQ(threes.size(), 2u);
  EXPECT_EQ(threes.x.row_vector(1), all.x.row_vector(2));
}

TEST(Mnist, BadMagicAndTruncationAreFormatErrors) {
  const fs::path dir = temp_dir("idxbad");
  write_idx_pair(dir / "img", dir / "lbl", {1, 2});
  write_bytes(dir / "lbl_bad", {0, 0, 8, 2, 0, 0, 0, 2, 1, 2});
  EXPECT_EQ(kind_of([&] { load_mnist(dir / "img", dir / "lbl_bad", {}, 0); }), ErrorKind::Format);
  write_bytes(dir / "img_short", {0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 3, 9});
  EXPECT_EQ(kind_of([&] { load_mnist(dir / "img_short", dir / "lbl", {}, 0); }), ErrorKind::Format);
  write_bytes(dir / "img_hdr", {0, 0, 8});
  EXPECT_EQ(kind_of([&] { load_mnist(dir / "img_hdr", dir / "lbl", {}, 0); }), ErrorKind::Format);
  write_idx_pair(dir / "img3", dir / "lbl3", {1, 2, 3});
  EXPECT_EQ(kind_of([&] { load_mnist(dir / "img", dir / "lbl3", {}, 0); }), ErrorKind::Format);
  EXPECT_EQ(kind_of([&] { load_mnist(dir / "none", dir / "lbl", {}, 0); }), ErrorKind::Io);
}

TEST(Mnist, BundledSubsetHeaderAndScaling) {
  const fs::path dir = AEAUDIT_MNIST_DIR;
  const fs::path img = dir / "mnist5k-images-idx3-ubyte", lbl = dir / "mnist5k-labels-idx1-ubyte";
  if (!fs::exists(img)) GTEST_SKIP() << "MNIST subset not present";
  std::ifstream in(img, std::ios::binary);
  unsigned char h[16];
  in.read(reinterpret_cast<char*>(h), 16);
  auto be = [&](int o) { return (std::uint32_t(h[o]) << 24) | (h[o + 1] << 16) | (h[o + 2] << 8) | h[o + 3]; };
  EXPECT_EQ(be(0), 2051u);
  EXPECT_EQ(be(4), 5000u);
  EXPECT_EQ(be(8), 28u);
  EXPECT_EQ(be(12), 28u);
  const Dataset d = load_mnist(img, lbl, {0, 1}, 0);
  EXPECT_EQ(d.size(), 1000u);
  EXPECT_EQ(d.dim(), 784u);
  double lo = 1, hi = 0;
  for (double v : d.x.data()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EXPECT_EQ(lo, 0.0);
  EXPECT_EQ(hi, 1.0);
  for (int l : *d.labels) EXPECT_TRUE(l == 0 || l == 1);
}

TEST(Standardize, ZeroMeanUnitVarianceAndInverse) {
  std::mt19937_64 gen(9);
  Matrix x = oracle::random_matrix(200, 3, gen, 4.0);
  for (std::size_t i = 0; i < 200; ++i) x(i, 2) = 7.0;  // constant column
  const Standardization st = fit_standardization(x);
  EXPECT_EQ(st.scale[2], 1.0);
  const Matrix z = st.apply(x);
  for (std::size_t j = 0; j < 2; ++j) {
    double m = 0, v = 0;
    for (std::size_t i = 0; i < 200; ++i) m += z(i, j);
    m /= 200;
    for (std::size_t i = 0; i < 200; ++i) v += (z(i, j) - m) * (z(i, j) - m);
    EXPECT_NEAR(m, 0.0, 1e-12);
    // Either population or sample variance is accepted as "unit".
    EXPECT_NEAR(v / 200, 1.0, 0.01);
  }
  const Vector back = st.invert(st.apply(x.row(5)));
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(back[j], x(5, j), 1e-12);
}

TEST(Validate, RejectsNonFiniteAndLabelMismatch) {
  Dataset d;
  d.x = Matrix{{1, 2}, {3, 4}};
  d.labels = std::vector<int>{1};
  EXPECT_EQ(kind_of([&] { validate(d); }), ErrorKind::InputDomain);
  d.labels.reset();
  d.x(1, 0) = INFINITY;
  EXPECT_EQ(kind_of([&] { validate(d); }), ErrorKind::InputDomain);
}

TEST(Generate, UnitGaussianSampleMeanNearConfiguredMean) {
  SyntheticSpec s;
  s.seed = 7;
  s.samples_per_component = 100;
  s.components = {{{2.0, -1.0}, Matrix::identity(2)}};
  const Vector mu = column_means(generate(s).x);
  EXPECT_NEAR(mu[0], 2.0, 0.5);
  EXPECT_NEAR(mu[1], -1.0, 0.5);
}

TEST(Mnist, CapPerDigitOnBundledSubset) {
  const fs::path dir = AEAUDIT_MNIST_DIR;
  const fs::path img = dir / "mnist5k-images-idx3-ubyte", lbl = dir / "mnist5k-labels-idx1-ubyte";
  if (!fs::exists(img)) GTEST_SKIP() << "MNIST subset not present";
  const Dataset d = load_mnist(img, lbl, {4, 5, 7}, 10);
  EXPECT_EQ(d.size(), 30u);
  int counts[10] = {};
  for (int l : *d.labels) ++counts[l];
  EXPECT_EQ(counts[4], 10);
  EXPECT_EQ(counts[5], 10);
  EXPECT_EQ(counts[7], 10);
}

TEST(Csv, SmallHandFiles) {
  const fs::path dir = temp_dir("small");
  std::ofstream(dir / "ab.csv") << "a,b\n1,2\n3,4";
  const Dataset d = load_csv(dir / "ab.csv", true);
  EXPECT_EQ(d.x, (Matrix{{1, 2}, {3, 4}}));
  EXPECT_EQ(d.feature_names, (std::vector<std::string>{"a", "b"}));
  std::ofstream(dir / "one.csv") << "5,6,7\n";
  EXPECT_EQ(load_csv(dir / "one.csv", false).size(), 1u);
}
