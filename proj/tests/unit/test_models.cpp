#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "aeaudit/error.hpp"
#include "aeaudit/models.hpp"
#include "aeaudit/training.hpp"
#include "oracles.hpp"

using namespace aeaudit;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no aeaudit::Error raised";
  return ErrorKind::Io;
}

void fill_random(Layer& l, std::mt19937_64& gen) {
  std::normal_distribution<double> nd(0, 0.5);
  for (double& w : l.weights) w = nd(gen);
  for (double& b : l.bias) b = nd(gen);
}

// Direct 2-D cross-correlation with zero padding.
std::vector<double> naive_conv(const std::vector<double>& x, std::size_t cin, std::size_t h,
                               std::size_t w, const std::vector<double>& wt,
                               const std::vector<double>& bias, std::size_t cout, std::size_t k,
                               std::size_t s, std::size_t p) {
  const std::size_t oh = (h + 2 * p - k) / s + 1, ow = (w + 2 * p - k) / s + 1;
  std::vector<double> y(cout * oh * ow);
  for (std::size_t o = 0; o < cout; ++o)
    for (std::size_t r = 0; r < oh; ++r)
      for (std::size_t c = 0; c < ow; ++c) {
        long double acc = bias.empty() ? 0 : bias[o];
        for (std::size_t i = 0; i < cin; ++i)
          for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < k; ++b) {
              const long rr = long(r * s + a) - long(p), cc = long(c * s + b) - long(p);
              if (rr < 0 || cc < 0 || rr >= long(h) || cc >= long(w)) continue;
              acc += (long double)wt[((o * cin + i) * k + a) * k + b] * x[(i * h + rr) * w + cc];
            }
        y[(o * oh + r) * ow + c] = double(acc);
      }
  return y;
}

double dotv(const std::vector<double>& a, const std::vector<double>& b) {
  long double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (long double)a[i] * b[i];
  return double(s);
}

}  // namespace

TEST(Pca, TrainingLossEqualsDiscardedEnergy) {
  std::mt19937_64 gen(1);
  Matrix x = oracle::random_matrix(300, 6, gen);
  for (std::size_t i = 0; i < 300; ++i) {
    x(i, 0) *= 5;
    x(i, 1) *= 3;
    x(i, 3) += 10;
  }
  for (std::size_t d = 1; d <= 5; ++d) {
    const PcaModel m = pca_fit(x, d);
    ASSERT_EQ(m.latent_dim(), d);
    double loss = 0;
    for (std::size_t i = 0; i < 300; ++i) loss += oracle::mse(x.row_vector(i), reconstruct(Model(m), x.row(i)));
    loss /= 300;
    double tail = 0;
    for (std::size_t k = d; k < m.sigma.size(); ++k) tail += m.sigma[k] * m.sigma[k];
    EXPECT_NEAR(loss, tail / (300.0 * 6.0), 1e-12);
  }
}

TEST(Pca, NoRandomSubspaceBeatsTheFit) {
  std::mt19937_64 gen(2);
  Matrix x = oracle::random_matrix(200, 4, gen);
  for (std::size_t i = 0; i < 200; ++i) x(i, 2) *= 4;
  const PcaModel m = pca_fit(x, 2);
  double fitted = 0;
  for (std::size_t i = 0; i < 200; ++i) fitted += oracle::mse(x.row_vector(i), pca_decode(m, pca_encode(m, x.row(i))));
  for (int t = 0; t < 200; ++t) {
    PcaModel r = m;
    r.v_d = orthonormal_basis(oracle::random_matrix(4, 2, gen));
    double other = 0;
    for (std::size_t i = 0; i < 200; ++i) other += oracle::mse(x.row_vector(i), pca_decode(r, pca_encode(r, x.row(i))));
    EXPECT_GE(other, fitted - 1e-9);
  }
}

TEST(Pca, ExactSubspaceIsRecovered) {
  // Rows of the form x̄ + s·u + t·w for fixed u, w.
  const Vector u{1, 2, 0, -1}, w{0, 1, 1, 1}, mu{3, -1, 2, 0.5};
  std::mt19937_64 gen(3);
  Matrix x(50, 4);
  for (std::size_t i = 0; i < 50; ++i) {
    const auto st = oracle::random_vector(2, gen, 3.0);
    for (std::size_t j = 0; j < 4; ++j) x(i, j) = mu[j] + st[0] * u[j] + st[1] * w[j];
  }
  const PcaModel m = pca_fit(x, 2);
  Matrix span(4, 2);
  span.set_col(0, u);
  span.set_col(1, w);
  for (double a : principal_angles(m.v_d, span)) EXPECT_LT(a, 1e-7);
  for (std::size_t i = 0; i < 50; ++i)
    EXPECT_LT(oracle::mse(x.row_vector(i), reconstruct(Model(m), x.row(i))), 1e-24);
  EXPECT_LT(orthonormality_error(m.v_d), 1e-13);
}

TEST(Pca, InvalidLatentWidth) {
  const Matrix x{{1, 2}, {3, 4}, {5, 7}};
  EXPECT_EQ(kind_of([&] { pca_fit(x, 0); }), ErrorKind::InputDomain);
  EXPECT_EQ(kind_of([&] { pca_fit(x, 3); }), ErrorKind::InputDomain);
}

TEST(Layers, ConvMatchesDirectLoops) {
  std::mt19937_64 gen(4);
  for (auto [k, s, p] : {std::tuple{3, 2, 1}, std::tuple{3, 1, 0}, std::tuple{2, 2, 0}, std::tuple{5, 1, 2}}) {
    Layer l = conv_layer({2, 9, 8}, 3, k, s, p, Activation::Linear);
    fill_random(l, gen);
    const auto x = oracle::random_vector(2 * 9 * 8, gen);
    const auto want = naive_conv(x, 2, 9, 8, l.weights, l.bias, 3, k, s, p);
    const auto got = layer_forward(l, x);
    ASSERT_EQ(got.size(), want.size());
    EXPECT_EQ(l.out.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
  }
}

TEST(Layers, UpConvIsTheAdjointOfConv) {
  std::mt19937_64 gen(5);
  for (auto [h, k, s, p, op] : {std::tuple{8, 3, 2, 1, 1}, std::tuple{7, 3, 2, 1, 0}, std::tuple{6, 3, 1, 1, 0},
                                std::tuple{9, 4, 2, 1, 1}}) {
    Layer c = conv_layer({2, std::size_t(h), std::size_t(h)}, 3, k, s, p, Activation::Linear);
    fill_random(c, gen);
    std::fill(c.bias.begin(), c.bias.end(), 0.0);
    Layer u = upconv_layer(c.out, 2, k, s, p, op, Activation::Linear);
    ASSERT_EQ(u.out, c.in);
    ASSERT_EQ(u.weights.size(), c.weights.size());
    u.weights = c.weights;
    std::fill(u.bias.begin(), u.bias.end(), 0.0);
    const auto x = oracle::random_vector(c.in.size(), gen);
    const auto y = oracle::random_vector(c.out.size(), gen);
    const double lhs = dotv(layer_forward(c, x), y), rhs = dotv(x, layer_forward(u, y));
    EXPECT_NEAR(lhs, rhs, 1e-11 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(Layers, ActivationsAndDense) {
  EXPECT_EQ(activate(Activation::Relu, -2.0), 0.0);
  EXPECT_EQ(activate(Activation::Relu, 2.5), 2.5);
  EXPECT_DOUBLE_EQ(activate(Activation::Sigmoid, 0.0), 0.5);
  EXPECT_DOUBLE_EQ(activate(Activation::Sigmoid, 2.0), 1.0 / (1.0 + std::exp(-2.0)));
  Layer d = dense_layer(3, 2, Activation::Relu);
  d.weights = {1, 2, 3, -1, -1, -1};
  d.bias = {0.5, 0.0};
  const auto y = layer_forward(d, std::vector<double>{1, 1, 1});
  EXPECT_DOUBLE_EQ(y[0], 6.5);
  EXPECT_DOUBLE_EQ(y[1], 0.0);
}

TEST(Mlp, ArchitectureShapes) {
  const AutoencoderModel m = make_mlp({2, 5, 1, 5, 2}, Activation::Relu, 1);
  EXPECT_EQ(m.latent_dim, 1u);
  ASSERT_EQ(m.encoder.size(), 2u);
  ASSERT_EQ(m.decoder.size(), 2u);
  EXPECT_EQ(m.decoder.back().act, Activation::Linear);
  EXPECT_EQ(m.encoder.front().act, Activation::Relu);
  EXPECT_EQ(m.encoder[0].weights.size(), 10u);
  EXPECT_NO_THROW(m.check_shapes());
  EXPECT_FALSE(m.is_linear());
  EXPECT_TRUE(make_mlp({5, 2, 5}, Activation::Linear, 0).is_linear());
  EXPECT_EQ(encode(Model(m), std::vector<double>{0.3, -0.2}).size(), 1u);
  EXPECT_EQ(kind_of([] { make_mlp({2, 1}, Activation::Relu, 0); }), ErrorKind::InputDomain);
  EXPECT_EQ(kind_of([] { make_mlp({2, 1, 3}, Activation::Relu, 0); }), ErrorKind::InputDomain);
  EXPECT_EQ(kind_of([] { make_mlp({2, 0, 2}, Activation::Relu, 0); }), ErrorKind::InputDomain);
}

TEST(Mlp, ZeroParametersReconstructTheZeroVector) {
  AutoencoderModel m = make_mlp({3, 2, 3}, Activation::Linear, 0);
  for (auto* s : {&m.encoder, &m.decoder})
    for (Layer& l : *s) {
      std::fill(l.weights.begin(), l.weights.end(), 0.0);
      std::fill(l.bias.begin(), l.bias.end(), 0.0);
    }
  EXPECT_EQ(reconstruct(Model(m), std::vector<double>{4, -1, 7}), (Vector{0, 0, 0}));
}

TEST(Mlp, ForwardMatchesHandWrittenComposition) {
  std::mt19937_64 gen(6);
  AutoencoderModel m = make_mlp({3, 4, 2, 4, 3}, Activation::Sigmoid, 2);
  const auto x = oracle::random_vector(3, gen);
  std::vector<double> h = x;
  auto apply = [&](const Layer& l) {
    std::vector<double> y(l.out.size());
    for (std::size_t o = 0; o < y.size(); ++o) {
      double s = l.bias[o];
      for (std::size_t i = 0; i < h.size(); ++i) s += l.weights[o * h.size() + i] * h[i];
      y[o] = l.act == Activation::Sigmoid ? 1 / (1 + std::exp(-s)) : s;
    }
    h = y;
  };
  for (const auto& l : m.encoder) apply(l);
  const auto z = h;
  for (const auto& l : m.decoder) apply(l);
  const ForwardResult f = ae_forward(m, x);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(f.latent[i], z[i], 1e-14);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(f.reconstruction[i], h[i], 1e-14);
}

TEST(Mlp, InitializationIsSeededAndBounded) {
  const auto a = make_mlp({4, 3, 4}, Activation::Relu, 11), b = make_mlp({4, 3, 4}, Activation::Relu, 11);
  const auto c = make_mlp({4, 3, 4}, Activation::Relu, 12);
  EXPECT_EQ(a.encoder[0].weights, b.encoder[0].weights);
  EXPECT_NE(a.encoder[0].weights, c.encoder[0].weights);
  // He-uniform limit sqrt(6 / fan_in) for the ReLU layer.
  for (double w : a.encoder[0].weights) EXPECT_LE(std::abs(w), std::sqrt(6.0 / 4.0));
  for (double v : a.encoder[0].bias) EXPECT_EQ(v, 0.0);
}

TEST(MnistConv, PresetShapes) {
  const AutoencoderModel m = make_mnist_conv(2, 0);
  EXPECT_EQ(m.input_dim(), 784u);
  EXPECT_EQ(m.latent_dim, 2u);
  EXPECT_NO_THROW(m.check_shapes());
  const ForwardResult f = ae_forward(m, std::vector<double>(784, 0.5));
  ASSERT_EQ(f.reconstruction.size(), 784u);
  for (double v : f.reconstruction) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(PcaAsAutoencoder, SameReconstructionAsProjector) {
  std::mt19937_64 gen(7);
  const Matrix x = oracle::random_matrix(80, 5, gen, 2.0);
  const PcaModel p = pca_fit(x, 2);
  const AutoencoderModel ae = pca_as_autoencoder(p);
  EXPECT_TRUE(ae.is_linear());
  for (int t = 0; t < 30; ++t) {
    const auto a = oracle::random_vector(5, gen, 10.0);
    const Vector r1 = reconstruct(Model(p), a), r2 = reconstruct(Model(ae), a);
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(r1[j], r2[j], 1e-11);
  }
}

TEST(Persistence, JsonRoundTripIsBitExact) {
  std::mt19937_64 gen(8);
  AutoencoderModel m = make_mlp({3, 2, 3}, Activation::Relu, 3);
  m.preprocessing = fit_standardization(oracle::random_matrix(20, 3, gen, 3.0));
  const Model models[] = {Model(m), Model(pca_fit(oracle::random_matrix(30, 4, gen), 2)),
                          Model(make_mnist_conv(2, 4))};
  for (const Model& mod : models) {
    const std::string text = model_to_json(mod);
    const Model back = model_from_json(text);
    EXPECT_EQ(model_to_json(back), text);
    const auto a = oracle::random_vector(input_dim(mod), gen);
    EXPECT_EQ(reconstruct(back, a), reconstruct(mod, a));
  }
  const fs::path p = fs::temp_directory_path() / "aeaudit_model_rt.json";
  save_model(models[0], p);
  EXPECT_EQ(model_to_json(load_model(p)), model_to_json(models[0]));
}

TEST(Persistence, VersionAndCorruptionErrors) {
  std::string text = model_to_json(Model(make_mlp({2, 1, 2}, Activation::Relu, 0)));
  const auto pos = text.find("\"version\"");
  ASSERT_NE(pos, std::string::npos);
  std::string v2 = text;
  v2.replace(v2.find('1', pos + 9), 1, "9");
  EXPECT_EQ(kind_of([&] { model_from_json(v2); }), ErrorKind::Version);
  EXPECT_EQ(kind_of([&] { model_from_json(text.substr(0, text.size() / 2)); }), ErrorKind::Format);
  EXPECT_EQ(kind_of([] { model_from_json("{\"format\":\"other\"}"); }), ErrorKind::Format);
  EXPECT_EQ(kind_of([] { load_model("/nonexistent/model.json"); }), ErrorKind::Io);
}

TEST(Pca, DiagonalToyDirectionAndDegenerateProjector) {
  Matrix x(30, 2);
  for (std::size_t i = 0; i < 30; ++i) x(i, 0) = x(i, 1) = 0.1 * double(i) - 1;
  const PcaModel p = pca_fit(x, 1);
  EXPECT_NEAR(std::abs(p.v_d(0, 0)), 1 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(p.v_d(0, 0), p.v_d(1, 0), 1e-12);
  // Isotropic data: any unit vector is a valid direction, so test the projector.
  const Matrix iso{{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  const PcaModel q = pca_fit(iso, 1);
  const Vector r = pca_decode(q, pca_encode(q, std::vector<double>{0.6, 0.8}));
  double along = 0;
  for (std::size_t j = 0; j < 2; ++j) along += r[j] * q.v_d(j, 0);
  EXPECT_NEAR(std::hypot(r[0], r[1]), std::abs(along), 1e-12);
  EXPECT_NEAR(norm(q.v_d.col_vector(0)), 1.0, 1e-12);
}

TEST(Pca, EncodeMeanAndResidualOrthogonality) {
  std::mt19937_64 gen(9);
  const Matrix x = oracle::random_matrix(50, 4, gen, 2.0);
  const PcaModel p = pca_fit(x, 2);
  for (double v : pca_encode(p, p.mean)) EXPECT_NEAR(v, 0.0, 1e-14);
  for (int t = 0; t < 20; ++t) {
    const auto a = oracle::random_vector(4, gen, 3.0);
    const Vector res = subtract(a, pca_decode(p, pca_encode(p, a)));
    for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(dot(res, p.v_d.col_vector(k)), 0.0, 1e-12);
    const Vector in_span = pca_decode(p, oracle::random_vector(2, gen, 5.0));
    const Vector back = pca_decode(p, pca_encode(p, in_span));
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(back[j], in_span[j], 1e-10);
  }
}

TEST(Mlp, HandSetProjectorReconstructsTheDiagonal) {
  AutoencoderModel m = make_mlp({2, 1, 2}, Activation::Linear, 0);
  const double h = 1 / std::sqrt(2.0);
  m.encoder[0].weights = {h, h};
  m.decoder[0].weights = {h, h};
  std::fill(m.encoder[0].bias.begin(), m.encoder[0].bias.end(), 0.0);
  std::fill(m.decoder[0].bias.begin(), m.decoder[0].bias.end(), 0.0);
  const Vector r = reconstruct(Model(m), std::vector<double>{1, 1});
  EXPECT_NEAR(r[0], 1.0, 1e-15);
  EXPECT_NEAR(r[1], 1.0, 1e-15);
}
