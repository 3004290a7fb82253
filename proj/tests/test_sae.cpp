#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "tcrom/sae.hpp"
#include "test_util.hpp"

using namespace tcrom;
using testutil::random_matrix;

namespace {

Layer affine(const Matrix& w, Activation act = Activation::linear) {
  Layer l;
  l.w = w;
  l.b = Matrix(w.rows(), 1);
  l.act = act;
  return l;
}

/// Hand-built model: encoder and decoder are both the 2x2 identity.
SaeModel identity_model() {
  SaeModel m;
  m.encoder.layers = {affine(Matrix::identity(2)), affine(Matrix::identity(2))};
  m.decoder.layers = {affine(Matrix::identity(2)), affine(Matrix::identity(2))};
  return m;
}

/// Low-rank test trajectory: dim-wide snapshots driven by two coefficients.
Trajectory two_driver_trajectory(int n, int dim, std::uint64_t seed) {
  Rng rng(seed);
  const Matrix a = random_matrix(dim, 1, rng), b = random_matrix(dim, 1, rng);
  Trajectory t;
  t.snapshots = Matrix(n, dim);
  for (int i = 0; i < n; ++i) {
    const double u = std::sin(0.37 * i), w = std::exp(-0.05 * i);
    for (int j = 0; j < dim; ++j) t.snapshots(i, j) = u * a(j, 0) + w * b(j, 0);
  }
  t.blocks = {{"u", dim}};
  return t;
}

}  // namespace

TEST_CASE("loss decomposes exactly into reconstruction and sparsity", "[sae]") {
  const SaeModel m = identity_model();
  Matrix z(2, 1);
  z(0, 0) = 1.0;
  z(1, 0) = -1.0;

  const SaeLoss at1 = sae_loss(m, z, 1.0);
  REQUIRE(at1.reconstruction == 0.0);
  REQUIRE(at1.sparsity == 2.0);
  REQUIRE(at1.total == 2.0);

  const SaeLoss at0 = sae_loss(m, z, 0.0);
  REQUIRE(at0.total == at0.reconstruction);

  const SaeLoss mid = sae_loss(m, z, 0.37);
  REQUIRE(mid.total == mid.reconstruction + 0.37 * mid.sparsity);
}

TEST_CASE("a zero-weight decoder reconstructs its bias", "[sae]") {
  SaeModel m = identity_model();
  m.decoder.layers[1].w.zero();
  m.decoder.layers[1].b(0, 0) = 0.5;
  m.decoder.layers[1].b(1, 0) = -0.25;

  Matrix z(2, 2);
  z(0, 0) = 1.0;
  z(1, 0) = 2.0;
  z(0, 1) = 3.0;
  z(1, 1) = 4.0;
  const SaeLoss l = sae_loss(m, z, 0.0);
  // Column errors: (1-0.5, 2+0.25) and (3-0.5, 4+0.25), averaged over the
  // four matrix entries.
  const double expect =
      (0.25 + 5.0625 + 6.25 + 18.0625) / 4.0;
  REQUIRE(l.reconstruction == Catch::Approx(expect).epsilon(1e-14));
}

TEST_CASE("batch mean divides by the number of snapshots", "[sae]") {
  const SaeModel m = identity_model();
  Matrix one(2, 1), three(2, 3);
  one(0, 0) = 2.0;
  one(1, 0) = -1.0;
  for (int j = 0; j < 3; ++j) {
    three(0, j) = 2.0;
    three(1, j) = -1.0;
  }
  REQUIRE(sae_loss(m, one, 1.0).total == sae_loss(m, three, 1.0).total);
}

TEST_CASE("active detection masks collapsed latents", "[sae]") {
  // Encoder sends z to (z0, 0, 1e-6 z1): the zero and the tiny latent are off.
  SaeModel m;
  Matrix w(3, 2);
  w(0, 0) = 1.0;
  w(2, 1) = 1e-6;
  m.encoder.layers = {affine(Matrix::identity(2)), affine(w)};
  m.decoder.layers = {affine(Matrix(2, 3)), affine(Matrix::identity(2))};

  Trajectory t;
  t.snapshots = Matrix(4, 2);
  for (int i = 0; i < 4; ++i) {
    t.snapshots(i, 0) = i - 1.5;
    t.snapshots(i, 1) = 0.5 * i;
  }
  t.blocks = {{"u", 2}};

  const auto mask = detect_active(m, t, 0.01);
  REQUIRE(mask == std::vector<std::uint8_t>{1, 0, 0});
}

TEST_CASE("a latent exactly at the threshold counts as active", "[sae]") {
  SaeModel m;
  Matrix w(2, 1);
  w(0, 0) = 1.0;
  w(1, 0) = 0.01;
  m.encoder.layers = {affine(w)};
  m.decoder.layers = {affine(Matrix(1, 2))};

  Trajectory t;
  t.snapshots = Matrix(2, 1);
  t.snapshots(0, 0) = 1.0;
  t.snapshots(1, 0) = -1.0;
  t.blocks = {{"u", 1}};

  const auto mask = detect_active(m, t, 0.01);
  REQUIRE(mask == std::vector<std::uint8_t>{1, 1});
}

TEST_CASE("an entirely collapsed code is rejected with advice", "[sae]") {
  SaeModel m;
  m.encoder.layers = {affine(Matrix(2, 2))};  // zero weights: code is zero
  m.decoder.layers = {affine(Matrix(2, 2))};
  Trajectory t;
  t.snapshots = Matrix(3, 2);
  t.snapshots(0, 0) = 1.0;
  t.blocks = {{"u", 2}};
  REQUIRE_THROWS_WITH(detect_active(m, t, 0.01),
                      Catch::Matchers::ContainsSubstring("lambda_r"));
}

TEST_CASE("masked encode and decode agree with zero-filled full codes", "[sae]") {
  Rng rng(41);
  SaeModel m;
  m.encoder.layers = {affine(random_matrix(4, 3, rng), Activation::relu),
                      affine(random_matrix(3, 4, rng))};
  m.decoder.layers = {affine(random_matrix(4, 3, rng), Activation::relu),
                      affine(random_matrix(3, 4, rng))};
  m.active = {1, 0, 1};

  const Matrix z = random_matrix(3, 5, rng);
  const Matrix x = encode_active(m, z);
  REQUIRE(x.rows() == 2);

  const Matrix full = encode(m, z);
  Matrix masked(3, 5);
  for (int j = 0; j < 5; ++j) {
    masked(0, j) = full(0, j);
    masked(2, j) = full(2, j);
  }
  const Matrix dec_a = decode_active(m, x);
  const Matrix dec_b = decode(m, masked);
  for (std::size_t i = 0; i < dec_a.size(); ++i)
    REQUIRE(dec_a.data()[i] == dec_b.data()[i]);

  Matrix wrong(3, 5);
  REQUIRE_THROWS_AS(decode_active(m, wrong), ValidationError);
}

TEST_CASE("training shrinks the loss and finds the latent dimension", "[sae]") {
  const Trajectory t = two_driver_trajectory(60, 8, 51);
  const SplitIndex idx = split(t.n_snapshots(), 0.8, 42);

  SaeConfig cfg;
  cfg.bottleneck = 5;
  cfg.hidden = {16};
  cfg.lr = 1e-2;
  cfg.lambda_r = 3e-3;
  cfg.epochs = 10000;
  cfg.patience = 10000;
  cfg.seed = 2;

  const SaeTrainResult r = train_sae(t, idx, cfg);
  REQUIRE(r.history.size() >= 2);
  REQUIRE(r.history.back()[1] < 0.05 * r.history.front()[1]);
  // The data has two independent drivers; the L1 pressure should strip the
  // bottleneck down to (about) that.
  REQUIRE(r.model.n_active() >= 2);
  REQUIRE(r.model.n_active() <= 4);

  // The loss recorded during training matches the reference computation.
  const Matrix ztr = transpose(rows_subset(t.snapshots, idx.train));
  const SaeLoss check = sae_loss(r.model, ztr, cfg.lambda_r);
  REQUIRE(check.total < 0.05 * r.history.front()[1]);
}

TEST_CASE("one training epoch is bitwise deterministic", "[sae]") {
  const Trajectory t = two_driver_trajectory(20, 6, 77);
  const SplitIndex idx = split(t.n_snapshots(), 0.8, 7);
  SaeConfig cfg;
  cfg.bottleneck = 4;
  cfg.hidden = {8};
  cfg.epochs = 1;
  cfg.patience = 10;
  cfg.seed = 5;

  SaeModel a, b;
  try {
    a = train_sae(t, idx, cfg).model;
  } catch (const ValidationError&) {
    // One epoch might legitimately leave all latents below threshold.
  }
  try {
    b = train_sae(t, idx, cfg).model;
  } catch (const ValidationError&) {
  }
  REQUIRE(a.encoder.layers.size() == b.encoder.layers.size());
  for (std::size_t l = 0; l < a.encoder.layers.size(); ++l)
    for (std::size_t i = 0; i < a.encoder.layers[l].w.size(); ++i)
      REQUIRE(a.encoder.layers[l].w.data()[i] == b.encoder.layers[l].w.data()[i]);
}

TEST_CASE("zeroing inactive latents leaves test error within tolerance", "[sae]") {
  const Trajectory t = two_driver_trajectory(60, 8, 51);
  const SplitIndex idx = split(t.n_snapshots(), 0.8, 42);

  SaeConfig cfg;
  cfg.bottleneck = 5;
  cfg.hidden = {16};
  cfg.lr = 1e-2;
  cfg.lambda_r = 3e-3;
  cfg.epochs = 10000;
  cfg.patience = 10000;
  cfg.seed = 2;

  const SaeModel m = train_sae(t, idx, cfg).model;
  REQUIRE(m.n_active() < cfg.bottleneck);  // otherwise the check is vacuous

  const Matrix zte = transpose(rows_subset(t.snapshots, idx.test));
  const auto mse = [&](const Matrix& rec) {
    double s = 0;
    for (std::size_t i = 0; i < rec.size(); ++i) {
      const double d = rec.data()[i] - zte.data()[i];
      s += d * d;
    }
    return s / (double)rec.size();
  };
  const double full = mse(decode(m, encode(m, zte)));
  const double masked = mse(decode_active(m, encode_active(m, zte)));
  // Dead ReLU codes emit exact zeros, so masking them away should be (nearly)
  // a no-op on held-out data too.
  REQUIRE(std::abs(masked - full) <= 0.05 * full);
}

TEST_CASE("stronger sparsity penalties keep no more latents", "[sae]") {
  const Trajectory t = two_driver_trajectory(60, 8, 51);
  const SplitIndex idx = split(t.n_snapshots(), 0.8, 42);

  SaeConfig cfg;
  cfg.bottleneck = 5;
  cfg.hidden = {16};
  cfg.lr = 1e-2;
  cfg.epochs = 10000;
  cfg.patience = 10000;
  cfg.seed = 2;

  int prev = cfg.bottleneck;
  for (const double lam : {3e-5, 3e-4, 3e-3}) {
    cfg.lambda_r = lam;
    const int n = train_sae(t, idx, cfg).model.n_active();
    REQUIRE(n <= prev);
    prev = n;
  }
  REQUIRE(prev < cfg.bottleneck);  // the strongest penalty actually bites
}

TEST_CASE("per-block sets concatenate active codes in block order", "[sae]") {
  SaeModel ma = identity_model();
  ma.active = {1, 0};
  SaeModel mb = identity_model();
  mb.active = {1, 1};
  SaeSet set;
  set.per_block = true;
  set.models = {ma, mb};
  REQUIRE(set.n_active() == 3);

  Trajectory t;
  t.snapshots = Matrix(3, 4);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) t.snapshots(i, j) = 10.0 * i + j;
  t.blocks = {{"a", 2}, {"b", 2}};

  const Matrix z = transpose(t.snapshots);
  const Matrix x = encode_active(set, t, z);
  REQUIRE(x.rows() == 3);
  for (int j = 0; j < 3; ++j) {
    REQUIRE(x(0, j) == t.snapshots(j, 0));  // block a, latent 0
    REQUIRE(x(1, j) == t.snapshots(j, 2));  // block b, latent 0
    REQUIRE(x(2, j) == t.snapshots(j, 3));  // block b, latent 1
  }

  // Identity decoders: block a reconstructs (z0, 0), block b reconstructs z.
  const Matrix rec = decode_active(set, t, x);
  for (int j = 0; j < 3; ++j) {
    REQUIRE(rec(0, j) == t.snapshots(j, 0));
    REQUIRE(rec(1, j) == 0.0);
    REQUIRE(rec(2, j) == t.snapshots(j, 2));
    REQUIRE(rec(3, j) == t.snapshots(j, 3));
  }
}

TEST_CASE("per-variable test error is reported per block", "[sae]") {
  SaeModel m = identity_model();
  m.decoder.layers[1].b(1, 0) = 0.1;  // constant error on the second component

  Trajectory t;
  t.snapshots = Matrix(5, 2);
  for (int i = 0; i < 5; ++i) {
    t.snapshots(i, 0) = i;
    t.snapshots(i, 1) = -i;
  }
  t.blocks = {{"a", 1}, {"b", 1}};

  SaeSet set;
  set.models = {m};
  const auto mse = test_sae(set, t, {0, 2, 4});
  REQUIRE(mse.size() == 2);
  REQUIRE(mse[0].first == "a");
  REQUIRE(mse[0].second == 0.0);
  REQUIRE(mse[1].second == Catch::Approx(0.01).epsilon(1e-12));
}
