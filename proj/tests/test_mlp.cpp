#include <catch2/catch_amalgamated.hpp>

#include <limits>

#include "tcrom/mlp.hpp"
#include "test_util.hpp"

using namespace tcrom;
using testutil::random_matrix;

TEST_CASE("initialization: weight variance 2/fan_in, biases zero", "[mlp]") {
  const std::vector<int> sizes{400, 160, 160, 10};
  const MlpParams p = mlp_init(
      sizes, {Activation::linear, Activation::relu, Activation::linear}, 42);
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const Layer& layer = p.layers[l];
    REQUIRE(max_abs(layer.b) == 0.0);
    double mean = 0, var = 0;
    for (std::size_t i = 0; i < layer.w.size(); ++i) mean += layer.w.data()[i];
    mean /= (double)layer.w.size();
    for (std::size_t i = 0; i < layer.w.size(); ++i)
      var += (layer.w.data()[i] - mean) * (layer.w.data()[i] - mean);
    var /= (double)layer.w.size();
    const double expect = 2.0 / sizes[l];
    REQUIRE(var == Catch::Approx(expect).epsilon(0.2));
    REQUIRE(std::fabs(mean) < 3.0 * std::sqrt(expect / (double)layer.w.size()) + 1e-3);
  }
}

TEST_CASE("initialization is bitwise deterministic per seed", "[mlp]") {
  const std::vector<int> sizes{8, 16, 4};
  const std::vector<Activation> acts{Activation::relu, Activation::linear};
  const MlpParams a = mlp_init(sizes, acts, 9);
  const MlpParams b = mlp_init(sizes, acts, 9);
  const MlpParams c = mlp_init(sizes, acts, 10);
  for (std::size_t l = 0; l < a.layers.size(); ++l)
    REQUIRE(max_abs(a.layers[l].w - b.layers[l].w) == 0.0);
  REQUIRE(max_abs(a.layers[0].w - c.layers[0].w) > 0.0);
}

TEST_CASE("initialization validates shapes", "[mlp]") {
  REQUIRE_THROWS_AS(mlp_init({4}, {}, 0), ValidationError);
  REQUIRE_THROWS_AS(mlp_init({4, 0}, {Activation::relu}, 0), ValidationError);
  REQUIRE_THROWS_AS(mlp_init({4, 3, 2}, {Activation::relu}, 0), ValidationError);
}

TEST_CASE("forward: affine identity and relu clipping", "[mlp]") {
  MlpParams p;
  p.layers.push_back({Matrix::identity(2), Matrix(2, 1), Activation::linear});
  const Matrix out = mlp_forward(p, Matrix(2, 1, {1, 2}));
  REQUIRE(out(0, 0) == 1.0);
  REQUIRE(out(1, 0) == 2.0);

  MlpParams r;
  r.layers.push_back({Matrix::identity(2), Matrix(2, 1), Activation::relu});
  const Matrix ro = mlp_forward(r, Matrix(2, 1, {-3, 2}));
  REQUIRE(ro(0, 0) == 0.0);
  REQUIRE(ro(1, 0) == 2.0);
}

TEST_CASE("forward: two-layer hand computation", "[mlp]") {
  // h = relu([[1,-1],[2,0]] (1,2) + (0,1)) = relu((-1,2)+(0,1)) = (0,3)
  // y = [1,1] h + 1 = 4
  MlpParams p;
  p.layers.push_back({Matrix(2, 2, {1, -1, 2, 0}), Matrix(2, 1, {0, 1}), Activation::relu});
  p.layers.push_back({Matrix(1, 2, {1, 1}), Matrix(1, 1, {1}), Activation::linear});
  const Matrix out = mlp_forward(p, Matrix(2, 1, {1, 2}));
  REQUIRE(out(0, 0) == 4.0);
}

TEST_CASE("all-linear MLP equals the composed affine map", "[mlp]") {
  Rng rng(15);
  MlpParams p;
  p.layers.push_back({random_matrix(5, 3, rng), random_matrix(5, 1, rng), Activation::linear});
  p.layers.push_back({random_matrix(2, 5, rng), random_matrix(2, 1, rng), Activation::linear});
  const Matrix x = random_matrix(3, 7, rng);

  const Matrix w = matmul(p.layers[1].w, p.layers[0].w);
  Matrix b = matmul(p.layers[1].w, p.layers[0].b) + p.layers[1].b;
  Matrix expect = matmul(w, x);
  for (int i = 0; i < expect.rows(); ++i)
    for (int j = 0; j < expect.cols(); ++j) expect(i, j) += b(i, 0);

  REQUIRE(max_abs(mlp_forward(p, x) - expect) < 1e-12);
}

TEST_CASE("batched forward equals per-column forward", "[mlp]") {
  Rng rng(33);
  const MlpParams p = mlp_init({6, 12, 3}, {Activation::relu, Activation::linear}, 3);
  const Matrix x = random_matrix(6, 9, rng);
  const Matrix batch = mlp_forward(p, x);
  for (int j = 0; j < x.cols(); ++j) {
    Matrix col(6, 1);
    for (int i = 0; i < 6; ++i) col(i, 0) = x(i, j);
    const Matrix single = mlp_forward(p, col);
    for (int i = 0; i < 3; ++i) REQUIRE(single(i, 0) == batch(i, j));
  }
}

TEST_CASE("L2 penalty sums squared weights and ignores biases", "[mlp]") {
  MlpParams p;
  p.layers.push_back({Matrix(2, 2, {1, 2, 3, 0}), Matrix(2, 1, {9, 9}), Activation::linear});
  REQUIRE(l2_penalty(p) == 14.0);
  MlpParams zero;
  zero.layers.push_back({Matrix(3, 3), Matrix(3, 1, {5, 5, 5}), Activation::relu});
  REQUIRE(l2_penalty(zero) == 0.0);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged", "[mlp]") {
  Adam opt(AdamConfig{0.1});
  Matrix p(2, 2, {1, 2, 3, 4});
  const Matrix before = p;
  opt.step_begin();
  opt.update(0, p, Matrix(2, 2));
  REQUIRE(max_abs(p - before) == 0.0);
}

TEST_CASE("adam: first step moves by ~lr against the gradient sign", "[mlp]") {
  Adam opt(AdamConfig{0.1});
  Matrix p(1, 1, {0.0});
  Matrix g(1, 1, {1.0});
  opt.step_begin();
  opt.update(0, p, g);
  // mhat = 1, vhat = 1 -> step = lr / (1 + eps)
  REQUIRE(p(0, 0) == Catch::Approx(-0.1).epsilon(1e-6));
  REQUIRE(p(0, 0) > -0.1);  // eps makes it slightly smaller in magnitude
}

TEST_CASE("adam: non-finite gradient raises divergence error naming the parameter", "[mlp]") {
  Adam opt(AdamConfig{0.1});
  Matrix p(1, 1, {0.0});
  Matrix g(1, 1, {std::numeric_limits<double>::quiet_NaN()});
  opt.step_begin();
  try {
    opt.update(0, p, g, "enc.w2");
    FAIL("expected divergence error");
  } catch (const DivergenceError& e) {
    REQUIRE(std::string(e.what()).find("enc.w2") != std::string::npos);
  }
}

TEST_CASE("adam trajectory is deterministic", "[mlp]") {
  auto run = [&]() {
    Rng rng(4);
    Adam opt(AdamConfig{0.01});
    Matrix p = random_matrix(3, 3, rng);
    for (int it = 0; it < 50; ++it) {
      Matrix g = p;  // gradient of 0.5||p||^2
      opt.step_begin();
      opt.update(0, p, g);
    }
    return p;
  };
  const Matrix a = run(), b = run();
  REQUIRE(max_abs(a - b) == 0.0);
}

TEST_CASE("tape bridge reproduces plain forward", "[mlp]") {
  Rng rng(8);
  const MlpParams p = mlp_init({5, 11, 7, 2},
                               {Activation::linear, Activation::relu, Activation::linear}, 77);
  const Matrix x = random_matrix(5, 13, rng);
  Tape t;
  const int tx = t.input("x", 5, 13);
  const TapeMlp net = mlp_on_tape(t, p, tx, "net");
  t.set_input(tx, x);
  t.forward();
  REQUIRE(max_abs(t.value(net.out) - mlp_forward(p, x)) == 0.0);
}
