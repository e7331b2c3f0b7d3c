#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <pujoint/errors.hpp>
#include <pujoint/matrix.hpp>
#include <pujoint/mlp.hpp>
#include <pujoint/optimizer.hpp>

#include "oracles.hpp"

using namespace pujoint;

namespace {

Matrix random_batch(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = n(rng);
  return m;
}

}  // namespace

TEST_CASE("matrix basics") {
  Matrix m(2, 3, 1.5);
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m(1, 2) == 1.5);
  m(0, 1) = 4.0;
  CHECK(m.row(0)[1] == 4.0);
  CHECK_THROWS_AS(Matrix(2, 2, std::vector<double>{1, 2, 3}), ShapeError);

  Matrix e;
  std::vector<double> r{1.0, 2.0};
  e.append_row(r);
  e.append_row(r);
  CHECK(e.rows() == 2);
  std::vector<double> bad{1.0};
  CHECK_THROWS_AS(e.append_row(bad), ShapeError);

  std::vector<std::size_t> idx{1, 0};
  auto s = m.select_rows(idx);
  CHECK(s(1, 1) == 4.0);
  std::vector<std::size_t> oob{5};
  CHECK_THROWS_AS(m.select_rows(oob), ArgumentError);

  auto v = vstack(m, s);
  CHECK(v.rows() == 4);
  CHECK(v(3, 1) == 4.0);
  CHECK_THROWS_AS(vstack(m, e), ShapeError);

  m(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(m.all_finite());
}

TEST_CASE("model construction validates layer sizes") {
  CHECK_THROWS_AS(MLPModel({3}, Activation::relu, 1), ArgumentError);
  CHECK_THROWS_AS(MLPModel({3, 4, 2}, Activation::relu, 1), ArgumentError);
  CHECK_THROWS_AS(MLPModel({3, 0, 1}, Activation::relu, 1), ArgumentError);
  MLPModel m({3, 4, 1}, Activation::relu, 1);
  CHECK(m.parameter_count() == 3 * 4 + 4 + 4 + 1);
  CHECK(m.layers()[0].weights.rows() == 4);
  CHECK(m.layers()[0].weights.cols() == 3);
  CHECK(MLPModel({3, 4, 1}, Activation::relu, 1) == m);
  CHECK_FALSE(MLPModel({3, 4, 1}, Activation::relu, 2) == m);
}

TEST_CASE("initial weights lie within 1/sqrt(fan_in)") {
  MLPModel m({9, 16, 1}, Activation::tanh, 7);
  for (const auto& layer : m.layers()) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.weights.cols()));
    for (double w : layer.weights.values()) CHECK(std::abs(w) <= bound);
    for (double b : layer.biases) CHECK(std::abs(b) <= bound);
  }
}

TEST_CASE("activation names") {
  for (auto a : {Activation::relu, Activation::tanh, Activation::softplus})
    CHECK(parse_activation(to_string(a)) == a);
  CHECK_THROWS_AS(parse_activation("gelu"), ArgumentError);
}

TEST_CASE("forward: hand values") {
  auto zero = MLPModel::zeros({4, 5, 1}, Activation::relu);
  for (double p : forward(zero, random_batch(6, 4, 1))) CHECK(p == 0.5);

  auto lin = MLPModel::zeros({2, 1}, Activation::relu);
  lin.layers()[0].weights(0, 0) = 1.0;
  CHECK(forward(lin, Matrix(1, 2, std::vector<double>{0.0, 5.0}))[0] == 0.5);

  auto one = MLPModel::zeros({1, 1}, Activation::relu);
  one.layers()[0].weights(0, 0) = 1.0;
  CHECK(forward(one, Matrix(1, 1, 2.0))[0] == doctest::Approx(0.880797).epsilon(1e-6));

  CHECK_THROWS_AS(forward(one, Matrix(1, 2)), ShapeError);
}

TEST_CASE("forward: outputs strictly inside (0,1) and deterministic") {
  MLPModel m({3, 8, 8, 1}, Activation::relu, 3);
  for (auto& layer : m.layers())
    for (double& w : layer.weights.values()) w *= 40.0;
  auto x = random_batch(50, 3, 4);
  for (double& v : x.values()) v *= 100.0;
  auto p = forward(m, x);
  for (double v : p) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
  CHECK(forward(m, x) == p);
  CHECK(logistic(-800.0) > 0.0);
  CHECK(logistic(800.0) < 1.0);
  CHECK(logistic(40.0) < 1.0);
}

TEST_CASE("backward: zero upstream gives zero gradient") {
  MLPModel m({3, 5, 1}, Activation::relu, 2);
  std::vector<double> up(7, 0.0);
  auto g = backward(m, random_batch(7, 3, 1), up);
  for (double v : oracle::flatten(g)) CHECK(v == 0.0);
  CHECK(g.matches(m));
  std::vector<double> short_up(3, 0.0);
  CHECK_THROWS_AS(backward(m, random_batch(7, 3, 1), short_up), ShapeError);
}

TEST_CASE("backward: single logistic unit") {
  auto m = MLPModel::zeros({2, 1}, Activation::relu);
  m.layers()[0].weights(0, 0) = 0.3;
  m.layers()[0].weights(0, 1) = -0.7;
  m.layers()[0].biases[0] = 0.1;
  Matrix x(1, 2, std::vector<double>{1.5, 2.0});
  const double s = oracle::sigmoid(0.3 * 1.5 - 0.7 * 2.0 + 0.1);
  std::vector<double> up{1.0};
  auto g = backward(m, x, up);
  CHECK(g.layers[0].weights(0, 0) == doctest::Approx(s * (1 - s) * 1.5).epsilon(1e-14));
  CHECK(g.layers[0].weights(0, 1) == doctest::Approx(s * (1 - s) * 2.0).epsilon(1e-14));
  CHECK(g.layers[0].biases[0] == doctest::Approx(s * (1 - s)).epsilon(1e-14));
}

TEST_CASE("backward matches central differences") {
  std::mt19937_64 rng(11);
  for (Activation act : {Activation::tanh, Activation::softplus, Activation::relu}) {
    for (int rep = 0; rep < 4; ++rep) {
      std::vector<std::size_t> sizes{4, 1 + rng() % 16, 1 + rng() % 16, 1};
      MLPModel m(sizes, act, rng());
      auto x = random_batch(9, 4, rng());
      std::vector<double> w(9);
      for (double& v : w) v = std::uniform_real_distribution<double>(-2, 2)(rng);
      auto loss = [&](const MLPModel& mm) {
        auto p = forward(mm, x);
        double s = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) s += w[i] * p[i];
        return s;
      };
      auto analytic = oracle::flatten(backward(m, x, w));
      auto numeric = oracle::numeric_gradient(m, loss);
      CHECK(oracle::relative_error(analytic, numeric) < 1e-4);
    }
  }
}

TEST_CASE("checkpoint round-trips bit-exactly") {
  MLPModel m({5, 7, 3, 1}, Activation::softplus, 99);
  m.layers()[1].weights(0, 0) = -0.0;
  m.layers()[2].biases[0] = std::numeric_limits<double>::denorm_min();
  std::stringstream ss;
  write_checkpoint(m, ss);
  auto back = read_checkpoint(ss);
  CHECK(back.layer_sizes() == m.layer_sizes());
  CHECK(back.hidden_activation() == Activation::softplus);
  CHECK(std::signbit(back.layers()[1].weights(0, 0)));
  CHECK(back == m);

  std::stringstream again;
  write_checkpoint(back, again);
  std::stringstream first;
  write_checkpoint(m, first);
  CHECK(again.str() == first.str());
}

TEST_CASE("checkpoint rejects corrupt input") {
  MLPModel m({2, 3, 1}, Activation::relu, 1);
  std::stringstream ss;
  write_checkpoint(m, ss);
  const std::string good = ss.str();

  std::stringstream magic(std::string("XXXXXXXX") + good.substr(8));
  CHECK_THROWS_AS(read_checkpoint(magic), FormatError);
  std::stringstream truncated(good.substr(0, good.size() - 3));
  CHECK_THROWS_AS(read_checkpoint(truncated), FormatError);
  std::stringstream trailing(good + "z");
  CHECK_THROWS_AS(read_checkpoint(trailing), FormatError);
  std::string version = good;
  version[8] = 9;
  std::stringstream bad_version(version);
  CHECK_THROWS_AS(read_checkpoint(bad_version), FormatError);
}

TEST_CASE("amsgrad: zero gradient leaves parameters, counts the step") {
  MLPModel m({3, 4, 1}, Activation::relu, 5);
  const MLPModel before = m;
  AmsGrad opt(m, {});
  opt.step(m, Gradient::zeros_like(m));
  CHECK(m == before);
  CHECK(opt.steps() == 1);
}

TEST_CASE("amsgrad: constant gradient moves parameters monotonically") {
  auto m = MLPModel::zeros({2, 1}, Activation::relu);
  AmsGrad opt(m, {0.01});
  auto g = Gradient::zeros_like(m);
  g.layers[0].weights(0, 0) = 0.5;
  g.layers[0].weights(0, 1) = -2.0;
  double prev0 = 0.0, prev1 = 0.0;
  for (int i = 0; i < 100; ++i) {
    opt.step(m, g);
    const double w0 = m.layers()[0].weights(0, 0), w1 = m.layers()[0].weights(0, 1);
    CHECK(w0 < prev0);
    CHECK(w1 > prev1);
    prev0 = w0;
    prev1 = w1;
  }
  // bias-corrected constant gradient: every step is close to the step size
  CHECK(prev0 == doctest::Approx(-1.0).epsilon(1e-3));
}

TEST_CASE("amsgrad: first step hand value") {
  auto m = MLPModel::zeros({1, 1}, Activation::relu);
  AmsGradConfig cfg{0.1, 0.9, 0.999, 1e-8};
  AmsGrad opt(m, cfg);
  auto g = Gradient::zeros_like(m);
  g.layers[0].weights(0, 0) = 3.0;
  opt.step(m, g);
  // m_hat = 3, v_hat = 9
  CHECK(m.layers()[0].weights(0, 0) == doctest::Approx(-0.1 * 3.0 / (3.0 + 1e-8)).epsilon(1e-15));
  CHECK(opt.first_moment().layers[0].weights(0, 0) == doctest::Approx(0.3));
  CHECK(opt.second_moment().layers[0].weights(0, 0) == doctest::Approx(0.009));
}

TEST_CASE("amsgrad: max second moment never decreases") {
  MLPModel m({3, 6, 1}, Activation::tanh, 8);
  AmsGrad opt(m, {});
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  auto prev = oracle::flatten(opt.max_second_moment());
  for (int step = 0; step < 60; ++step) {
    auto g = Gradient::zeros_like(m);
    const double scale = step % 7 == 0 ? 10.0 : 0.01;
    for (auto& l : g.layers) {
      for (double& v : l.weights.values()) v = scale * n(rng);
      for (double& v : l.biases) v = scale * n(rng);
    }
    opt.step(m, g);
    auto cur = oracle::flatten(opt.max_second_moment());
    for (std::size_t i = 0; i < cur.size(); ++i) CHECK(cur[i] >= prev[i]);
    prev = cur;
  }
}

TEST_CASE("amsgrad: non-finite gradient aborts without touching state") {
  MLPModel m({2, 3, 1}, Activation::relu, 4);
  AmsGrad opt(m, {});
  auto g = Gradient::zeros_like(m);
  g.layers[0].weights(0, 0) = 1.0;
  opt.step(m, g);
  const MLPModel before = m;
  const auto m1 = oracle::flatten(opt.first_moment());
  g.layers[1].biases[0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(opt.step(m, g), NumericError);
  CHECK(m == before);
  CHECK(oracle::flatten(opt.first_moment()) == m1);
  CHECK(opt.steps() == 1);

  MLPModel other({2, 4, 1}, Activation::relu, 4);
  CHECK_THROWS_AS(opt.step(m, Gradient::zeros_like(other)), ShapeError);
}

TEST_CASE("amsgrad: identical seeds give identical trajectories") {
  auto run = [] {
    MLPModel m({3, 5, 1}, Activation::relu, 21);
    AmsGrad opt(m, {0.05});
    auto x = random_batch(16, 3, 2);
    std::vector<double> up(16, 1.0);
    for (int i = 0; i < 20; ++i) opt.step(m, backward(m, x, up));
    return m;
  };
  CHECK(run() == run());
}
