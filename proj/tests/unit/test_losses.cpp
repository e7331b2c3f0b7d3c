#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <pujoint/errors.hpp>
#include <pujoint/losses.hpp>

#include "oracles.hpp"

using namespace pujoint;

namespace {

std::vector<double> uniform(std::size_t n, std::mt19937_64& rng, double lo = 0.01, double hi = 0.99) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

// Central differences of a scalar loss with respect to each entry of `x`.
template <class F>
std::vector<double> fd(std::vector<double> x, F f, double h = 1e-6) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = f(x);
    x[i] = saved - h;
    const double down = f(x);
    x[i] = saved;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

}  // namespace

TEST_CASE("surrogates") {
  for (Surrogate s : {Surrogate::sigmoid, Surrogate::logistic}) {
    CHECK(parse_surrogate(to_string(s)) == s);
    double prev_pos = 1e300, prev_neg = -1.0;
    for (int i = 1; i < 100; ++i) {
      const double x = i / 100.0;
      const double lp = positive_loss(s, x), ln = negative_loss(s, x);
      CHECK(lp >= 0.0);
      CHECK(ln >= 0.0);
      CHECK(lp <= prev_pos);
      CHECK(ln >= prev_neg);
      prev_pos = lp;
      prev_neg = ln;
      const double h = 1e-6;
      CHECK(positive_loss_derivative(s, x) ==
            doctest::Approx((positive_loss(s, x + h) - positive_loss(s, x - h)) / (2 * h)).epsilon(1e-6));
      CHECK(negative_loss_derivative(s, x) ==
            doctest::Approx((negative_loss(s, x + h) - negative_loss(s, x - h)) / (2 * h)).epsilon(1e-6));
    }
  }
  CHECK(positive_loss(Surrogate::sigmoid, 0.3) == 0.7);
  CHECK(negative_loss(Surrogate::sigmoid, 0.3) == 0.3);
  CHECK(positive_loss(Surrogate::logistic, 0.0) == doctest::Approx(-std::log(1e-7)));
  CHECK_THROWS_AS(parse_surrogate("hinge"), ArgumentError);
}

TEST_CASE("binary kl: hand values") {
  CHECK(binary_kl(0.5, 0.5) == 0.0);
  CHECK(binary_kl(1.0, 0.3) == doctest::Approx(-std::log(0.3)).epsilon(1e-14));
  CHECK(binary_kl(0.0, 0.3) == doctest::Approx(-std::log(0.7)).epsilon(1e-14));
  CHECK(binary_kl(0.49, 0.30) == doctest::Approx(0.078903728303984).epsilon(1e-12));
  CHECK(std::isfinite(binary_kl(1.0, 0.0)));
  CHECK(binary_kl(1.0, 0.0) == doctest::Approx(-std::log(1e-7)));
}

TEST_CASE("binary kl: nonnegative on a grid, zero only on the diagonal") {
  for (int i = 1; i < 100; ++i) {
    for (int j = 1; j < 100; ++j) {
      const double y = i / 100.0, s = j / 100.0;
      const double v = binary_kl(y, s);
      CHECK(v == doctest::Approx(oracle::kl(y, s)).epsilon(1e-12));
      if (i == j) {
        CHECK(v == doctest::Approx(0.0));
      } else {
        CHECK(v > 0.0);
      }
    }
  }
}

TEST_CASE("binary kl derivative") {
  for (double y : {0.0, 0.2, 0.49, 1.0})
    for (double s : {0.05, 0.3, 0.5, 0.93}) {
      const double h = 1e-7;
      CHECK(binary_kl_derivative(y, s) ==
            doctest::Approx((binary_kl(y, s + h) - binary_kl(y, s - h)) / (2 * h)).epsilon(1e-6));
    }
}

TEST_CASE("mean cross entropy is minimised at the positive fraction") {
  for (double prior : {0.3, 0.4, 0.49, 0.56}) {
    std::vector<int> t(100, 0);
    std::fill_n(t.begin(), static_cast<int>(std::lround(prior * 100)), 1);
    double best = 1e300, arg = -1;
    for (int k = 1; k < 1000; ++k) {
      const double y = k / 1000.0;
      const double v = mean_cross_entropy(t, y);
      if (v < best) {
        best = v;
        arg = y;
      }
    }
    CHECK(arg == doctest::Approx(prior).epsilon(1e-12));
  }
  CHECK_THROWS_AS(mean_cross_entropy({}, 0.5), ArgumentError);
}

TEST_CASE("pn risk") {
  std::vector<double> ones(5, 1.0), zeros(7, 0.0), half(3, 0.5);
  CHECK(pn_risk(ones, zeros, 0.3).value == doctest::Approx(0.0).epsilon(1e-12));
  for (double prior : {0.1, 0.4, 0.9}) CHECK(pn_risk(half, half, prior).value == doctest::Approx(0.5));
  // mean l+ = 0.2, mean l- = 0.1
  std::vector<double> p{0.7, 0.9}, n{0.05, 0.15};
  CHECK(pn_risk(p, n, 0.4).value == doctest::Approx(0.14).epsilon(1e-14));
  CHECK_THROWS_AS(pn_risk({}, n, 0.4), ArgumentError);
  CHECK_THROWS_AS(pn_risk(p, {}, 0.4), ArgumentError);
  CHECK_THROWS_AS(pn_risk(p, n, 1.0), ArgumentError);
}

TEST_CASE("upu risk") {
  std::vector<double> ones(4, 1.0);
  CHECK(upu_risk(ones, ones, 0.35).value == doctest::Approx(0.65).epsilon(1e-14));
  // mean l+(P) = 0.1, mean l-(P) = 0.9, mean l-(U) = 0.2
  std::vector<double> p{0.9}, u{0.1, 0.3};
  CHECK(upu_risk(p, u, 0.5).value == doctest::Approx(-0.2).epsilon(1e-14));
  CHECK_THROWS_AS(upu_risk(p, {}, 0.5), ArgumentError);
}

TEST_CASE("mixture identity: upu on P + (P u N) equals pn on P, N") {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t a = 1 + rng() % 40, b = 1 + rng() % 40;
    auto p = uniform(a, rng, 0.0, 1.0), n = uniform(b, rng, 0.0, 1.0);
    std::vector<double> u = p;
    u.insert(u.end(), n.begin(), n.end());
    std::shuffle(u.begin(), u.end(), rng);
    const double prior = static_cast<double>(a) / static_cast<double>(a + b);
    for (Surrogate s : {Surrogate::sigmoid, Surrogate::logistic})
      CHECK(std::abs(upu_risk(p, u, prior, s).value - pn_risk(p, n, prior, s).value) <= 1e-10);
  }
}

TEST_CASE("nnpu risk: hand values and flags") {
  // mean l+ = 0.2, mean l-(U) = 0.4, mean l-(P) = 0.3 under the sigmoid surrogate
  auto r = PURiskValue::from_means(0.5, 0.2, 0.4, 0.3);
  CHECK(r.positive_term == doctest::Approx(0.1));
  CHECK(r.correction == doctest::Approx(0.25));
  CHECK(r.value() == doctest::Approx(0.35));
  CHECK_FALSE(r.clamped);

  auto c = PURiskValue::from_means(0.5, 0.2, 0.05, 0.3);
  CHECK(c.correction == doctest::Approx(-0.1));
  CHECK(c.value() == doctest::Approx(0.1));
  CHECK(c.clamped);
  CHECK(c.ascent);

  std::vector<double> p{0.8, 0.7}, u{0.2, 0.4, 0.9};
  auto v = nnpu_risk(p, u, 0.5);
  CHECK(v.positive_term == doctest::Approx(0.5 * 0.25));
  CHECK(v.correction == doctest::Approx(0.5 - 0.5 * 0.75));

  auto t = nnpu_risk(p, u, 0.5, Surrogate::sigmoid, 0.2);
  CHECK_FALSE(t.clamped);
  CHECK(t.ascent);
}

TEST_CASE("nnpu coincides with upu when the correction is nonnegative") {
  std::mt19937_64 rng(5);
  int clamped = 0;
  for (int rep = 0; rep < 500; ++rep) {
    auto p = uniform(1 + rng() % 20, rng, 0.0, 1.0), u = uniform(1 + rng() % 20, rng, 0.0, 1.0);
    const double prior = std::uniform_real_distribution<double>(0.05, 0.95)(rng);
    for (Surrogate s : {Surrogate::sigmoid, Surrogate::logistic}) {
      auto nn = nnpu_risk(p, u, prior, s);
      auto up = upu_risk(p, u, prior, s);
      double ml = 0.0;
      for (double x : p) ml += positive_loss(s, x);
      ml /= static_cast<double>(p.size());
      CHECK(nn.value() >= prior * ml);
      CHECK(nn.unbiased_value() == doctest::Approx(up.value).epsilon(1e-12));
      if (nn.correction >= 0.0) {
        CHECK(nn.value() == up.value);
        CHECK(nn.grad.positive == up.grad.positive);
        CHECK(nn.grad.unlabeled == up.grad.unlabeled);
      } else {
        ++clamped;
        CHECK(nn.value() == nn.positive_term);
      }
    }
  }
  CHECK(clamped > 0);
}

TEST_CASE("risk gradients match finite differences") {
  std::mt19937_64 rng(9);
  for (int rep = 0; rep < 20; ++rep) {
    auto p = uniform(1 + rng() % 6, rng), u = uniform(1 + rng() % 8, rng);
    const double prior = std::uniform_real_distribution<double>(0.1, 0.9)(rng);
    for (Surrogate s : {Surrogate::sigmoid, Surrogate::logistic}) {
      auto g = upu_risk(p, u, prior, s).grad;
      CHECK(oracle::relative_error(g.positive, fd(p, [&](auto& x) { return upu_risk(x, u, prior, s).value; })) <
            1e-6);
      CHECK(oracle::relative_error(g.unlabeled, fd(u, [&](auto& x) { return upu_risk(p, x, prior, s).value; })) <
            1e-6);
      auto pn = pn_risk(p, u, prior, s).grad;
      CHECK(oracle::relative_error(pn.unlabeled, fd(u, [&](auto& x) { return pn_risk(p, x, prior, s).value; })) <
            1e-6);

      auto nn = nnpu_risk(p, u, prior, s);
      auto signal = [&](const std::vector<double>& pp, const std::vector<double>& uu) {
        auto r = nnpu_risk(pp, uu, prior, s);
        return nn.ascent ? -r.correction : r.unbiased_value();
      };
      CHECK(oracle::relative_error(nn.grad.positive, fd(p, [&](auto& x) { return signal(x, u); })) < 1e-6);
      CHECK(oracle::relative_error(nn.grad.unlabeled, fd(u, [&](auto& x) { return signal(p, x); })) < 1e-6);
    }
  }
}

TEST_CASE("class loss") {
  std::vector<double> ones(3, 1.0), s{0.2, 0.6, 0.9};
  // sigma = 1 is clamped to 1 - eps
  const double floor = -std::log(1.0 - kProbabilityEpsilon);
  CHECK(class_loss(ones, s, s, 5.0).value == doctest::Approx(5.0 * floor).epsilon(1e-9));
  std::vector<double> p{0.6, 0.8}, y{0.1, 0.5, 1.0};
  const double kl = (oracle::kl(0.1, 0.2) + oracle::kl(0.5, 0.6) + oracle::kl(1.0, 0.9)) / 3.0;
  CHECK(class_loss(p, s, y, 0.0).value == doctest::Approx(kl).epsilon(1e-12));
  const double pos = -(std::log(0.6) + std::log(0.8)) / 2.0;
  CHECK(class_loss(p, s, y, 2.5).value == doctest::Approx(2.5 * pos + kl).epsilon(1e-12));

  std::vector<double> u2{0.3, 0.3}, y2{0.49, 0.49};
  CHECK(class_loss(p, u2, y2, 0.0).value == doctest::Approx(0.078903728303984).epsilon(1e-12));
  std::vector<double> y_short{0.1};
  CHECK_THROWS_AS(class_loss(p, s, y_short, 1.0), ShapeError);
  CHECK_THROWS_AS(class_loss(p, s, y, -1.0), ArgumentError);
}

TEST_CASE("class loss is invariant under joint permutation") {
  std::mt19937_64 rng(4);
  auto p = uniform(5, rng), u = uniform(30, rng), y = uniform(30, rng, 0.0, 1.0);
  const double base = class_loss(p, u, y, 3.0).value;
  std::vector<std::size_t> perm(30);
  for (std::size_t i = 0; i < 30; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<double> u2(30), y2(30);
  for (std::size_t i = 0; i < 30; ++i) {
    u2[i] = u[perm[i]];
    y2[i] = y[perm[i]];
  }
  CHECK(class_loss(p, u2, y2, 3.0).value == doctest::Approx(base).epsilon(1e-14));
  std::shuffle(u2.begin(), u2.end(), rng);
  CHECK(reg1(u2, 0.3).value == doctest::Approx(reg1(u, 0.3).value).epsilon(1e-14));
}

TEST_CASE("reg1") {
  std::vector<double> at{0.2, 0.6};
  CHECK(reg1(at, 0.4).value == doctest::Approx(0.0).epsilon(1e-12));
  std::vector<double> s{0.1, 0.5};
  CHECK(reg1(s, 0.49).value == doctest::Approx(0.078903728303984).epsilon(1e-12));
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 100; ++rep) {
    auto u = uniform(1 + rng() % 10, rng);
    const double m = oracle::mean(u);
    if (std::abs(m - 0.3) > 1e-9) CHECK(reg1(u, 0.3).value > 0.0);
  }
  CHECK_THROWS_AS(reg1({}, 0.3), ArgumentError);
}

TEST_CASE("reg2") {
  std::vector<double> half(4, 0.5);
  CHECK(reg2(half).value == doctest::Approx(-std::log(2.0)).epsilon(1e-14));
  std::vector<double> two{0.9, 0.1};
  CHECK(reg2(two).value == doctest::Approx(-0.3250829733914482).epsilon(1e-12));
  std::vector<double> edge{0.0, 1.0};
  CHECK(reg2(edge).value <= 0.0);
  CHECK(reg2(edge).value > -1e-5);
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 100; ++rep) {
    auto u = uniform(1 + rng() % 10, rng);
    CHECK(reg2(u).value <= 0.0);
    CHECK(reg2(u).value >= -std::log(2.0) - 1e-15);
  }
  CHECK_THROWS_AS(reg2({}), ArgumentError);
}

TEST_CASE("joint loss assembly") {
  std::mt19937_64 rng(6);
  auto p = uniform(4, rng), u = uniform(9, rng), y = uniform(9, rng, 0.0, 1.0);
  auto none = joint_loss(p, u, y, {2.0, 0.0, 0.0}, 0.3);
  CHECK(none.total == none.classification);
  auto all = joint_loss(p, u, y, {2.0, 10.0, 2.0}, 0.3);
  CHECK(all.classification == doctest::Approx(class_loss(p, u, y, 2.0).value).epsilon(1e-14));
  CHECK(all.reg1 == doctest::Approx(reg1(u, 0.3).value).epsilon(1e-14));
  CHECK(all.reg2 == doctest::Approx(reg2(u).value).epsilon(1e-14));
  CHECK(all.total == doctest::Approx(all.classification + 10.0 * all.reg1 + 2.0 * all.reg2).epsilon(1e-14));
  CHECK(all.weights.alpha == 10.0);

  std::vector<double> ones(3, 1.0), pri(6, 0.49);
  auto at = joint_loss(ones, pri, pri, {10.0, 10.0, 2.0}, 0.49);
  const double floor = 10.0 * -std::log(1.0 - kProbabilityEpsilon);
  CHECK(at.classification == doctest::Approx(floor).epsilon(1e-9));
  CHECK(at.reg1 == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(at.total == doctest::Approx(floor + 2.0 * -0.6929471672244782).epsilon(1e-12));

  CHECK_THROWS_AS(joint_loss(p, u, y, {1.0, -1.0, 0.0}, 0.3), ArgumentError);
  CHECK_THROWS_AS(joint_loss(p, u, y, {1.0, 0.0, -1.0}, 0.3), ArgumentError);
}

TEST_CASE("joint loss gradients match finite differences") {
  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 20; ++rep) {
    auto p = uniform(1 + rng() % 6, rng), u = uniform(1 + rng() % 8, rng);
    auto y = uniform(u.size(), rng, 0.0, 1.0);
    const JointWeights w{std::uniform_real_distribution<double>(0, 10)(rng), 10.0, 2.0};
    auto g = joint_loss(p, u, y, w, 0.4).grad;
    CHECK(oracle::relative_error(g.positive, fd(p, [&](auto& x) { return joint_loss(x, u, y, w, 0.4).total; })) <
          1e-6);
    CHECK(oracle::relative_error(g.unlabeled,
                                 fd(u, [&](auto& x) { return joint_loss(p, x, y, w, 0.4).total; })) < 1e-6);
  }
}

TEST_CASE("clamped probabilities use straight-through gradients") {
  CHECK(clamp_probability(0.0) == kProbabilityEpsilon);
  CHECK(clamp_probability(1.0) == 1.0 - kProbabilityEpsilon);
  CHECK(clamp_probability(0.3) == 0.3);
  std::vector<double> p{1.0}, u{0.0};
  std::vector<double> y{1.0};
  auto j = joint_loss(p, u, y, {1.0, 1.0, 1.0}, 0.5);
  CHECK(std::isfinite(j.total));
  CHECK(std::isfinite(j.grad.unlabeled[0]));
  CHECK(j.grad.unlabeled[0] < 0.0);
}
