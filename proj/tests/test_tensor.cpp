#include "ctlab/gradcheck.hpp"
#include "ctlab/tensor.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace ctlab;

namespace {

Tensor mat(Index r, Index c, std::initializer_list<double> v) {
  Tensor t(r, c);
  std::copy(v.begin(), v.end(), t.data());
  return t;
}

Tensor random_tensor(Index r, Index c, std::mt19937_64& rng, double s = 1.0) {
  std::normal_distribution<double> n(0.0, s);
  Tensor t(r, c);
  for (Index k = 0; k < t.size(); ++k) t.data()[k] = n(rng);
  return t;
}

// plain loop softmax used as an independent oracle
Tensor naive_softmax(const Tensor& a, Axis axis) {
  Tensor out(a.rows(), a.cols());
  if (axis == Axis::Row) {
    for (Index i = 0; i < a.rows(); ++i) {
      double mx = a.row(i).maxCoeff();
      double z = 0;
      for (Index j = 0; j < a.cols(); ++j) z += std::exp(a(i, j) - mx);
      for (Index j = 0; j < a.cols(); ++j) out(i, j) = std::exp(a(i, j) - mx) / z;
    }
    return out;
  }
  return naive_softmax(a.transpose(), Axis::Row).transpose();
}

}  // namespace

TEST_CASE("matmul shape algebra") {
  Tape t;
  Var a = t.constant(Tensor::Ones(2, 3));
  Var b = t.constant(Tensor::Ones(3, 4));
  Var c = matmul(a, b);
  CHECK(c.rows() == 2);
  CHECK(c.cols() == 4);
  CHECK(c.value()(1, 3) == 3.0);
  CHECK_THROWS_AS(matmul(b, b), ShapeError);
}

TEST_CASE("shape mismatch message names both shapes") {
  Tape t;
  Var a = t.constant(Tensor::Ones(2, 3));
  Var b = t.constant(Tensor::Ones(3, 2));
  try {
    add(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2x3") != std::string::npos);
    CHECK(msg.find("3x2") != std::string::npos);
  }
}

TEST_CASE("elementwise primitives") {
  Tape t;
  CHECK(leaky_relu(t.constant(mat(1, 1, {-1.0})), 0.1).item() == doctest::Approx(-0.1).epsilon(1e-15));
  CHECK(leaky_relu(t.constant(mat(1, 1, {2.0})), 0.1).item() == 2.0);
  CHECK(exp(t.constant(mat(1, 1, {0.0}))).item() == 1.0);
  CHECK(log(t.constant(mat(1, 1, {1.0}))).item() == 0.0);
  CHECK_THROWS_AS(log(t.constant(mat(1, 2, {1.0, 0.0}))), std::domain_error);
  CHECK_THROWS_AS(log(t.constant(mat(1, 1, {-2.0}))), std::domain_error);
  CHECK(scale(t.constant(mat(1, 1, {3.0})), 2.0).item() == 6.0);
  Var c = concat_rows(t.constant(mat(1, 2, {1, 2})), t.constant(mat(2, 2, {3, 4, 5, 6})));
  CHECK(c.value() == mat(3, 2, {1, 2, 3, 4, 5, 6}));
}

TEST_CASE("reductions") {
  Tape t;
  Var a = t.constant(mat(2, 3, {1, 2, 3, 4, 5, 6}));
  CHECK(sum(a).item() == 21.0);
  CHECK(mean(a).item() == 3.5);
  CHECK(sum(a, Axis::Row).value() == mat(2, 1, {6, 15}));
  CHECK(sum(a, Axis::Col).value() == mat(1, 3, {5, 7, 9}));
  CHECK(mean(a, Axis::Col).value() == mat(1, 3, {2.5, 3.5, 4.5}));
}

TEST_CASE("normalize_rows floors the norm") {
  Tape t;
  Var y = normalize_rows(t.constant(mat(2, 2, {3, 4, 0, 0})), 1e-8);
  CHECK(y.value()(0, 0) == doctest::Approx(0.6));
  CHECK(y.value()(0, 1) == doctest::Approx(0.8));
  CHECK(y.value().row(1).allFinite());
  CHECK(y.value().row(1).norm() == 0.0);
}

TEST_CASE("pairwise_sqdist") {
  Tape t;
  CHECK(pairwise_sqdist(t.constant(mat(1, 1, {0})), t.constant(mat(1, 1, {1}))).item() == 1.0);
  CHECK(pairwise_sqdist(t.constant(mat(1, 2, {0, 0})), t.constant(mat(1, 2, {3, 4}))).item() == 25.0);
  std::mt19937_64 rng(3);
  Tensor a = random_tensor(7, 3, rng);
  Tensor d = pairwise_sqdist_values(a, a);
  for (Index i = 0; i < 7; ++i) CHECK(d(i, i) == 0.0);
  Tensor b = random_tensor(5, 3, rng);
  CHECK(pairwise_sqdist_values(a, b) == pairwise_sqdist_values(b, a).transpose());
  CHECK_THROWS_AS(pairwise_sqdist(t.constant(a), t.constant(Tensor::Ones(2, 2))), ShapeError);
}

TEST_CASE("pairwise_sqdiff layout") {
  Tape t;
  Var d = pairwise_sqdiff(t.constant(mat(2, 2, {0, 0, 1, 1})), t.constant(mat(1, 2, {3, -1})));
  CHECK(d.value() == mat(2, 2, {9, 1, 4, 4}));
}

TEST_CASE("softmax examples") {
  Tape t;
  Tensor s = softmax(t.constant(mat(1, 2, {0, 0})), Axis::Row).value();
  CHECK(s == mat(1, 2, {0.5, 0.5}));
  s = softmax(t.constant(mat(1, 2, {1000, 1000})), Axis::Row).value();
  CHECK(s == mat(1, 2, {0.5, 0.5}));
  s = softmax(t.constant(mat(1, 2, {0, -1})), Axis::Row).value();
  const double hand = 1.0 / (1.0 + std::exp(-1.0));
  CHECK(s(0, 0) == doctest::Approx(0.73106).epsilon(1e-5));
  CHECK(s(0, 0) == doctest::Approx(hand).epsilon(1e-14));
  CHECK(s(0, 1) == doctest::Approx(1.0 - hand).epsilon(1e-14));
  Tensor bad = mat(1, 2, {0, std::nan("")});
  CHECK_THROWS(softmax(t.constant(bad), Axis::Row));
}

TEST_CASE("softmax agrees with a loop oracle and sums to one") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor a = random_tensor(1 + trial % 7, 1 + trial % 11, rng, 5.0);
    for (Axis ax : {Axis::Row, Axis::Col}) {
      Tensor s = softmax_values(a, ax);
      Tensor o = naive_softmax(a, ax);
      CHECK((s - o).cwiseAbs().maxCoeff() < 1e-14);
      if (ax == Axis::Row) {
        CHECK((s.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
      } else {
        CHECK((s.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
      }
    }
    // column softmax is the transposed row softmax bit for bit
    CHECK(softmax_values(a, Axis::Col) == softmax_values(a.transpose(), Axis::Row).transpose());
  }
}

TEST_CASE("backward on small expressions") {
  Param x(mat(1, 2, {1, 2}));
  {
    Tape t;
    t.backward(sum(square(t.param(x))));
  }
  CHECK(x.grad == mat(1, 2, {2, 4}));

  Param y(Tensor::Constant(1, 4, 3.0));
  {
    Tape t;
    t.backward(mean(t.param(y)));
  }
  CHECK(y.grad == Tensor::Constant(1, 4, 0.25));

  // repeated calls accumulate
  {
    Tape t;
    Var l = mean(t.param(y));
    t.backward(l);
    t.backward(l);
  }
  CHECK(y.grad == Tensor::Constant(1, 4, 0.75));
  y.zero_grad();
  CHECK(y.grad == Tensor::Zero(1, 4));

  Tape t;
  CHECK_THROWS_AS(t.backward(t.param(y)), ShapeError);
}

TEST_CASE("tape is topologically ordered") {
  Param p(mat(2, 2, {1, 2, 3, 4}));
  Tape t;
  Var a = t.param(p);
  Var b = matmul(a, transpose(a));
  Var c = softmax(b, Axis::Row);
  sum(mul(c, b));
  for (std::size_t id = 0; id < t.size(); ++id) {
    for (int parent : t.node(static_cast<int>(id)).parents) CHECK(parent < static_cast<int>(id));
  }
}

TEST_CASE("gradients match finite differences for every primitive") {
  std::mt19937_64 rng(5);
  Param a(random_tensor(3, 4, rng));
  Param b(random_tensor(3, 4, rng));
  Param w(random_tensor(4, 2, rng));
  Param row(random_tensor(1, 4, rng));
  Param pos((random_tensor(3, 4, rng).array().abs() + 0.5).matrix());
  Param v(random_tensor(5, 4, rng));
  std::vector<Param*> all{&a, &b, &w, &row, &pos, &v};

  auto check = [&](const char* name, const ScalarFn& fn) {
    const std::string label = name;
    CAPTURE(label);
    const GradCheckResult r = grad_check(fn, all);
    CHECK(r.max_rel_error < 1e-5);
  };
  // the dot with a fixed random tensor avoids symmetric cancellations
  const Tensor probe34 = random_tensor(3, 4, rng);
  auto dot = [](const Var& x, const Tensor& p) { return sum(mul(x, x.tape()->constant(p))); };

  check("add/sub/mul", [&](Tape& t) { return dot(mul(t.param(a) + t.param(b), t.param(a) - t.param(b)), probe34); });
  check("square/exp", [&](Tape& t) { return dot(exp(square(t.param(a))), probe34); });
  check("log", [&](Tape& t) { return dot(log(t.param(pos)), probe34); });
  check("matmul/transpose", [&](Tape& t) { return sum(square(matmul(t.param(a), transpose(t.param(b))))); });
  check("sum/mean axes", [&](Tape& t) {
    Var x = t.param(a);
    return sum(square(sum(x, Axis::Row))) + sum(square(mean(x, Axis::Col))) + mean(square(x));
  });
  check("leaky_relu", [&](Tape& t) { return dot(leaky_relu(t.param(a), 0.1), probe34); });
  check("normalize_rows", [&](Tape& t) { return dot(normalize_rows(t.param(a), 1e-8), probe34); });
  check("concat/scale/add_scalar", [&](Tape& t) {
    Var c = concat_rows(t.param(a), add_scalar(scale(t.param(b), 3.0), 0.5));
    return sum(square(c));
  });
  check("broadcast_rows", [&](Tape& t) { return dot(broadcast_rows(t.param(row), 3), probe34); });
  check("reshape", [&](Tape& t) { return sum(square(matmul(reshape(t.param(a), 4, 3), t.constant(Tensor::Ones(3, 1))))); });
  const Tensor probe35 = random_tensor(3, 5, rng);
  check("pairwise_sqdist", [&](Tape& t) { return dot(pairwise_sqdist(t.param(a), t.param(v)), probe35); });
  const Tensor probe15 = random_tensor(15, 4, rng);
  check("pairwise_sqdiff", [&](Tape& t) { return dot(pairwise_sqdiff(t.param(a), t.param(v)), probe15); });
  check("softmax row composed with dot", [&](Tape& t) { return dot(softmax(t.param(a), Axis::Row), probe34); });
  check("softmax col", [&](Tape& t) { return dot(softmax(t.param(a), Axis::Col), probe34); });
  check("sorted_w2", [&](Tape& t) { return sorted_w2(t.param(a), t.param(b)); });
  check("transport_loss", [&](Tape& t) {
    Var c = pairwise_sqdist(t.param(a), t.param(v));
    Var e = pairwise_sqdist(t.param(b), scale(t.param(v), 0.7));
    return transport_loss(c, e, 0.3);
  });
}

TEST_CASE("transport_loss equals the softmax composition") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 1 + trial % 5;
    const Index m = 1 + (trial * 3) % 7;
    Tensor c = random_tensor(n, m, rng).cwiseAbs();
    Tensor e = random_tensor(n, m, rng, 3.0);
    const double rho = (trial % 5) / 4.0;
    Tape t;
    Var fused = transport_loss(t.constant(c), t.constant(e), rho);
    Tensor f = naive_softmax(-e, Axis::Row);
    Tensor b = naive_softmax(-e, Axis::Col);
    const double fwd = (c.array() * f.array()).sum() / static_cast<double>(n);
    const double bwd = (c.array() * b.array()).sum() / static_cast<double>(m);
    CHECK(fused.item() == doctest::Approx(rho * fwd + (1 - rho) * bwd).epsilon(1e-13));
    CHECK(transport_parts(fused).forward == doctest::Approx(fwd).epsilon(1e-13));
    CHECK(transport_parts(fused).backward == doctest::Approx(bwd).epsilon(1e-13));
  }
  Tape t;
  CHECK_THROWS(transport_loss(t.constant(Tensor::Ones(1, 1)), t.constant(Tensor::Ones(1, 1)), 1.5));
}

TEST_CASE("sorted_w2 value") {
  Tape t;
  CHECK(sorted_w2(t.constant(mat(3, 1, {2, 0, 1})), t.constant(mat(3, 1, {1, 3, 2}))).item() == 1.0);
  CHECK(sorted_w2(t.constant(mat(1, 1, {0})), t.constant(mat(1, 1, {5}))).item() == 25.0);
}

TEST_CASE("grad_check restores parameters and reports failures") {
  Param p(mat(1, 3, {0.3, -0.2, 1.1}));
  const Tensor before = p.value;
  std::vector<Param*> ps{&p};
  GradCheckResult r = grad_check([&](Tape& t) { return sum(exp(t.param(p))); }, ps);
  CHECK(r.max_rel_error < 1e-7);
  CHECK(r.coordinates == 3);
  CHECK(p.value == before);
  CHECK(p.grad == Tensor::Zero(1, 3));
  // a deliberately wrong gradient: value uses p twice, the tape sees it once
  r = grad_check(
      [&](Tape& t) {
        Var x = t.param(p);
        return sum(mul(x, t.constant(p.value)));
      },
      ps);
  CHECK(r.max_rel_error > 0.1);
}
