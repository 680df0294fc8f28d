#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "sdge/autodiff.hpp"

using namespace sdge;
using namespace sdge::test;
using ad::NodeId;
using ad::Parameter;
using ad::Tape;

namespace {

// Sum-of-entries reduction turns any op output into a scalar loss whose
// gradient exercises the op's backward rule with a dense upstream signal.
NodeId to_loss(Tape& tape, NodeId node) {
  return tape.frobenius_sq(tape.add_scalar(node, 0.3));
}

}  // namespace

TEST_CASE("scale: gradient of 3x is 3") {
  Parameter x("x", DenseMatrix(1, 1, 2.0));
  Tape tape;
  const NodeId loss = tape.sum_all(tape.scale(tape.parameter(x), 3.0));
  tape.backward(loss);
  CHECK(x.grad(0, 0) == 3.0);
}

TEST_CASE("sigmoid at zero: value 0.5, gradient 0.25") {
  Parameter x("x", DenseMatrix(1, 1, 0.0));
  Tape tape;
  const NodeId s = tape.sigmoid(tape.parameter(x));
  CHECK(tape.value(s)(0, 0) == 0.5);
  tape.backward(tape.sum_all(s));
  CHECK(x.grad(0, 0) == 0.25);
}

TEST_CASE("frobenius-squared gradient is 2M") {
  Parameter m("m", random_dense(3, 4, 17));
  Tape tape;
  tape.backward(tape.frobenius_sq(tape.parameter(m)));
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 4; ++j) CHECK(m.grad(i, j) == doctest::Approx(2.0 * m.value(i, j)));
  }
}

TEST_CASE("loss x^T x has gradient 2x") {
  Parameter x("x", random_dense(5, 1, 19));
  Tape tape;
  const NodeId xs = tape.parameter(x);
  tape.backward(tape.sum_all(tape.dot_rows(xs, xs)));
  for (int i = 0; i < 5; ++i) CHECK(x.grad(i, 0) == doctest::Approx(2.0 * x.value(i, 0)));
}

TEST_CASE("fan-out: two consumers accumulate additively") {
  Parameter x("x", DenseMatrix(2, 2, 1.5));
  Tape tape;
  const NodeId xs = tape.parameter(x);
  const NodeId loss = tape.add(tape.sum_all(tape.scale(xs, 2.0)), tape.sum_all(tape.scale(xs, 5.0)));
  tape.backward(loss);
  for (double g : x.grad.data()) CHECK(g == 7.0);
}

TEST_CASE("backward requires a scalar loss") {
  Parameter x("x", DenseMatrix(2, 2, 1.0));
  Tape tape;
  const NodeId xs = tape.parameter(x);
  CHECK_THROWS_AS(tape.backward(xs), std::invalid_argument);
}

TEST_CASE("shape mismatches name the op") {
  Tape tape;
  const NodeId a = tape.constant(DenseMatrix(2, 3));
  const NodeId b = tape.constant(DenseMatrix(2, 3));
  CHECK_THROWS_WITH_AS(static_cast<void>(tape.matmul(a, b)), doctest::Contains("matmul"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(static_cast<void>(tape.add_rowvec(a, b)), doctest::Contains("add_rowvec"),
                       std::invalid_argument);
}

TEST_CASE("every primitive passes finite differences on random instances") {
  const Graph g = random_connected_graph(6, 0.4, 2024);
  std::mt19937_64 seeds(42);

  for (int instance = 0; instance < 20; ++instance) {
    const std::uint64_t s0 = seeds(), s1 = seeds(), s2 = seeds();
    {
      Parameter a("a", random_dense(3, 4, s0));
      Parameter b("b", random_dense(4, 2, s1));
      const auto report = ad::gradient_check(
          [&](Tape& t) { return to_loss(t, t.matmul(t.parameter(a), t.parameter(b))); },
          {&a, &b});
      CHECK(report.max_rel_error < 1e-4);
    }
    {
      Parameter a("a", random_dense(4, 3, s0));
      Parameter b("b", random_dense(4, 2, s1));
      const auto report = ad::gradient_check(
          [&](Tape& t) { return to_loss(t, t.matmul_tn(t.parameter(a), t.parameter(b))); },
          {&a, &b});
      CHECK(report.max_rel_error < 1e-4);
    }
    {
      Parameter h("h", random_dense(6, 3, s0));
      const auto report = ad::gradient_check(
          [&](Tape& t) { return to_loss(t, t.spmm(g.adjacency, t.parameter(h))); }, {&h});
      CHECK(report.max_rel_error < 1e-4);
    }
    {
      Parameter a("a", random_dense(3, 3, s0));
      Parameter b("b", random_dense(3, 3, s1));
      const auto report = ad::gradient_check(
          [&](Tape& t) { return to_loss(t, t.axpy(t.parameter(a), t.parameter(b), -1.7)); },
          {&a, &b});
      CHECK(report.max_rel_error < 1e-4);
    }
    {
      Parameter a("a", random_dense(4, 3, s0));
      Parameter row("row", random_dense(1, 3, s1));
      const auto report = ad::gradient_check(
          [&](Tape& t) { return to_loss(t, t.add_rowvec(t.parameter(a), t.parameter(row))); },
          {&a, &row});
      CHECK(report.max_rel_error < 1e-4);
    }
    {
      Parameter a("a", random_dense(3, 3, s0));
      const auto report = ad::gradient_check(
          [&](Tape& t) { return to_loss(t, t.sigmoid(t.parameter(a))); }, {&a});
      CHECK(report.max_rel_error < 1e-4);
    }
    {
      Parameter a("a", random_dense(3, 3, s0));
      const auto report = ad::gradient_check(
          [&](Tape& t) { return to_loss(t, t.log_sigmoid(t.parameter(a))); }, {&a});
      CHECK(report.max_rel_error < 1e-4);
    }
    {
      // Keep entries away from the ReLU kink so finite differences are valid.
      DenseMatrix v = random_dense(3, 4, s0);
      for (double& x : v.data()) x += x >= 0.0 ? 0.1 : -0.1;
      Parameter a("a", std::move(v));
      const auto report =
          ad::gradient_check([&](Tape& t) { return to_loss(t, t.relu(t.parameter(a))); }, {&a});
      CHECK(report.max_rel_error < 1e-4);
    }
    {
      Parameter x("x", random_dense(4, 3, s0));
      Parameter slopes("slopes", random_dense(2, 3, s1));
      Parameter intercepts("intercepts", random_dense(2, 3, s2, -0.5, 0.5));
      const auto report = ad::gradient_check(
          [&](Tape& t) {
            return to_loss(t, t.max_affine(t.parameter(x), t.parameter(slopes),
                                           t.parameter(intercepts)));
          },
          {&x, &slopes, &intercepts});
      CHECK(report.max_rel_error < 1e-3);  // kinks allow slightly looser slack
    }
    {
      Parameter a("a", random_dense(5, 3, s0));
      const auto report = ad::gradient_check(
          [&](Tape& t) { return to_loss(t, t.row_mean(t.parameter(a))); }, {&a});
      CHECK(report.max_rel_error < 1e-4);
    }
    {
      Parameter x("x", random_dense(6, 3, s0));
      Parameter gamma("gamma", random_dense(1, 3, s1, 0.5, 1.5));
      Parameter beta("beta", random_dense(1, 3, s2, -0.5, 0.5));
      const auto report = ad::gradient_check(
          [&](Tape& t) {
            return to_loss(
                t, t.batch_norm(t.parameter(x), t.parameter(gamma), t.parameter(beta)));
          },
          {&x, &gamma, &beta});
      CHECK(report.max_rel_error < 1e-4);
    }
    {
      Parameter z("z", random_dense(6, 2, s0));
      const auto report = ad::gradient_check(
          [&](Tape& t) { return t.trace_quad(t.parameter(z), g.adjacency); }, {&z});
      CHECK(report.max_rel_error < 1e-4);
    }
    {
      Parameter a("a", random_dense(5, 3, s0));
      Parameter b("b", random_dense(5, 3, s1));
      const auto report = ad::gradient_check(
          [&](Tape& t) { return to_loss(t, t.dot_rows(t.parameter(a), t.parameter(b))); },
          {&a, &b});
      CHECK(report.max_rel_error < 1e-4);
    }
    {
      Parameter a("a", random_dense(5, 3, s0));
      const std::vector<int> rows = {4, 0, 0, 2};
      const auto report = ad::gradient_check(
          [&](Tape& t) { return to_loss(t, t.gather_rows(t.parameter(a), rows)); }, {&a});
      CHECK(report.max_rel_error < 1e-4);
    }
    {
      Parameter a("a", random_dense(3, 4, s0));
      const auto report = ad::gradient_check(
          [&](Tape& t) { return to_loss(t, t.reshape(t.parameter(a), 4, 3)); }, {&a});
      CHECK(report.max_rel_error < 1e-4);
    }
    {
      Parameter a("a", random_dense(3, 2, s0));
      Parameter b("b", random_dense(3, 4, s1));
      const auto report = ad::gradient_check(
          [&](Tape& t) {
            return to_loss(t, t.concat_cols({t.parameter(a), t.parameter(b)}));
          },
          {&a, &b});
      CHECK(report.max_rel_error < 1e-4);
    }
    {
      Parameter a("a", random_dense(4, 4, s0));
      const auto report = ad::gradient_check(
          [&](Tape& t) { return t.sum_all(t.parameter(a)); }, {&a});
      CHECK(report.max_rel_error < 1e-4);
    }
  }
}

TEST_CASE("gradient_check on a quadratic form is exact to roundoff") {
  Parameter x("x", random_dense(4, 1, 31));
  const auto report = ad::gradient_check(
      [&](Tape& t) {
        const NodeId xs = t.parameter(x);
        return t.sum_all(t.dot_rows(xs, xs));
      },
      {&x}, 1e-5, 1.0);
  CHECK(report.max_rel_error < 1e-8);
}

TEST_CASE("gradient_check covers a two-layer sigmoid MLP") {
  Parameter w1("w1", random_dense(5, 4, 41));
  Parameter b1("b1", random_dense(1, 4, 42));
  Parameter w2("w2", random_dense(4, 3, 43));
  Parameter b2("b2", random_dense(1, 3, 44));
  const DenseMatrix input = random_dense(5, 5, 45);
  const auto report = ad::gradient_check(
      [&](Tape& t) {
        const NodeId x = t.constant(input);
        const NodeId h =
            t.sigmoid(t.add_rowvec(t.matmul(x, t.parameter(w1)), t.parameter(b1)));
        const NodeId out =
            t.sigmoid(t.add_rowvec(t.matmul(h, t.parameter(w2)), t.parameter(b2)));
        return t.frobenius_sq(out);
      },
      {&w1, &b1, &w2, &b2});
  CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("gradient_check covers batch norm statistics paths") {
  Parameter x("x", random_dense(8, 3, 51));
  Parameter gamma("gamma", random_dense(1, 3, 52, 0.5, 1.5));
  Parameter beta("beta", random_dense(1, 3, 53));
  const auto report = ad::gradient_check(
      [&](Tape& t) {
        return t.frobenius_sq(
            t.batch_norm(t.parameter(x), t.parameter(gamma), t.parameter(beta)));
      },
      {&x, &gamma, &beta});
  CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("backward is deterministic") {
  Parameter w("w", random_dense(6, 6, 61));
  const DenseMatrix input = random_dense(6, 6, 62);
  auto run = [&]() {
    w.zero_grad();
    Tape tape;
    const NodeId loss =
        tape.frobenius_sq(tape.sigmoid(tape.matmul(tape.constant(input), tape.parameter(w))));
    tape.backward(loss);
    return w.grad;
  };
  const DenseMatrix g1 = run();
  const DenseMatrix g2 = run();
  CHECK(max_abs_diff(g1, g2) == 0.0);
}

TEST_CASE("no gradient is recorded for constants or sparse operands") {
  const Graph g = random_connected_graph(5, 0.5, 71);
  Parameter z("z", random_dense(5, 2, 72));
  Tape tape;
  const NodeId zc = tape.parameter(z);
  const NodeId input = tape.constant(random_dense(5, 2, 73));
  const NodeId loss = tape.add(tape.trace_quad(zc, g.adjacency),
                               tape.sum_all(tape.dot_rows(zc, input)));
  tape.backward(loss);
  // The constant leaf keeps a zero gradient slot; the sparse matrix has none.
  CHECK(tape.grad(input).frobenius_norm_sq() == 0.0);
  CHECK(z.grad.frobenius_norm_sq() > 0.0);
}

TEST_CASE("batch norm zero-variance guard maps to the shift parameter") {
  Parameter gamma("gamma", DenseMatrix(1, 2, 1.0));
  Parameter beta("beta", DenseMatrix(1, 2, 0.75));
  Tape tape;
  const NodeId out =
      tape.batch_norm(tape.constant(DenseMatrix(4, 2, 0.0)), tape.parameter(gamma),
                      tape.parameter(beta));
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 2; ++j) CHECK(tape.value(out)(i, j) == 0.75);
  }
}
