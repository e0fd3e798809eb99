#include <cmath>
#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "canonica/autodiff/param_store.hpp"
#include "canonica/autodiff/tape.hpp"
#include "canonica/errors.hpp"

using namespace canonica;
using ad::Matrix;
using ad::Tape;
using ad::Var;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

Matrix random_matrix(int r, int c, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) m(i, j) = u(rng);
  }
  return m;
}

using Builder = std::function<Var(Tape&, std::vector<Var>&)>;

// Max relative error between the analytic gradient of sum(probe .* f(inputs))
// and central differences with h = 1e-4.
double fd_error(const Builder& build, const std::vector<Matrix>& inputs, std::mt19937_64& rng) {
  Matrix probe;
  auto evaluate = [&](const std::vector<Matrix>& in, std::vector<Matrix>* grads) {
    Tape tape;
    std::vector<Var> leaves;
    for (const auto& m : in) leaves.push_back(tape.leaf(m));
    const Var out = build(tape, leaves);
    tape.forward(out);
    if (probe.size() == 0) probe = random_matrix(static_cast<int>(out.rows()), static_cast<int>(out.cols()), rng);
    const Var root = ad::sum(out * tape.constant(probe));
    const double value = tape.forward_scalar(root);
    if (grads != nullptr) {
      tape.backward(root);
      for (const auto& l : leaves) grads->push_back(tape.grad(l));
    }
    return value;
  };
  std::vector<Matrix> grads;
  evaluate(inputs, &grads);
  const double h = 1e-4;
  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (Eigen::Index e = 0; e < inputs[k].size(); ++e) {
      auto plus = inputs;
      auto minus = inputs;
      plus[k](e) += h;
      minus[k](e) -= h;
      const double fd = (evaluate(plus, nullptr) - evaluate(minus, nullptr)) / (2 * h);
      const double an = grads[k](e);
      const double err = std::abs(fd - an) / std::max(1.0, std::max(std::abs(fd), std::abs(an)));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace

TEST(Forward, SpecExamples) {
  Tape tape;
  EXPECT_DOUBLE_EQ(tape.forward_scalar(tape.constant(2.0) + tape.constant(3.0)), 5.0);
  EXPECT_DOUBLE_EQ(tape.forward_scalar(ad::sigmoid(tape.constant(0.0))), 0.5);
  EXPECT_NEAR(tape.forward_scalar(ad::softplus(tape.constant(0.0))), std::log(2.0), 1e-15);
}

TEST(Backward, PowerRuleAndSigmoidSlope) {
  Tape tape;
  const Var x = tape.leaf(scalar(3.0));
  const Var y = ad::pow(x, 2.0);
  tape.backward(y);
  EXPECT_NEAR(tape.grad(x)(0, 0), 6.0, 1e-12);

  Tape t2;
  const Var z = t2.leaf(scalar(0.0));
  t2.backward(ad::sigmoid(z));
  EXPECT_NEAR(t2.grad(z)(0, 0), 0.25, 1e-15);
}

TEST(Backward, GradIsZeroBeforeBackward) {
  Tape tape;
  const Var x = tape.leaf(Matrix::Ones(2, 3));
  const Var y = ad::sum(x * x);
  tape.forward(y);
  EXPECT_TRUE(tape.grad(x).isZero());
}

TEST(Backward, SoftplusStableForLargeInputs) {
  Tape tape;
  Matrix m(1, 3);
  m << -800.0, 0.0, 800.0;
  const Var x = tape.leaf(m);
  const Var y = ad::softplus(x);
  tape.backward(ad::sum(y));
  EXPECT_NEAR(tape.value(y)(0, 0), 0.0, 1e-300);
  EXPECT_NEAR(tape.value(y)(0, 2), 800.0, 1e-12);
  EXPECT_NEAR(tape.grad(x)(0, 0), 0.0, 1e-300);
  EXPECT_NEAR(tape.grad(x)(0, 1), 0.5, 1e-15);
  EXPECT_NEAR(tape.grad(x)(0, 2), 1.0, 1e-15);
}

struct UnaryCase {
  const char* name;
  std::function<Var(Var)> op;
  double lo;
  double hi;
};

TEST(FiniteDifference, UnaryPrimitives) {
  const std::vector<UnaryCase> cases = {
      {"exp", [](Var a) { return ad::exp(a); }, -2, 2},
      {"log", [](Var a) { return ad::log(a); }, 0.2, 3},
      {"sin", [](Var a) { return ad::sin(a); }, -3, 3},
      {"cos", [](Var a) { return ad::cos(a); }, -3, 3},
      {"sigmoid", [](Var a) { return ad::sigmoid(a); }, -6, 6},
      {"softplus", [](Var a) { return ad::softplus(a); }, -6, 6},
      {"tanh", [](Var a) { return ad::tanh(a); }, -3, 3},
      {"pow", [](Var a) { return ad::pow(a, 2.5); }, 0.2, 2},
      {"neg", [](Var a) { return -a; }, -1, 1},
      {"scale", [](Var a) { return a * 1.7; }, -1, 1},
      {"shift", [](Var a) { return a + 0.3; }, -1, 1},
      {"row_sum", [](Var a) { return ad::row_sum(a); }, -1, 1},
      {"col_sum", [](Var a) { return ad::col_sum(a); }, -1, 1},
      {"reshape", [](Var a) { return ad::reshape(a, 2, 10); }, -1, 1},
      {"slice_cols", [](Var a) { return ad::slice_cols(a, 1, 2); }, -1, 1},
      {"gather_rows", [](Var a) { return ad::gather_rows(a, {3, 0, 0, 2}); }, -1, 1},
  };
  std::mt19937_64 rng(11);
  for (const auto& c : cases) {
    for (int trial = 0; trial < 100; ++trial) {
      const std::vector<Matrix> in{random_matrix(4, 5, rng, c.lo, c.hi)};
      const double err = fd_error([&](Tape&, std::vector<Var>& v) { return c.op(v[0]); }, in, rng);
      ASSERT_LT(err, 1e-3) << c.name << " trial " << trial;
    }
  }
}

TEST(FiniteDifference, AbsAwayFromKink) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix m = random_matrix(3, 4, rng);
    for (Eigen::Index e = 0; e < m.size(); ++e) m(e) += m(e) >= 0 ? 0.01 : -0.01;
    const double err = fd_error([](Tape&, std::vector<Var>& v) { return ad::abs(v[0]); }, {m}, rng);
    ASSERT_LT(err, 1e-3);
  }
}

TEST(FiniteDifference, BinaryPrimitivesWithBroadcasting) {
  std::mt19937_64 rng(3);
  const std::vector<std::pair<int, int>> rhs_shapes = {{4, 3}, {1, 3}, {4, 1}, {1, 1}};
  const std::vector<std::function<Var(Var, Var)>> ops = {
      [](Var a, Var b) { return a + b; }, [](Var a, Var b) { return a - b; },
      [](Var a, Var b) { return a * b; }, [](Var a, Var b) { return a / b; }};
  for (const auto& op : ops) {
    for (auto [r, c] : rhs_shapes) {
      for (int trial = 0; trial < 25; ++trial) {
        const std::vector<Matrix> in{random_matrix(4, 3, rng), random_matrix(r, c, rng, 0.5, 2.0)};
        const double err =
            fd_error([&](Tape&, std::vector<Var>& v) { return op(v[0], v[1]); }, in, rng);
        ASSERT_LT(err, 1e-3);
        // Broadcast operand on the left as well.
        const std::vector<Matrix> swapped{in[1], random_matrix(4, 3, rng, 0.5, 2.0)};
        const double err2 =
            fd_error([&](Tape&, std::vector<Var>& v) { return op(v[0], v[1]); }, swapped, rng);
        ASSERT_LT(err2, 1e-3);
      }
    }
  }
}

TEST(FiniteDifference, MatmulAndConcat) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const std::vector<Matrix> in{random_matrix(5, 3, rng), random_matrix(4, 3, rng),
                                 random_matrix(5, 2, rng)};
    const double err = fd_error(
        [](Tape&, std::vector<Var>& v) {
          const Var parts[2] = {ad::matmul(v[0], v[1]), v[2]};
          return ad::concat_cols(parts);
        },
        in, rng);
    ASSERT_LT(err, 1e-3);
  }
}

TEST(FiniteDifference, ShapeOps) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const std::vector<Matrix> in{random_matrix(3, 4, rng), random_matrix(6, 2, rng)};
    const double err = fd_error(
        [](Tape&, std::vector<Var>& v) {
          const Var g = ad::gather_rows(v[0], {2, 0, 2, 1, 1, 2});
          const Var s = ad::slice_cols(g, 1, 2) * ad::tanh(ad::slice_cols(g, 0, 2));
          const Var parts[2] = {ad::reshape(s + v[1], 3, 4), ad::slice_cols(v[0], 3, 1)};
          return ad::concat_cols(parts);
        },
        in, rng);
    ASSERT_LT(err, 1e-3) << "trial " << trial;
  }
}

TEST(FiniteDifference, TwoLayerMlp) {
  std::mt19937_64 rng(21);
  const std::vector<Matrix> in{random_matrix(6, 3, rng), random_matrix(8, 3, rng),
                               random_matrix(1, 8, rng), random_matrix(2, 8, rng),
                               random_matrix(1, 2, rng)};
  const double err = fd_error(
      [](Tape&, std::vector<Var>& v) {
        const Var h = ad::softplus(ad::matmul(v[0], v[1]) + v[2]);
        return ad::matmul(h, v[3]) + v[4];
      },
      in, rng);
  EXPECT_LT(err, 1e-3);
}

TEST(Backward, LinearInRoot) {
  std::mt19937_64 rng(4);
  const Matrix xv = random_matrix(3, 3, rng);
  auto grad_of = [&](double a, double b) {
    Tape tape;
    const Var x = tape.leaf(xv);
    const Var f = ad::sum(ad::sin(x) * x);
    const Var g = ad::sum(ad::exp(x));
    tape.backward(f * a + g * b);
    return tape.grad(x);
  };
  const Matrix combo = grad_of(2.0, -3.0);
  const Matrix expected = 2.0 * grad_of(1.0, 0.0) - 3.0 * grad_of(0.0, 1.0);
  EXPECT_LT((combo - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Backward, SharedSubexpressionAccumulates) {
  Tape tape;
  const Var x = tape.leaf(scalar(2.0));
  const Var y = x * x;
  tape.backward(y + y);
  EXPECT_DOUBLE_EQ(tape.grad(x)(0, 0), 8.0);
}

TEST(Tape, ShapeMismatchThrows) {
  Tape tape;
  const Var a = tape.leaf(Matrix::Ones(2, 3));
  const Var b = tape.leaf(Matrix::Ones(3, 2));
  EXPECT_THROW(a + b, GraphError);
  EXPECT_THROW(ad::matmul(a, b), GraphError);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  ad::ParamStore store;
  const auto id = store.add("w", Matrix::Constant(2, 2, 0.7));
  store.zero_grad();
  ad::adam_step(store, ad::AdamOptions{0.1});
  EXPECT_TRUE(store.value(id).isApprox(Matrix::Constant(2, 2, 0.7)));
  EXPECT_EQ(store.step(), 1);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  ad::ParamStore store;
  const auto id = store.add("w", scalar(1.0));
  store.at(id).grad = scalar(1.0);
  ad::adam_step(store, ad::AdamOptions{0.1});
  EXPECT_NEAR(store.value(id)(0, 0), 0.9, 1e-6);
  EXPECT_EQ(store.at(id).adam_m.rows(), 1);
  EXPECT_EQ(store.at(id).adam_v.cols(), 1);
}

TEST(Adam, IdenticalParametersGetIdenticalUpdates) {
  ad::ParamStore store;
  const auto a = store.add("a", Matrix::Constant(2, 3, 0.4));
  const auto b = store.add("b", Matrix::Constant(2, 3, 0.4));
  for (int step = 0; step < 5; ++step) {
    store.at(a).grad = Matrix::Constant(2, 3, 0.3 * step - 0.5);
    store.at(b).grad = store.at(a).grad;
    ad::adam_step(store, ad::AdamOptions{});
  }
  EXPECT_EQ(store.value(a), store.value(b));
}

TEST(Adam, NonFiniteGradientThrowsAndLeavesStore) {
  ad::ParamStore store;
  const auto id = store.add("w", scalar(1.0));
  store.at(id).grad = scalar(std::nan(""));
  EXPECT_THROW(ad::adam_step(store, ad::AdamOptions{}), NumericError);
  EXPECT_EQ(store.value(id)(0, 0), 1.0);
  EXPECT_EQ(store.step(), 0);
}

TEST(ParamBinder, BindsOnceAndCollectsGradients) {
  ad::ParamStore store;
  const auto w = store.add("w", Matrix::Constant(1, 1, 3.0));
  store.add("unused", Matrix::Ones(2, 2));
  Tape tape;
  ad::ParamBinder bind(tape, store);
  const Var a = bind(w);
  const Var b = bind(w);
  EXPECT_EQ(a.id(), b.id());
  tape.backward(a * b);
  const auto grads = bind.gradients();
  ASSERT_EQ(grads.size(), 2u);
  EXPECT_DOUBLE_EQ(grads[0](0, 0), 6.0);
  EXPECT_EQ(grads[1].size(), 0);
}
