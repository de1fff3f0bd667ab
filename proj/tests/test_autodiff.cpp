// Finite-difference verification of every tape operation, then of the
// composed losses. Inputs are drawn away from kinks (ReLU zeros, max ties)
// so central differences are valid.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>
#include <vector>

#include "socs/autodiff.hpp"
#include "socs/rng.hpp"

using namespace socs;
using ad::MatX;
using ad::Var;

namespace {

MatX<double> random_mat(Rng& rng, Eigen::Index r, Eigen::Index c,
                        double lo = -1.0, double hi = 1.0) {
  MatX<double> m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.uniform(lo, hi);
  return m;
}

// Keeps every entry at least `margin` away from zero so ReLU-style kinks
// cannot sit inside the finite-difference stencil.
MatX<double> random_mat_off_zero(Rng& rng, Eigen::Index r, Eigen::Index c,
                                 double margin = 0.05) {
  MatX<double> m = random_mat(rng, r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j)
      if (std::abs(m(i, j)) < margin)
        m(i, j) = m(i, j) < 0 ? m(i, j) - margin : m(i, j) + margin;
  return m;
}

// Builds the op over fresh leaves, reduces with fixed weights, and compares
// every input-entry gradient against a central difference.
//
// `build` receives leaf values and must return the op output Var on the
// given tape.
double max_grad_error(
    const std::vector<MatX<double>>& inputs,
    const std::function<Var<double>(ad::Tape<double>&,
                                    std::vector<Var<double>>&)>& build,
    const MatX<double>& weights, double eps = 1e-6) {
  auto scalar = [&](const std::vector<MatX<double>>& vals) {
    ad::Tape<double> tape;
    std::vector<Var<double>> leaves;
    for (const auto& v : vals) leaves.push_back(ad::param(tape, v));
    Var<double> out = build(tape, leaves);
    return (out.value().cwiseProduct(weights)).sum();
  };

  ad::Tape<double> tape;
  std::vector<Var<double>> leaves;
  for (const auto& v : inputs) leaves.push_back(ad::param(tape, v));
  Var<double> out = build(tape, leaves);
  auto w = ad::constant(tape, weights);
  auto loss = ad::sum_all(ad::cmul(out, w));
  tape.backward(loss.id);

  double worst = 0.0;
  for (std::size_t l = 0; l < inputs.size(); ++l) {
    const MatX<double>& g = tape.grad(leaves[l].id);
    std::vector<MatX<double>> probe = inputs;
    for (Eigen::Index i = 0; i < inputs[l].rows(); ++i)
      for (Eigen::Index j = 0; j < inputs[l].cols(); ++j) {
        const double save = probe[l](i, j);
        probe[l](i, j) = save + eps;
        const double up = scalar(probe);
        probe[l](i, j) = save - eps;
        const double dn = scalar(probe);
        probe[l](i, j) = save;
        const double fd = (up - dn) / (2 * eps);
        const double err = std::abs(fd - g(i, j)) /
                           std::max(1.0, std::max(std::abs(fd),
                                                  std::abs(g(i, j))));
        worst = std::max(worst, err);
      }
  }
  return worst;
}

constexpr double kTol = 5e-9;

}  // namespace

TEST_CASE("elementwise and linear ops match finite differences") {
  Rng rng(101);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index r = 2 + Eigen::Index(rng.uniform_int(4));
    const Eigen::Index c = 2 + Eigen::Index(rng.uniform_int(4));
    const MatX<double> w = random_mat(rng, r, c);

    SUBCASE("") {}  // keep doctest happy about loop structure
    CHECK(max_grad_error({random_mat(rng, r, c), random_mat(rng, r, c)},
                         [](ad::Tape<double>&, std::vector<Var<double>>& v) {
                           return ad::add(v[0], v[1]);
                         },
                         w) < kTol);
    CHECK(max_grad_error({random_mat(rng, r, c), random_mat(rng, r, c)},
                         [](ad::Tape<double>&, std::vector<Var<double>>& v) {
                           return ad::sub(v[0], v[1]);
                         },
                         w) < kTol);
    CHECK(max_grad_error({random_mat(rng, r, c), random_mat(rng, r, c)},
                         [](ad::Tape<double>&, std::vector<Var<double>>& v) {
                           return ad::cmul(v[0], v[1]);
                         },
                         w) < kTol);
    CHECK(max_grad_error({random_mat(rng, r, c)},
                         [](ad::Tape<double>&, std::vector<Var<double>>& v) {
                           return ad::scale(v[0], 1.7);
                         },
                         w) < kTol);
    CHECK(max_grad_error({random_mat_off_zero(rng, r, c)},
                         [](ad::Tape<double>&, std::vector<Var<double>>& v) {
                           return ad::relu(v[0]);
                         },
                         w) < kTol);
    const Eigen::Index inner = 2 + Eigen::Index(rng.uniform_int(3));
    CHECK(max_grad_error(
              {random_mat(rng, r, inner), random_mat(rng, inner, c)},
              [](ad::Tape<double>&, std::vector<Var<double>>& v) {
                return ad::matmul(v[0], v[1]);
              },
              w) < kTol);
    MatX<double> wt = w.transpose();
    CHECK(max_grad_error({random_mat(rng, r, c)},
                         [](ad::Tape<double>&, std::vector<Var<double>>& v) {
                           return ad::transpose(v[0]);
                         },
                         wt) < kTol);
    CHECK(max_grad_error({random_mat(rng, r, c), random_mat(rng, 1, c)},
                         [](ad::Tape<double>&, std::vector<Var<double>>& v) {
                           return ad::add_row_broadcast(v[0], v[1]);
                         },
                         w) < kTol);
    CHECK(max_grad_error({random_mat(rng, r, c), random_mat(rng, r, 1)},
                         [](ad::Tape<double>&, std::vector<Var<double>>& v) {
                           return ad::mul_col_broadcast(v[0], v[1]);
                         },
                         w) < kTol);
  }
}

TEST_CASE("row rearrangement ops match finite differences") {
  Rng rng(102);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 2 + Eigen::Index(rng.uniform_int(3));
    const int k = 2 + int(rng.uniform_int(3));
    const Eigen::Index c = 2 + Eigen::Index(rng.uniform_int(4));

    std::vector<int> idx;
    const Eigen::Index picks = 1 + Eigen::Index(rng.uniform_int(8));
    for (Eigen::Index i = 0; i < picks; ++i)
      idx.push_back(int(rng.uniform_int(std::uint64_t(n))));
    CHECK(max_grad_error(
              {random_mat(rng, n, c)},
              [idx](ad::Tape<double>&, std::vector<Var<double>>& v) {
                return ad::gather_rows(v[0], idx);
              },
              random_mat(rng, Eigen::Index(idx.size()), c)) < kTol);

    CHECK(max_grad_error({random_mat(rng, n, c)},
                         [k](ad::Tape<double>&, std::vector<Var<double>>& v) {
                           return ad::repeat_rows(v[0], k);
                         },
                         random_mat(rng, n * k, c)) < kTol);
    CHECK(max_grad_error({random_mat(rng, n * k, c)},
                         [k](ad::Tape<double>&, std::vector<Var<double>>& v) {
                           return ad::group_sum_rows(v[0], k);
                         },
                         random_mat(rng, n, c)) < kTol);
    CHECK(max_grad_error({random_mat(rng, n * k, 1)},
                         [k](ad::Tape<double>&, std::vector<Var<double>>& v) {
                           return ad::fold_rows(v[0], k);
                         },
                         random_mat(rng, n, k)) < kTol);
    CHECK(max_grad_error({random_mat(rng, n, k)},
                         [](ad::Tape<double>&, std::vector<Var<double>>& v) {
                           return ad::unfold_rows(v[0]);
                         },
                         random_mat(rng, n * k, 1)) < kTol);
    CHECK(max_grad_error(
              {random_mat(rng, n, c), random_mat(rng, n + 1, c)},
              [](ad::Tape<double>&, std::vector<Var<double>>& v) {
                return ad::concat_rows(v[0], v[1]);
              },
              random_mat(rng, 2 * n + 1, c)) < kTol);
    CHECK(max_grad_error(
              {random_mat(rng, n, c), random_mat(rng, n, c + 2)},
              [](ad::Tape<double>&, std::vector<Var<double>>& v) {
                return ad::concat_cols<double>({v[0], v[1]});
              },
              random_mat(rng, n, 2 * c + 2)) < kTol);
  }
}

TEST_CASE("group max routes gradient to the argmax entry") {
  Rng rng(103);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 2 + Eigen::Index(rng.uniform_int(3));
    const int k = 2 + int(rng.uniform_int(3));
    const Eigen::Index c = 2 + Eigen::Index(rng.uniform_int(3));
    // Separate entries so the argmax cannot flip inside the FD stencil.
    MatX<double> m(n * k, c);
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index gidx = 0; gidx < n; ++gidx) {
        std::vector<double> vals(static_cast<std::size_t>(k));
        for (auto& v : vals) v = rng.uniform(-1.0, 1.0);
        std::sort(vals.begin(), vals.end());
        for (int r = 1; r < k; ++r)
          if (vals[std::size_t(r)] - vals[std::size_t(r - 1)] < 1e-3)
            vals[std::size_t(r)] = vals[std::size_t(r - 1)] + 1e-3;
        // Random placement of the sorted values within the group.
        std::vector<int> order(static_cast<std::size_t>(k));
        for (int r = 0; r < k; ++r) order[std::size_t(r)] = r;
        for (int r = k - 1; r > 0; --r)
          std::swap(order[std::size_t(r)],
                    order[std::size_t(rng.uniform_int(std::uint64_t(r + 1)))]);
        for (int r = 0; r < k; ++r)
          m(gidx * k + order[std::size_t(r)], j) = vals[std::size_t(r)];
      }
    CHECK(max_grad_error({m},
                         [k](ad::Tape<double>&, std::vector<Var<double>>& v) {
                           return ad::group_max_rows(v[0], k);
                         },
                         random_mat(rng, n, c)) < kTol);
  }
}

TEST_CASE("reductions match finite differences") {
  Rng rng(104);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 2 + Eigen::Index(rng.uniform_int(4));
    const Eigen::Index c = 2 + Eigen::Index(rng.uniform_int(4));
    CHECK(max_grad_error({random_mat(rng, n, c)},
                         [](ad::Tape<double>&, std::vector<Var<double>>& v) {
                           return ad::rowwise_sum(v[0]);
                         },
                         random_mat(rng, n, 1)) < kTol);
    CHECK(max_grad_error({random_mat(rng, n, c)},
                         [](ad::Tape<double>&, std::vector<Var<double>>& v) {
                           return ad::colwise_mean(v[0]);
                         },
                         random_mat(rng, 1, c)) < kTol);
    CHECK(max_grad_error({random_mat(rng, n, c)},
                         [](ad::Tape<double>&, std::vector<Var<double>>& v) {
                           return ad::sum_all(v[0]);
                         },
                         MatX<double>::Ones(1, 1)) < kTol);
    // Rows well away from the origin keep the norm differentiable.
    MatX<double> far = random_mat_off_zero(rng, n, c, 0.3);
    CHECK(max_grad_error({far},
                         [](ad::Tape<double>&, std::vector<Var<double>>& v) {
                           return ad::row_l2_norms(v[0]);
                         },
                         random_mat(rng, n, 1)) < kTol);
  }
}

TEST_CASE("softmax, layer norm, and fused cross-entropy match finite differences") {
  Rng rng(105);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 2 + Eigen::Index(rng.uniform_int(4));
    const Eigen::Index c = 3 + Eigen::Index(rng.uniform_int(4));
    CHECK(max_grad_error({random_mat(rng, n, c, -3.0, 3.0)},
                         [](ad::Tape<double>&, std::vector<Var<double>>& v) {
                           return ad::softmax_rows(v[0]);
                         },
                         random_mat(rng, n, c)) < kTol);
    CHECK(max_grad_error(
              {random_mat(rng, n, c), random_mat(rng, 1, c),
               random_mat(rng, 1, c)},
              [](ad::Tape<double>&, std::vector<Var<double>>& v) {
                return ad::layer_norm_rows(v[0], v[1], v[2]);
              },
              random_mat(rng, n, c)) < 1e-7);
    std::vector<int> labels;
    for (Eigen::Index i = 0; i < n; ++i)
      labels.push_back(int(rng.uniform_int(std::uint64_t(c))));
    CHECK(max_grad_error(
              {random_mat(rng, n, c, -3.0, 3.0)},
              [labels](ad::Tape<double>&, std::vector<Var<double>>& v) {
                return ad::softmax_xent_rows(v[0], labels);
              },
              random_mat(rng, n, 1)) < kTol);
  }
}

TEST_CASE("fused cross-entropy equals explicit softmax probability") {
  Rng rng(106);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 1 + Eigen::Index(rng.uniform_int(5));
    const Eigen::Index c = 2 + Eigen::Index(rng.uniform_int(10));
    MatX<double> logits = random_mat(rng, n, c, -5.0, 5.0);
    std::vector<int> labels;
    for (Eigen::Index i = 0; i < n; ++i)
      labels.push_back(int(rng.uniform_int(std::uint64_t(c))));

    ad::Tape<double> tape;
    auto lv = ad::constant(tape, logits);
    auto ce = ad::softmax_xent_rows(lv, labels);
    auto probs = ad::softmax_rows(lv);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double direct =
          -std::log(probs.value()(i, labels[std::size_t(i)]));
      CHECK(ce.value()(i, 0) == doctest::Approx(direct).epsilon(1e-12));
    }
  }
}

TEST_CASE("gradient accumulates across repeated use of one leaf") {
  Rng rng(107);
  const MatX<double> x = random_mat(rng, 3, 3);
  const MatX<double> w = random_mat(rng, 3, 3);
  // f(x) = sum(x * x) uses the leaf twice; gradient must be 2x, not x.
  CHECK(max_grad_error({x},
                       [](ad::Tape<double>&, std::vector<Var<double>>& v) {
                         return ad::cmul(v[0], v[0]);
                       },
                       w) < kTol);
  // Two independent branches from one leaf.
  CHECK(max_grad_error({x},
                       [](ad::Tape<double>&, std::vector<Var<double>>& v) {
                         return ad::add(ad::scale(v[0], 2.0),
                                        ad::cmul(v[0], v[0]));
                       },
                       w) < kTol);
}

TEST_CASE("backward requires a scalar loss node") {
  ad::Tape<double> tape;
  auto v = ad::param(tape, MatX<double>(MatX<double>::Ones(2, 2)));
  CHECK_THROWS_AS(tape.backward(v.id), ShapeMismatch);
}

TEST_CASE("shape violations are rejected") {
  ad::Tape<double> tape;
  auto a = ad::param(tape, MatX<double>(MatX<double>::Ones(2, 3)));
  auto b = ad::param(tape, MatX<double>(MatX<double>::Ones(3, 2)));
  CHECK_THROWS_AS(ad::add(a, b), ShapeMismatch);
  CHECK_THROWS_AS(ad::cmul(a, b), ShapeMismatch);
  CHECK_THROWS_AS(ad::matmul(a, a), ShapeMismatch);
  CHECK_THROWS_AS(ad::gather_rows(a, {0, 5}), ShapeMismatch);
  CHECK_THROWS_AS(ad::group_sum_rows(a, 4), ShapeMismatch);
  CHECK_THROWS_AS(ad::fold_rows(a, 2), ShapeMismatch);
  CHECK_THROWS_AS(ad::softmax_xent_rows(a, {0}), ShapeMismatch);
  CHECK_THROWS_AS(ad::softmax_xent_rows(a, {0, 3}), ShapeMismatch);
}
