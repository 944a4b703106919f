#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "oracles.hpp"
#include "speechmark/errors.hpp"
#include "speechmark/rng.hpp"
#include "speechmark/svm.hpp"

using namespace speechmark;

namespace {

std::vector<double> kernel_matrix(const svm::KernelSpec& spec,
                                  const std::vector<std::vector<double>>& pts) {
  const std::size_t n = pts.size();
  std::vector<double> k(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      k[i * n + j] = svm::kernel_eval(spec, pts[i], pts[j]);
  return k;
}

svm::TrainOptions tight() {
  svm::TrainOptions opts;
  opts.tol = 1e-8;
  return opts;
}

}  // namespace

TEST_CASE("kernel closed forms") {
  svm::KernelSpec rbf{svm::KernelKind::rbf, 1.0, 3, 0.0};
  const std::vector<double> x{0.3, -0.7}, same{0.3, -0.7};
  CHECK(svm::kernel_eval(rbf, x, same) == doctest::Approx(1.0));

  rbf.gamma = 1.0;
  CHECK(svm::kernel_eval(rbf, std::vector<double>{0.0}, std::vector<double>{1.0}) ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-12));

  svm::KernelSpec sig{svm::KernelKind::sigmoid, 2.5, 3, 0.0};
  CHECK(svm::kernel_eval(sig, std::vector<double>{1.0, 0.0}, std::vector<double>{0.0, 1.0}) ==
        doctest::Approx(0.0));

  svm::KernelSpec poly{svm::KernelKind::poly, 1.0, 3, 0.0};
  CHECK(svm::kernel_eval(poly, std::vector<double>{1.0, 1.0}, std::vector<double>{1.0, 1.0}) ==
        doctest::Approx(8.0));

  CHECK_THROWS_AS(svm::kernel_eval(rbf, std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}),
                  ValidationError);
  CHECK_THROWS_AS(svm::kernel_eval(rbf, std::vector<double>{std::nan("")},
                                   std::vector<double>{1.0}),
                  ValidationError);
  svm::KernelSpec bad = rbf;
  bad.gamma = 0.0;
  CHECK_THROWS_AS(svm::kernel_eval(bad, x, same), ValidationError);
}

TEST_CASE("two symmetric points give a symmetric solution") {
  const std::vector<std::vector<double>> pts{{-1.0}, {1.0}};
  const std::vector<int> labels{-1, 1};
  svm::Hyperparams hp;
  hp.kernel = {svm::KernelKind::rbf, 1.0, 3, 0.0};
  hp.c = 10.0;
  const auto model = svm::train_svm(pts, labels, hp, tight());

  REQUIRE(model.support_vectors.size() == 2);
  CHECK(std::fabs(model.dual_coefficients[0]) ==
        doctest::Approx(std::fabs(model.dual_coefficients[1])).epsilon(1e-9));
  CHECK(model.bias == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(svm::decision_value(model, std::vector<double>{0.0}) ==
        doctest::Approx(0.0).epsilon(1e-6));
  CHECK(svm::predict(model, pts[0]) == -1);
  CHECK(svm::predict(model, pts[1]) == 1);

  // closed form: alpha* = 1 / (K11 - K12), dual objective = alpha*
  const double astar = 1.0 / (1.0 - std::exp(-4.0));
  CHECK(model.dual_coefficients[1] == doctest::Approx(astar).epsilon(1e-6));

  // brute-force maximization over the symmetric line alpha1 == alpha2
  double best = 0.0;
  for (double a = 0.0; a <= 10.0; a += 1e-4) {
    const double w = 2.0 * a - a * a * (1.0 - std::exp(-4.0));
    best = std::max(best, w);
  }
  const auto k = kernel_matrix(hp.kernel, pts);
  std::vector<double> alpha{std::fabs(model.dual_coefficients[0]),
                            model.dual_coefficients[1]};
  CHECK(svm::detail::dual_objective(k, 2, labels, alpha) ==
        doctest::Approx(best).epsilon(1e-6));
}

TEST_CASE("dual objective matches the dense QP oracle on small instances") {
  CounterRng rng(derive_key(101, "svm-oracle"));
  const std::vector<svm::KernelKind> kinds{svm::KernelKind::rbf, svm::KernelKind::poly,
                                           svm::KernelKind::sigmoid};
  int checked = 0;
  for (int rep = 0; rep < 12; ++rep) {
    const auto inst = oracles::random_instance(rng, 4, 2);
    for (auto kind : kinds) {
      for (double c : {0.1, 1.0, 10.0}) {
        svm::Hyperparams hp;
        hp.kernel = {kind, 0.5, 3, 0.0};
        hp.c = c;
        const auto k = kernel_matrix(hp.kernel, inst.points);
        const auto sol = svm::detail::solve_dual(k, 4, inst.labels, c, 1e-8, 0, 0);
        const auto oracle = oracles::qp_oracle(k, inst.labels, c);
        CHECK(sol.objective == doctest::Approx(oracle.objective).epsilon(1e-6));
        ++checked;
      }
    }
  }
  CHECK(checked == 12 * 3 * 3);
}

TEST_CASE("training rejects degenerate input") {
  svm::Hyperparams hp;
  hp.kernel = {svm::KernelKind::rbf, 1.0, 3, 0.0};
  hp.c = 1.0;
  CHECK_THROWS_WITH_AS(
      svm::train_svm({{0.0}, {1.0}}, {1, 1}, hp),
      doctest::Contains("single class"), ValidationError);
  CHECK_THROWS_AS(svm::train_svm({{0.0}}, {1}, hp), ValidationError);
  CHECK_THROWS_AS(svm::train_svm({{0.0}, {1.0, 2.0}}, {1, -1}, hp), ValidationError);
  CHECK_THROWS_AS(svm::train_svm({{0.0}, {1.0}}, {1, 2}, hp), ValidationError);
  svm::Hyperparams bad = hp;
  bad.c = 0.0;
  CHECK_THROWS_AS(svm::train_svm({{0.0}, {1.0}}, {1, -1}, bad), ValidationError);
}

TEST_CASE("KKT conditions hold for every training point") {
  CounterRng rng(derive_key(7, "kkt"));
  for (int rep = 0; rep < 8; ++rep) {
    const std::size_t n = 6 + rng.next_below(6);
    const auto inst = oracles::random_instance(rng, n, 3);
    svm::Hyperparams hp;
    hp.kernel = {rep % 2 ? svm::KernelKind::rbf : svm::KernelKind::poly,
                 0.7, 3, 0.0};
    hp.c = (rep % 3 == 0) ? 0.5 : 20.0;
    const double tol = 1e-6;
    svm::TrainOptions opts;
    opts.tol = tol;
    const auto model = svm::train_svm(inst.points, inst.labels, hp, opts);

    // dual feasibility from the stored coefficients
    double coef_sum = 0.0;
    for (double a : model.dual_coefficients) {
      CHECK(std::fabs(a) <= hp.c + 1e-9);
      coef_sum += a;
    }
    CHECK(std::fabs(coef_sum) <= 1e-6 * hp.c * static_cast<double>(n));

    // pointwise KKT at tolerance: alpha=0 -> y f >= 1-tol; alpha=C -> <= 1+tol;
    // free -> within tol of 1. Reconstruct alpha by matching support vectors.
    for (std::size_t i = 0; i < n; ++i) {
      const double yf = static_cast<double>(inst.labels[i]) *
                        svm::decision_value(model, inst.points[i]);
      double alpha = 0.0;
      for (std::size_t s = 0; s < model.support_vectors.size(); ++s)
        if (model.support_vectors[s] == inst.points[i])
          alpha = std::fabs(model.dual_coefficients[s]);
      if (alpha <= 1e-8)
        CHECK(yf >= 1.0 - tol - 1e-7);
      else if (alpha >= hp.c - 1e-8 * hp.c)
        CHECK(yf <= 1.0 + tol + 1e-7);
      else
        CHECK(std::fabs(yf - 1.0) <= tol + 1e-7);
    }
  }
}

TEST_CASE("separable instances with large C classify their training points") {
  CounterRng rng(derive_key(13, "sep"));
  for (int rep = 0; rep < 5; ++rep) {
    std::vector<std::vector<double>> pts;
    std::vector<int> labels;
    for (int i = 0; i < 10; ++i) {
      const bool pos = i % 2 == 0;
      pts.push_back({(pos ? 2.0 : -2.0) + 0.5 * rng.next_symmetric(),
                     0.5 * rng.next_symmetric()});
      labels.push_back(pos ? 1 : -1);
    }
    svm::Hyperparams hp;
    hp.kernel = {svm::KernelKind::rbf, 0.5, 3, 0.0};
    hp.c = 1000.0;
    const auto model = svm::train_svm(pts, labels, hp, tight());
    for (std::size_t i = 0; i < pts.size(); ++i)
      CHECK(svm::predict(model, pts[i]) == labels[i]);
  }
}

TEST_CASE("permutation of the training set preserves the decision function") {
  CounterRng rng(derive_key(29, "perm"));
  const auto inst = oracles::random_instance(rng, 12, 3);
  svm::Hyperparams hp;
  hp.kernel = {svm::KernelKind::rbf, 0.8, 3, 0.0};
  hp.c = 5.0;
  svm::TrainOptions opts;
  opts.tol = 1e-9;
  const auto base = svm::train_svm(inst.points, inst.labels, hp, opts);

  std::vector<std::size_t> order(inst.points.size());
  std::iota(order.begin(), order.end(), 0);
  deterministic_shuffle(order, rng);
  std::vector<std::vector<double>> pts2;
  std::vector<int> labels2;
  for (auto idx : order) {
    pts2.push_back(inst.points[idx]);
    labels2.push_back(inst.labels[idx]);
  }
  const auto permuted = svm::train_svm(pts2, labels2, hp, opts);

  for (int probe = 0; probe < 100; ++probe) {
    std::vector<double> x{2.0 * rng.next_symmetric(), 2.0 * rng.next_symmetric(),
                          2.0 * rng.next_symmetric()};
    CHECK(std::fabs(svm::decision_value(base, x) - svm::decision_value(permuted, x)) <=
          1e-6);
  }
}

TEST_CASE("analytic dual gradient matches central finite differences") {
  CounterRng rng(derive_key(31, "grad"));
  const auto inst = oracles::random_instance(rng, 6, 2);
  svm::KernelSpec spec{svm::KernelKind::rbf, 1.3, 3, 0.0};
  const auto k = kernel_matrix(spec, inst.points);
  const double c = 2.0;

  // random feasible interior point
  std::vector<double> alpha(6);
  for (auto& a : alpha) a = c * (0.2 + 0.6 * rng.next_unit());
  alpha = oracles::project_feasible(std::move(alpha), inst.labels, c);

  const double h = 1e-6;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    double qa = 0.0;
    for (std::size_t j = 0; j < alpha.size(); ++j)
      qa += alpha[j] * static_cast<double>(inst.labels[j]) * k[i * alpha.size() + j];
    const double analytic = 1.0 - static_cast<double>(inst.labels[i]) * qa;

    auto plus = alpha, minus = alpha;
    plus[i] += h;
    minus[i] -= h;
    const double fd = (oracles::dual_objective_dense(k, inst.labels, plus) -
                       oracles::dual_objective_dense(k, inst.labels, minus)) /
                      (2.0 * h);
    CHECK(analytic == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("rbf kernel matrices on distinct points are positive definite") {
  CounterRng rng(derive_key(37, "psd"));
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t n = 3 + rng.next_below(6);
    const auto inst = oracles::random_instance(rng, n, 3);
    svm::KernelSpec spec{svm::KernelKind::rbf, 0.4 + rng.next_unit(), 3, 0.0};
    const auto k = kernel_matrix(spec, inst.points);
    CHECK(oracles::smallest_eigenvalue(k, n) > 0.0);
  }
}

TEST_CASE("predict sign convention") {
  svm::TrainedSvm model;
  model.kernel = {svm::KernelKind::sigmoid, 1.0, 3, 0.0};
  model.c = 1.0;
  model.support_vectors = {{1.0, 0.0}};
  model.dual_coefficients = {0.5};

  SUBCASE("positive decision value") {
    model.bias = 2.3 - 0.5 * std::tanh(0.0);
    CHECK(svm::predict(model, std::vector<double>{0.0, 1.0}) == 1);
  }
  SUBCASE("negative decision value") {
    model.bias = -0.0001;
    // orthogonal probe with coef0 = 0 makes every kernel term vanish
    CHECK(svm::decision_value(model, std::vector<double>{0.0, 1.0}) ==
          doctest::Approx(-0.0001));
    CHECK(svm::predict(model, std::vector<double>{0.0, 1.0}) == -1);
  }
  SUBCASE("exact zero breaks toward +1") {
    model.bias = 0.0;
    CHECK(svm::decision_value(model, std::vector<double>{0.0, 1.0}) == 0.0);
    CHECK(svm::predict(model, std::vector<double>{0.0, 1.0}) == 1);
  }
}

TEST_CASE("model serialization round trips bit-exactly") {
  CounterRng rng(derive_key(41, "serde"));
  const auto inst = oracles::random_instance(rng, 8, 3);
  svm::Hyperparams hp;
  hp.kernel = {svm::KernelKind::poly, 0.37, 3, 0.25};
  hp.c = 3.7;
  const auto model = svm::train_svm(inst.points, inst.labels, hp, tight());
  const auto blob = svm::serialize_model(model);
  const auto back = svm::deserialize_model(blob);

  CHECK(back.bias == model.bias);
  CHECK(back.c == model.c);
  CHECK(back.kernel.gamma == model.kernel.gamma);
  CHECK(back.kernel.coef0 == model.kernel.coef0);
  REQUIRE(back.dual_coefficients.size() == model.dual_coefficients.size());
  for (std::size_t i = 0; i < model.dual_coefficients.size(); ++i)
    CHECK(back.dual_coefficients[i] == model.dual_coefficients[i]);
  REQUIRE(back.support_vectors.size() == model.support_vectors.size());
  for (std::size_t i = 0; i < model.support_vectors.size(); ++i)
    for (std::size_t d = 0; d < model.support_vectors[i].size(); ++d)
      CHECK(back.support_vectors[i][d] == model.support_vectors[i][d]);

  CHECK_THROWS_AS(svm::deserialize_model("{oops"), ParseError);
  CHECK_THROWS_AS(svm::deserialize_model("{\"format_version\": 99}"), ParseError);
}

TEST_CASE("exhausted iteration budget raises a non-convergence error") {
  CounterRng rng(derive_key(43, "noconv"));
  const auto inst = oracles::random_instance(rng, 20, 2);
  svm::Hyperparams hp;
  hp.kernel = {svm::KernelKind::rbf, 1.0, 3, 0.0};
  hp.c = 100.0;
  svm::TrainOptions opts;
  opts.tol = 1e-12;
  opts.max_iterations = 3;  // cannot possibly converge
  try {
    svm::train_svm(inst.points, inst.labels, hp, opts);
    FAIL("expected NonConvergenceError");
  } catch (const NonConvergenceError& e) {
    CHECK(e.kkt_violation() > 0.0);
  }
}
