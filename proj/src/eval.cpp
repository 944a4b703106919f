#include "speechmark/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>
#include <tuple>

#include "speechmark/errors.hpp"
#include "speechmark/ranks.hpp"
#include "speechmark/rng.hpp"

namespace speechmark::eval {

namespace {

void default_warn(const std::string& msg) {
  std::fprintf(stderr, "warning: %s\n", msg.c_str());
}

void emit_warning(const EvalOptions& opts, const std::string& msg) {
  if (opts.warn)
    opts.warn(msg);
  else
    default_warn(msg);
}

int kernel_rank(svm::KernelKind k) {
  switch (k) {
    case svm::KernelKind::rbf: return 0;
    case svm::KernelKind::poly: return 1;
    case svm::KernelKind::sigmoid: return 2;
  }
  return 3;
}

struct FoldIndexSets {
  std::vector<std::vector<std::size_t>> train;
  std::vector<std::vector<std::size_t>> test;
};

FoldIndexSets fold_indices(const FoldPlan& plan) {
  FoldIndexSets sets;
  sets.train.resize(static_cast<std::size_t>(plan.k));
  sets.test.resize(static_cast<std::size_t>(plan.k));
  for (std::size_t i = 0; i < plan.assignments.size(); ++i) {
    for (int f = 0; f < plan.k; ++f) {
      if (plan.assignments[i] == f)
        sets.test[static_cast<std::size_t>(f)].push_back(i);
      else
        sets.train[static_cast<std::size_t>(f)].push_back(i);
    }
  }
  return sets;
}

// Dot-product Gram of the dataset; squared distances derive from it so a
// kernel matrix for any hyperparameter point is a cheap transform.
struct Gram {
  std::size_t n = 0;
  std::vector<double> dot;

  double sqdist(std::size_t i, std::size_t j) const {
    return dot[i * n + i] + dot[j * n + j] - 2.0 * dot[i * n + j];
  }
};

Gram build_gram(const std::vector<std::vector<double>>& features) {
  Gram g;
  g.n = features.size();
  g.dot.assign(g.n * g.n, 0.0);
  for (std::size_t i = 0; i < g.n; ++i) {
    for (std::size_t j = i; j < g.n; ++j) {
      double d = 0.0;
      const auto& a = features[i];
      const auto& b = features[j];
      for (std::size_t t = 0; t < a.size(); ++t) d += a[t] * b[t];
      g.dot[i * g.n + j] = d;
      g.dot[j * g.n + i] = d;
    }
  }
  return g;
}

std::vector<double> kernel_matrix_from_gram(const Gram& g, const svm::KernelSpec& spec) {
  std::vector<double> k(g.n * g.n);
  for (std::size_t i = 0; i < g.n; ++i) {
    for (std::size_t j = i; j < g.n; ++j) {
      const double v = svm::kernel_from_products(spec, g.dot[i * g.n + j], g.sqdist(i, j));
      k[i * g.n + j] = v;
      k[j * g.n + i] = v;
    }
  }
  return k;
}

struct CvOutcome {
  CvResult result;
  std::vector<int> undefined_precision_folds;
};

// Cross-validation against a precomputed full kernel matrix.
CvOutcome run_cv_on_kernel(const std::vector<double>& kernel_full, std::size_t n,
                           const std::vector<int>& labels, const svm::Hyperparams& hp,
                           const FoldIndexSets& sets, const EvalOptions& opts) {
  CvOutcome out;
  out.result.hyperparams = hp;
  const int k = static_cast<int>(sets.test.size());

  std::vector<double> acc_vals, prec_vals, rec_vals, auc_vals;
  for (int f = 0; f < k; ++f) {
    const auto& train = sets.train[static_cast<std::size_t>(f)];
    const auto& test = sets.test[static_cast<std::size_t>(f)];
    const std::size_t m = train.size();

    std::vector<int> y_train(m);
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < m; ++i) {
      y_train[i] = labels[train[i]];
      (y_train[i] > 0 ? has_pos : has_neg) = true;
    }
    if (!has_pos || !has_neg)
      throw ValidationError("fold " + std::to_string(f) +
                            ": training set contains a single class");

    std::vector<double> k_train(m * m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        k_train[i * m + j] = kernel_full[train[i] * n + train[j]];

    svm::detail::DualSolution sol;
    try {
      sol = svm::detail::solve_dual(k_train, m, y_train, hp.c, opts.train_tol,
                                    opts.max_passes);
    } catch (const NonConvergenceError& e) {
      throw NonConvergenceError(e.kkt_violation(),
                                "fold " + std::to_string(f) + ": " + e.what());
    }

    std::vector<double> scores(test.size());
    std::vector<int> pred(test.size());
    std::vector<int> truth(test.size());
    for (std::size_t t = 0; t < test.size(); ++t) {
      double s = sol.bias;
      for (std::size_t i = 0; i < m; ++i) {
        if (sol.alpha[i] == 0.0) continue;
        s += sol.alpha[i] * static_cast<double>(y_train[i]) *
             kernel_full[train[i] * n + test[t]];
      }
      scores[t] = s;
      pred[t] = s >= 0.0 ? 1 : -1;
      truth[t] = labels[test[t]];
    }

    FoldMetrics fm;
    fm.fold_index = f;
    fm.test_size = static_cast<int>(test.size());
    fm.accuracy = accuracy(pred, truth);
    fm.recall = recall(pred, truth);
    fm.auc = roc_auc(scores, truth);
    fm.precision = precision(pred, truth);
    if (!fm.precision) {
      if (opts.precision_undefined_as_zero)
        fm.precision = 0.0;
      else
        out.undefined_precision_folds.push_back(f);
    }

    acc_vals.push_back(fm.accuracy);
    rec_vals.push_back(fm.recall);
    auc_vals.push_back(fm.auc);
    if (fm.precision) prec_vals.push_back(*fm.precision);
    out.result.per_fold.push_back(fm);
  }

  out.result.accuracy = detail::summarize(acc_vals);
  out.result.precision = detail::summarize(prec_vals);
  out.result.recall = detail::summarize(rec_vals);
  out.result.auc = detail::summarize(auc_vals);
  return out;
}

std::string fold_list(const std::vector<int>& folds) {
  std::string s;
  for (std::size_t i = 0; i < folds.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(folds[i]);
  }
  return s;
}

std::string hp_label(const svm::Hyperparams& hp) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%s C=%g gamma=%g", svm::to_string(hp.kernel.kind).c_str(),
                hp.c, hp.kernel.gamma);
  return buf;
}

}  // namespace

FoldPlan stratified_folds(const std::vector<int>& labels, int k, std::int64_t seed) {
  const std::size_t n = labels.size();
  if (k < 2) throw ValidationError("stratified_folds: k must be >= 2");
  if (static_cast<std::size_t>(k) > n)
    throw ValidationError("stratified_folds: k exceeds the sample count");

  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] == 1)
      pos.push_back(i);
    else if (labels[i] == -1)
      neg.push_back(i);
    else
      throw ValidationError("stratified_folds: labels must be +1 or -1");
  }
  for (const auto* cls : {&pos, &neg}) {
    if (cls->size() < static_cast<std::size_t>(k))
      throw ValidationError("stratified_folds: class " +
                            std::string(cls == &pos ? "+1" : "-1") + " has " +
                            std::to_string(cls->size()) + " members; need at least k=" +
                            std::to_string(k));
  }

  CounterRng rng_pos(derive_key(static_cast<std::uint64_t>(seed), "folds/+1"));
  CounterRng rng_neg(derive_key(static_cast<std::uint64_t>(seed), "folds/-1"));
  deterministic_shuffle(pos, rng_pos);
  deterministic_shuffle(neg, rng_neg);

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.assignments.assign(n, 0);
  // Continuing the dealing cursor across classes keeps overall fold sizes
  // within one of each other.
  std::size_t cursor = 0;
  for (std::size_t idx : pos) plan.assignments[idx] = static_cast<int>(cursor++ % k);
  for (std::size_t idx : neg) plan.assignments[idx] = static_cast<int>(cursor++ % k);
  return plan;
}

void validate_fold_plan(const FoldPlan& plan, const std::vector<int>& labels) {
  if (plan.k < 2) throw ValidationError("fold plan: k must be >= 2");
  if (plan.assignments.size() != labels.size())
    throw ValidationError("fold plan: assignment count does not match sample count");

  std::vector<int> sizes(static_cast<std::size_t>(plan.k), 0);
  std::vector<int> pos_sizes(static_cast<std::size_t>(plan.k), 0);
  std::vector<int> neg_sizes(static_cast<std::size_t>(plan.k), 0);
  for (std::size_t i = 0; i < plan.assignments.size(); ++i) {
    const int f = plan.assignments[i];
    if (f < 0 || f >= plan.k)
      throw ValidationError("fold plan: assignment out of range");
    ++sizes[static_cast<std::size_t>(f)];
    (labels[i] == 1 ? pos_sizes : neg_sizes)[static_cast<std::size_t>(f)] += 1;
  }
  for (const auto& v : {sizes, pos_sizes, neg_sizes}) {
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    if (*mx - *mn > 1)
      throw ValidationError("fold plan: fold sizes differ by more than one");
  }
  if (*std::min_element(sizes.begin(), sizes.end()) == 0)
    throw ValidationError("fold plan: some fold received no samples");
}

double accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.size() != truth.size())
    throw ValidationError("accuracy: length mismatch");
  if (pred.empty()) throw ValidationError("accuracy: empty input");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred[i] == truth[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(pred.size());
}

std::optional<double> precision(const std::vector<int>& pred,
                                const std::vector<int>& truth) {
  if (pred.size() != truth.size())
    throw ValidationError("precision: length mismatch");
  if (pred.empty()) throw ValidationError("precision: empty input");
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] != 1) continue;
    (truth[i] == 1 ? tp : fp) += 1;
  }
  if (tp + fp == 0) return std::nullopt;
  return static_cast<double>(tp) / static_cast<double>(tp + fp);
}

double recall(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.size() != truth.size())
    throw ValidationError("recall: length mismatch");
  std::size_t tp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (truth[i] != 1) continue;
    (pred[i] == 1 ? tp : fn) += 1;
  }
  if (tp + fn == 0) throw ValidationError("recall: no positives in truth");
  return static_cast<double>(tp) / static_cast<double>(tp + fn);
}

double roc_auc(const std::vector<double>& scores, const std::vector<int>& truth) {
  if (scores.size() != truth.size())
    throw ValidationError("roc_auc: length mismatch");
  std::size_t n_pos = 0, n_neg = 0;
  for (int t : truth) (t == 1 ? n_pos : n_neg) += 1;
  if (n_pos == 0 || n_neg == 0)
    throw ValidationError("roc_auc: both classes must be present");

  const RankInfo info = midranks(scores);
  double r_pos = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    if (truth[i] == 1) r_pos += info.ranks[i];
  const double np = static_cast<double>(n_pos);
  const double u = r_pos - 0.5 * np * (np + 1.0);
  return u / (np * static_cast<double>(n_neg));
}

double standard_error(const std::vector<double>& fold_values) {
  const std::size_t n = fold_values.size();
  if (n < 2) throw ValidationError("standard_error: need at least 2 values");
  double mean = 0.0;
  for (double v : fold_values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : fold_values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  return sd / std::sqrt(static_cast<double>(n));
}

namespace detail {

MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  s.defined_folds = static_cast<int>(values.size());
  if (values.empty()) return s;
  double mean = 0.0;
  for (double v : values) mean += v;
  s.mean = mean / static_cast<double>(values.size());
  if (values.size() >= 2) s.se = standard_error(values);
  return s;
}

bool better_grid_point(const CvResult& a, const CvResult& b) {
  const double acc_a = a.accuracy.mean.value_or(-1.0);
  const double acc_b = b.accuracy.mean.value_or(-1.0);
  if (acc_a != acc_b) return acc_a > acc_b;
  const double auc_a = a.auc.mean.value_or(-1.0);
  const double auc_b = b.auc.mean.value_or(-1.0);
  if (auc_a != auc_b) return auc_a > auc_b;
  if (a.hyperparams.c != b.hyperparams.c) return a.hyperparams.c < b.hyperparams.c;
  if (a.hyperparams.kernel.gamma != b.hyperparams.kernel.gamma)
    return a.hyperparams.kernel.gamma < b.hyperparams.kernel.gamma;
  return kernel_rank(a.hyperparams.kernel.kind) < kernel_rank(b.hyperparams.kernel.kind);
}

}  // namespace detail

CvResult run_cv(const Dataset& data, const svm::Hyperparams& hp,
                const FoldPlan& plan, const EvalOptions& opts) {
  validate_fold_plan(plan, data.labels);
  if (data.features.size() != data.labels.size())
    throw ValidationError("run_cv: features/labels size mismatch");

  const Gram gram = build_gram(data.features);
  const auto kernel_full = kernel_matrix_from_gram(gram, hp.kernel);
  const auto sets = fold_indices(plan);
  auto outcome = run_cv_on_kernel(kernel_full, gram.n, data.labels, hp, sets, opts);
  if (!outcome.undefined_precision_folds.empty())
    emit_warning(opts, "precision undefined (no positive predictions) in fold(s) " +
                           fold_list(outcome.undefined_precision_folds) + " for " +
                           hp_label(hp) + "; excluded from the fold mean");
  return outcome.result;
}

GridSpec GridSpec::standard() {
  GridSpec g;
  g.kernels = {svm::KernelKind::rbf, svm::KernelKind::poly, svm::KernelKind::sigmoid};
  for (int e = -5; e <= 5; ++e) {
    g.c_values.push_back(std::pow(10.0, static_cast<double>(e)));
    g.gamma_values.push_back(std::pow(10.0, static_cast<double>(e)));
  }
  return g;
}

std::size_t GridSpec::point_count() const {
  return kernels.size() * c_values.size() * gamma_values.size();
}

svm::Hyperparams GridSpec::point(std::size_t index) const {
  const std::size_t ng = gamma_values.size();
  const std::size_t nc = c_values.size();
  const std::size_t ki = index / (nc * ng);
  const std::size_t ci = (index / ng) % nc;
  const std::size_t gi = index % ng;
  svm::Hyperparams hp;
  hp.kernel.kind = kernels[ki];
  hp.kernel.gamma = gamma_values[gi];
  hp.kernel.degree = poly_degree;
  hp.kernel.coef0 = coef0;
  hp.c = c_values[ci];
  return hp;
}

const CvResult& GridSearchReport::best() const {
  if (best_index < 0) throw Error("grid search: every grid point failed");
  return *points[static_cast<std::size_t>(best_index)].result;
}

GridSearchReport grid_search(const Dataset& data, const FoldPlan& plan,
                             const GridSpec& grid, const EvalOptions& opts) {
  validate_fold_plan(plan, data.labels);
  if (grid.kernels.empty() || grid.c_values.empty() || grid.gamma_values.empty())
    throw ValidationError("grid_search: empty grid");

  const Gram gram = build_gram(data.features);
  const auto sets = fold_indices(plan);

  GridSearchReport report;
  report.grid = grid;
  report.points.resize(grid.point_count());

  // Grid points sharing (kernel, gamma) share one kernel matrix; each group
  // covers all C values so the transform happens once per group.
  const std::size_t nc = grid.c_values.size();
  const std::size_t ng = grid.gamma_values.size();
  const std::size_t n_groups = grid.kernels.size() * ng;
  std::vector<std::vector<int>> undef_folds(report.points.size());

  std::atomic<std::size_t> next_group{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto work = [&]() {
    while (!failed.load()) {
      const std::size_t gidx = next_group.fetch_add(1);
      if (gidx >= n_groups) break;
      const std::size_t ki = gidx / ng;
      const std::size_t gi = gidx % ng;
      try {
        svm::KernelSpec spec;
        spec.kind = grid.kernels[ki];
        spec.gamma = grid.gamma_values[gi];
        spec.degree = grid.poly_degree;
        spec.coef0 = grid.coef0;
        const auto kernel_full = kernel_matrix_from_gram(gram, spec);

        for (std::size_t ci = 0; ci < nc; ++ci) {
          const std::size_t index = (ki * nc + ci) * ng + gi;
          svm::Hyperparams hp;
          hp.kernel = spec;
          hp.c = grid.c_values[ci];
          auto& point = report.points[index];
          point.hyperparams = hp;
          try {
            auto outcome =
                run_cv_on_kernel(kernel_full, gram.n, data.labels, hp, sets, opts);
            undef_folds[index] = std::move(outcome.undefined_precision_folds);
            point.result = std::move(outcome.result);
          } catch (const NonConvergenceError& e) {
            point.error = e.what();
          }
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
      }
    }
  };

  const int workers = std::max(1, std::min<int>(opts.workers, static_cast<int>(n_groups)));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  std::size_t points_with_undefined = 0;
  for (std::size_t i = 0; i < report.points.size(); ++i)
    if (!undef_folds[i].empty()) ++points_with_undefined;
  if (points_with_undefined > 0)
    emit_warning(opts, "precision undefined (no positive predictions) in at least one fold "
                       "for " + std::to_string(points_with_undefined) + " of " +
                       std::to_string(report.points.size()) +
                       " grid points; those folds are excluded from precision means");

  for (std::size_t i = 0; i < report.points.size(); ++i) {
    if (!report.points[i].result) continue;
    if (report.best_index < 0 ||
        detail::better_grid_point(*report.points[i].result,
                                  *report.points[static_cast<std::size_t>(report.best_index)].result))
      report.best_index = static_cast<int>(i);
  }
  return report;
}

NestedCvReport nested_cv(const Dataset& data, const FoldPlan& plan,
                         const GridSpec& grid, const EvalOptions& opts) {
  validate_fold_plan(plan, data.labels);
  const auto sets = fold_indices(plan);

  NestedCvReport report;
  std::vector<double> acc_vals, prec_vals, rec_vals, auc_vals;

  for (int f = 0; f < plan.k; ++f) {
    const auto& train = sets.train[static_cast<std::size_t>(f)];
    const auto& test = sets.test[static_cast<std::size_t>(f)];

    Dataset inner;
    for (std::size_t idx : train) {
      inner.ids.push_back(data.ids.empty() ? std::to_string(idx) : data.ids[idx]);
      inner.features.push_back(data.features[idx]);
      inner.labels.push_back(data.labels[idx]);
    }
    const auto inner_seed =
        static_cast<std::int64_t>(derive_key(static_cast<std::uint64_t>(plan.seed),
                                             "nested/" + std::to_string(f)));
    const FoldPlan inner_plan = stratified_folds(inner.labels, plan.k, inner_seed);
    const GridSearchReport inner_report = grid_search(inner, inner_plan, grid, opts);
    if (inner_report.best_index < 0)
      throw Error("nested_cv: every grid point failed in outer fold " + std::to_string(f));
    const svm::Hyperparams hp = inner_report.best().hyperparams;

    svm::TrainOptions topts;
    topts.tol = opts.train_tol;
    topts.max_passes = opts.max_passes;
    const auto model = svm::train_svm(inner.features, inner.labels, hp, topts);

    std::vector<double> scores(test.size());
    std::vector<int> pred(test.size()), truth(test.size());
    for (std::size_t t = 0; t < test.size(); ++t) {
      scores[t] = svm::decision_value(model, data.features[test[t]]);
      pred[t] = scores[t] >= 0.0 ? 1 : -1;
      truth[t] = data.labels[test[t]];
    }

    NestedFoldOutcome outcome;
    outcome.fold_index = f;
    outcome.chosen = hp;
    outcome.metrics.fold_index = f;
    outcome.metrics.test_size = static_cast<int>(test.size());
    outcome.metrics.accuracy = accuracy(pred, truth);
    outcome.metrics.recall = recall(pred, truth);
    outcome.metrics.auc = roc_auc(scores, truth);
    outcome.metrics.precision = precision(pred, truth);
    if (!outcome.metrics.precision && opts.precision_undefined_as_zero)
      outcome.metrics.precision = 0.0;

    acc_vals.push_back(outcome.metrics.accuracy);
    rec_vals.push_back(outcome.metrics.recall);
    auc_vals.push_back(outcome.metrics.auc);
    if (outcome.metrics.precision) prec_vals.push_back(*outcome.metrics.precision);
    report.folds.push_back(std::move(outcome));
  }

  report.accuracy = detail::summarize(acc_vals);
  report.precision = detail::summarize(prec_vals);
  report.recall = detail::summarize(rec_vals);
  report.auc = detail::summarize(auc_vals);

  // Modal hyperparameters: most frequent selection, canonical order on ties.
  std::map<std::tuple<int, double, double, int, double>, std::pair<int, svm::Hyperparams>> votes;
  for (const auto& fold : report.folds) {
    const auto& hp = fold.chosen;
    auto key = std::make_tuple(kernel_rank(hp.kernel.kind), hp.c, hp.kernel.gamma,
                               hp.kernel.degree, hp.kernel.coef0);
    auto it = votes.find(key);
    if (it == votes.end())
      votes.emplace(key, std::make_pair(1, hp));
    else
      it->second.first += 1;
  }
  int best_votes = 0;
  for (const auto& [key, entry] : votes) {
    if (entry.first > best_votes) {  // map order already canonical for ties
      best_votes = entry.first;
      report.modal_hyperparams = entry.second;
    }
  }
  return report;
}

}  // namespace speechmark::eval
