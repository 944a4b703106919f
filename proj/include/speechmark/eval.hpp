#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "speechmark/svm.hpp"

namespace speechmark::eval {

struct FoldPlan {
  int k = 0;
  std::vector<int> assignments;  // fold index per sample, values in [0, k)
  std::int64_t seed = 0;
};

/// Per class, shuffled by a seeded deterministic generator then dealt
/// round-robin; the dealing cursor continues across classes so overall fold
/// sizes differ by at most one. Errors when k < 2, k > n, or a class has
/// fewer than k members.
FoldPlan stratified_folds(const std::vector<int>& labels, int k, std::int64_t seed);

/// Checks the documented FoldPlan invariants; throws ValidationError.
void validate_fold_plan(const FoldPlan& plan, const std::vector<int>& labels);

double accuracy(const std::vector<int>& pred, const std::vector<int>& truth);

/// TP / (TP + FP); empty when there are no positive predictions.
std::optional<double> precision(const std::vector<int>& pred,
                                const std::vector<int>& truth);

double recall(const std::vector<int>& pred, const std::vector<int>& truth);

/// Concordance form of the area under the ROC curve:
/// (#concordant pairs + tied pairs / 2) / (#pos * #neg).
double roc_auc(const std::vector<double>& scores, const std::vector<int>& truth);

/// Sample standard deviation across folds divided by sqrt(#folds).
double standard_error(const std::vector<double>& fold_values);

struct FoldMetrics {
  int fold_index = 0;
  int test_size = 0;
  double accuracy = 0.0;
  std::optional<double> precision;  // empty when undefined for this fold
  double recall = 0.0;
  double auc = 0.0;
};

struct MetricSummary {
  std::optional<double> mean;  // over folds where the metric is defined
  std::optional<double> se;    // absent when fewer than 2 defined folds
  int defined_folds = 0;
};

struct CvResult {
  svm::Hyperparams hyperparams;
  std::vector<FoldMetrics> per_fold;
  MetricSummary accuracy, precision, recall, auc;
};

/// Samples with ids, feature vectors, and +1/-1 labels (+1 = PD).
struct Dataset {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> features;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
};

struct EvalOptions {
  double train_tol = 1e-3;
  std::size_t max_passes = 0;  // solver default
  bool precision_undefined_as_zero = false;
  int workers = 1;
  std::function<void(const std::string&)> warn;  // default: stderr
};

/// Trains on k-1 folds and scores the held-out fold, for every fold.
/// Training failures are rethrown annotated with the fold index.
CvResult run_cv(const Dataset& data, const svm::Hyperparams& hp,
                const FoldPlan& plan, const EvalOptions& opts = {});

struct GridSpec {
  std::vector<svm::KernelKind> kernels;
  std::vector<double> c_values;
  std::vector<double> gamma_values;
  int poly_degree = 3;
  double coef0 = 0.0;

  /// rbf/poly/sigmoid x C in 10^-5..10^5 x gamma in 10^-5..10^5 (363 points).
  static GridSpec standard();
  std::size_t point_count() const;
  svm::Hyperparams point(std::size_t index) const;  // canonical enumeration
};

struct GridPoint {
  svm::Hyperparams hyperparams;
  std::optional<CvResult> result;  // empty when training failed
  std::string error;               // failure reason when empty result
};

struct GridSearchReport {
  GridSpec grid;
  std::vector<GridPoint> points;  // canonical enumeration order
  int best_index = -1;            // -1 when every point failed

  const CvResult& best() const;
};

/// Evaluates run_cv at every grid point with one shared FoldPlan. The best
/// point maximizes mean accuracy; ties break by higher mean AUC, lower C,
/// lower gamma, then kernel order rbf < poly < sigmoid. Failed points are
/// recorded and excluded from the argmax.
GridSearchReport grid_search(const Dataset& data, const FoldPlan& plan,
                             const GridSpec& grid = GridSpec::standard(),
                             const EvalOptions& opts = {});

struct NestedFoldOutcome {
  int fold_index = 0;
  svm::Hyperparams chosen;
  FoldMetrics metrics;
};

struct NestedCvReport {
  std::vector<NestedFoldOutcome> folds;
  MetricSummary accuracy, precision, recall, auc;
  svm::Hyperparams modal_hyperparams;  // most frequently selected
};

/// Outer folds from `plan`; each outer fold runs a full inner grid search on
/// its training part, then scores the winner on the held-out fold.
NestedCvReport nested_cv(const Dataset& data, const FoldPlan& plan,
                         const GridSpec& grid = GridSpec::standard(),
                         const EvalOptions& opts = {});

namespace detail {

/// True when `a` beats `b` under the documented tie-break chain.
bool better_grid_point(const CvResult& a, const CvResult& b);

/// Summaries from per-fold values; `defined` marks folds that count.
MetricSummary summarize(const std::vector<double>& values);

}  // namespace detail

}  // namespace speechmark::eval
