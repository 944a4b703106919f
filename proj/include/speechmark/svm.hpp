#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace speechmark::svm {

enum class KernelKind { rbf, poly, sigmoid };

std::string to_string(KernelKind k);
KernelKind kernel_kind_from_string(const std::string& s);  // accepts "sig" too

struct KernelSpec {
  KernelKind kind = KernelKind::rbf;
  double gamma = 1.0;  // > 0
  int degree = 3;      // poly only
  double coef0 = 0.0;  // poly / sigmoid
};

struct Hyperparams {
  KernelSpec kernel;
  double c = 1.0;  // > 0
};

/// Kernel value from the dot product and squared distance of a pair. Single
/// source of truth for the kernel formulas; the evaluation harness feeds it
/// precomputed Gram entries.
double kernel_from_products(const KernelSpec& spec, double dot, double sqdist);

/// rbf: exp(-gamma*||x-y||^2); poly: (gamma*<x,y> + coef0)^degree;
/// sigmoid: tanh(gamma*<x,y> + coef0).
double kernel_eval(const KernelSpec& spec, std::span<const double> x,
                   std::span<const double> y);

struct TrainedSvm {
  std::vector<std::vector<double>> support_vectors;
  std::vector<double> dual_coefficients;  // alpha_i * y_i, |.| <= c
  double bias = 0.0;
  KernelSpec kernel;
  double c = 1.0;
};

struct TrainOptions {
  double tol = 1e-3;              // KKT tolerance (max violating-pair gap)
  std::size_t max_passes = 0;     // stalled sweeps before giving up; 0 -> 10*n
  std::size_t max_iterations = 0; // hard cap on pair updates; 0 -> auto
};

/// Soft-margin dual trained with sequential minimal optimization. Labels are
/// +1/-1 and both classes must be present. Deterministic for a fixed input
/// order. Throws NonConvergenceError carrying the best KKT violation when
/// the iteration budget runs out.
TrainedSvm train_svm(const std::vector<std::vector<double>>& points,
                     const std::vector<int>& labels, const Hyperparams& hp,
                     const TrainOptions& opts = {});

/// sum_i dual_coefficients[i] * K(sv_i, x) + bias
double decision_value(const TrainedSvm& model, std::span<const double> x);

/// Sign of the decision value; an exact 0 maps to +1 (the PD side).
int predict(const TrainedSvm& model, std::span<const double> x);

/// Versioned JSON blob. Doubles survive a round trip bit-exactly.
std::string serialize_model(const TrainedSvm& model);
TrainedSvm deserialize_model(const std::string& blob);
void save_model(const TrainedSvm& model, const std::filesystem::path& path);
TrainedSvm load_model(const std::filesystem::path& path);

namespace detail {

struct DualSolution {
  std::vector<double> alpha;
  double bias = 0.0;
  double objective = 0.0;  // dual objective at alpha
  double kkt_gap = 0.0;    // final violating-pair gap
  std::size_t iterations = 0;
};

/// SMO on a precomputed kernel matrix (row-major n*n). Maximizes
///   sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K_ij
/// over 0 <= a <= C, sum_i a_i y_i = 0, to `tol` measured as the maximal
/// violating-pair gap. Indefinite pair subproblems fall back to evaluating
/// the objective at both ends of the feasible segment.
DualSolution solve_dual(const std::vector<double>& kernel_matrix, std::size_t n,
                        const std::vector<int>& labels, double c, double tol,
                        std::size_t max_passes, std::size_t max_iterations = 0);

double dual_objective(const std::vector<double>& kernel_matrix, std::size_t n,
                      const std::vector<int>& labels,
                      const std::vector<double>& alpha);

}  // namespace detail

}  // namespace speechmark::svm
