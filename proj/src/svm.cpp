#include "speechmark/svm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "speechmark/errors.hpp"

namespace speechmark::svm {

namespace {

double ipow(double base, int exp) {
  double r = 1.0;
  double b = base;
  for (int e = exp; e > 0; e >>= 1) {
    if (e & 1) r *= b;
    b *= b;
  }
  return r;
}

void validate_kernel(const KernelSpec& k) {
  if (!(k.gamma > 0.0)) throw ValidationError("kernel gamma must be > 0");
  if (k.degree < 1) throw ValidationError("poly degree must be >= 1");
  if (!std::isfinite(k.coef0)) throw ValidationError("coef0 must be finite");
}

}  // namespace

std::string to_string(KernelKind k) {
  switch (k) {
    case KernelKind::rbf: return "rbf";
    case KernelKind::poly: return "poly";
    case KernelKind::sigmoid: return "sigmoid";
  }
  return "rbf";
}

KernelKind kernel_kind_from_string(const std::string& s) {
  if (s == "rbf") return KernelKind::rbf;
  if (s == "poly") return KernelKind::poly;
  if (s == "sigmoid" || s == "sig") return KernelKind::sigmoid;
  throw ParseError("unknown kernel '" + s + "' (expected rbf, poly, or sigmoid)");
}

double kernel_from_products(const KernelSpec& spec, double dot, double sqdist) {
  switch (spec.kind) {
    case KernelKind::rbf: return std::exp(-spec.gamma * sqdist);
    case KernelKind::poly: return ipow(spec.gamma * dot + spec.coef0, spec.degree);
    case KernelKind::sigmoid: return std::tanh(spec.gamma * dot + spec.coef0);
  }
  return 0.0;
}

double kernel_eval(const KernelSpec& spec, std::span<const double> x,
                   std::span<const double> y) {
  validate_kernel(spec);
  if (x.size() != y.size())
    throw ValidationError("kernel_eval: dimension mismatch (" + std::to_string(x.size()) +
                          " vs " + std::to_string(y.size()) + ")");
  double dot = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dot += x[i] * y[i];
    const double d = x[i] - y[i];
    sq += d * d;
  }
  if (!std::isfinite(dot) || !std::isfinite(sq))
    throw ValidationError("kernel_eval: non-finite input");
  return kernel_from_products(spec, dot, sq);
}

namespace detail {

double dual_objective(const std::vector<double>& kernel_matrix, std::size_t n,
                      const std::vector<int>& labels,
                      const std::vector<double>& alpha) {
  double obj = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double fi = 0.0;
    const double* row = kernel_matrix.data() + i * n;
    for (std::size_t j = 0; j < n; ++j)
      fi += alpha[j] * static_cast<double>(labels[j]) * row[j];
    obj += alpha[i] - 0.5 * alpha[i] * static_cast<double>(labels[i]) * fi;
  }
  return obj;
}

DualSolution solve_dual(const std::vector<double>& kernel_matrix, std::size_t n,
                        const std::vector<int>& labels, double c, double tol,
                        std::size_t max_passes, std::size_t max_iterations) {
  if (max_passes == 0) max_passes = 10 * n;
  if (max_iterations == 0)
    max_iterations = std::max<std::size_t>(50000, 40 * n * n);

  std::vector<double> alpha(n, 0.0);
  std::vector<double> f(n, 0.0);  // f_k = sum_j alpha_j y_j K_jk (no bias)
  const double inf = std::numeric_limits<double>::infinity();

  double best_gap = inf;
  double gap = inf;
  std::size_t stall = 0;
  std::size_t iter = 0;

  while (true) {
    // Maximal violating pair over score_k = y_k - f_k.
    double m_up = -inf, m_low = inf;
    std::size_t i = n, j = n;
    for (std::size_t k = 0; k < n; ++k) {
      const double yk = static_cast<double>(labels[k]);
      const double score = yk - f[k];
      const bool can_up = (labels[k] > 0) ? (alpha[k] < c) : (alpha[k] > 0.0);
      const bool can_low = (labels[k] > 0) ? (alpha[k] > 0.0) : (alpha[k] < c);
      if (can_up && score > m_up) {
        m_up = score;
        i = k;
      }
      if (can_low && score < m_low) {
        m_low = score;
        j = k;
      }
    }
    gap = (i < n && j < n) ? m_up - m_low : 0.0;
    best_gap = std::min(best_gap, gap);
    if (gap <= tol) break;
    if (iter >= max_iterations)
      throw NonConvergenceError(best_gap,
                                "SVM training did not converge within " +
                                    std::to_string(max_iterations) +
                                    " iterations (best KKT violation " +
                                    std::to_string(best_gap) + ")");

    const double yi = static_cast<double>(labels[i]);
    const double yj = static_cast<double>(labels[j]);
    const double ai = alpha[i], aj = alpha[j];
    const bool opposite = labels[i] != labels[j];
    const double pair_diff = ai - aj;  // invariant when labels differ
    const double pair_sum = ai + aj;   // invariant when labels agree

    double lo, hi;  // feasible range for alpha[j]
    if (opposite) {
      lo = std::max(0.0, -pair_diff);
      hi = std::min(c, c - pair_diff);
    } else {
      lo = std::max(0.0, pair_sum - c);
      hi = std::min(c, pair_sum);
    }

    double ai_new = ai, aj_new = aj;
    // Landing on a segment end assigns the binding variable its bound
    // exactly and derives the partner from the pair invariant; leaving a
    // one-ulp residue next to a bound would let the same pair be selected
    // forever with a zero-size step.
    auto land_lower = [&]() {
      if (opposite) {
        if (pair_diff <= 0.0) {
          ai_new = 0.0;
          aj_new = -pair_diff;
        } else {
          aj_new = 0.0;
          ai_new = pair_diff;
        }
      } else {
        if (pair_sum >= c) {
          ai_new = c;
          aj_new = pair_sum - c;
        } else {
          aj_new = 0.0;
          ai_new = pair_sum;
        }
      }
    };
    auto land_upper = [&]() {
      if (opposite) {
        if (pair_diff >= 0.0) {
          ai_new = c;
          aj_new = c - pair_diff;
        } else {
          aj_new = c;
          ai_new = c + pair_diff;
        }
      } else {
        if (pair_sum <= c) {
          ai_new = 0.0;
          aj_new = pair_sum;
        } else {
          aj_new = c;
          ai_new = pair_sum - c;
        }
      }
    };
    auto land_interior = [&](double t) {
      aj_new = t;
      ai_new = opposite ? t + pair_diff : pair_sum - t;
      if (ai_new < 0.0) ai_new = 0.0;
      if (ai_new > c) ai_new = c;
    };

    const double kii = kernel_matrix[i * n + i];
    const double kjj = kernel_matrix[j * n + j];
    const double kij = kernel_matrix[i * n + j];
    const double eta = kii + kjj - 2.0 * kij;
    // Objective change along the feasible line: dW(d) = lin*d - eta*d^2/2,
    // where d is the change of alpha[j].
    const double lin = yj * ((f[i] - yi) - (f[j] - yj));

    if (eta > 0.0) {
      const double t = aj + lin / eta;
      if (t <= lo)
        land_lower();
      else if (t >= hi)
        land_upper();
      else
        land_interior(t);
    } else {
      // Indefinite or flat direction: the best point is a segment end.
      const double dl = lo - aj, dh = hi - aj;
      const double wl = lin * dl - 0.5 * eta * dl * dl;
      const double wh = lin * dh - 0.5 * eta * dh * dh;
      if (wh > wl)
        land_upper();
      else
        land_lower();
    }

    if (ai_new == ai && aj_new == aj) {
      ++stall;
      if (stall > max_passes)
        throw NonConvergenceError(
            best_gap, "SVM training stalled after " + std::to_string(stall) +
                          " sweeps without progress (best KKT violation " +
                          std::to_string(best_gap) + ")");
    } else {
      stall = 0;
    }

    const double di_y = (ai_new - ai) * yi;
    const double dj_y = (aj_new - aj) * yj;
    alpha[i] = ai_new;
    alpha[j] = aj_new;
    const double* row_i = kernel_matrix.data() + i * n;
    const double* row_j = kernel_matrix.data() + j * n;
    for (std::size_t k = 0; k < n; ++k) f[k] += di_y * row_i[k] + dj_y * row_j[k];
    ++iter;
  }

  DualSolution sol;
  sol.alpha = std::move(alpha);
  sol.kkt_gap = gap;
  sol.iterations = iter;

  // Bias: mean of y_k - f_k over free vectors, else the midpoint of the
  // interval the bound vectors' KKT conditions leave for it.
  double free_sum = 0.0;
  std::size_t free_count = 0;
  double lower = -inf, upper = inf;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = static_cast<double>(labels[k]) - f[k];
    if (sol.alpha[k] > 0.0 && sol.alpha[k] < c) {
      free_sum += r;
      ++free_count;
    } else if ((sol.alpha[k] == 0.0 && labels[k] > 0) ||
               (sol.alpha[k] == c && labels[k] < 0)) {
      lower = std::max(lower, r);  // b >= r
    } else {
      upper = std::min(upper, r);  // b <= r
    }
  }
  if (free_count > 0) {
    sol.bias = free_sum / static_cast<double>(free_count);
  } else if (lower > -inf && upper < inf) {
    sol.bias = 0.5 * (lower + upper);
  } else if (lower > -inf) {
    sol.bias = lower;
  } else if (upper < inf) {
    sol.bias = upper;
  } else {
    sol.bias = 0.0;
  }

  double obj = 0.0;
  for (std::size_t k = 0; k < n; ++k)
    obj += sol.alpha[k] - 0.5 * sol.alpha[k] * static_cast<double>(labels[k]) * f[k];
  sol.objective = obj;
  return sol;
}

}  // namespace detail

TrainedSvm train_svm(const std::vector<std::vector<double>>& points,
                     const std::vector<int>& labels, const Hyperparams& hp,
                     const TrainOptions& opts) {
  const std::size_t n = points.size();
  if (n < 2) throw ValidationError("train_svm: need at least 2 points");
  if (labels.size() != n)
    throw ValidationError("train_svm: points/labels size mismatch");
  validate_kernel(hp.kernel);
  if (!(hp.c > 0.0)) throw ValidationError("train_svm: C must be > 0");
  if (!(opts.tol > 0.0)) throw ValidationError("train_svm: tol must be > 0");

  bool has_pos = false, has_neg = false;
  const std::size_t dim = points[0].size();
  for (std::size_t k = 0; k < n; ++k) {
    if (labels[k] != 1 && labels[k] != -1)
      throw ValidationError("train_svm: labels must be +1 or -1");
    (labels[k] > 0 ? has_pos : has_neg) = true;
    if (points[k].size() != dim)
      throw ValidationError("train_svm: inconsistent point dimensions");
    for (double v : points[k])
      if (!std::isfinite(v)) throw ValidationError("train_svm: non-finite feature value");
  }
  if (!has_pos || !has_neg)
    throw ValidationError("train_svm: training set contains a single class");

  std::vector<double> kernel_matrix(n * n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a; b < n; ++b) {
      const double v = kernel_eval(hp.kernel, points[a], points[b]);
      kernel_matrix[a * n + b] = v;
      kernel_matrix[b * n + a] = v;
    }
  }

  const auto sol = detail::solve_dual(kernel_matrix, n, labels, hp.c, opts.tol,
                                      opts.max_passes, opts.max_iterations);

  TrainedSvm model;
  model.kernel = hp.kernel;
  model.c = hp.c;
  model.bias = sol.bias;
  for (std::size_t k = 0; k < n; ++k) {
    if (sol.alpha[k] > 1e-8) {
      model.support_vectors.push_back(points[k]);
      model.dual_coefficients.push_back(sol.alpha[k] * static_cast<double>(labels[k]));
    }
  }
  return model;
}

double decision_value(const TrainedSvm& model, std::span<const double> x) {
  double sum = model.bias;
  for (std::size_t i = 0; i < model.support_vectors.size(); ++i)
    sum += model.dual_coefficients[i] * kernel_eval(model.kernel, model.support_vectors[i], x);
  return sum;
}

int predict(const TrainedSvm& model, std::span<const double> x) {
  return decision_value(model, x) >= 0.0 ? 1 : -1;
}

std::string serialize_model(const TrainedSvm& model) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["kernel"] = {{"kind", to_string(model.kernel.kind)},
                 {"gamma", model.kernel.gamma},
                 {"degree", model.kernel.degree},
                 {"coef0", model.kernel.coef0}};
  j["c"] = model.c;
  j["bias"] = model.bias;
  j["support_vectors"] = model.support_vectors;
  j["dual_coefficients"] = model.dual_coefficients;
  return j.dump(2);
}

TrainedSvm deserialize_model(const std::string& blob) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(blob);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model blob: ") + e.what());
  }
  if (!j.contains("format_version") || j["format_version"].get<int>() != 1)
    throw ParseError("model blob: unsupported format version");
  TrainedSvm model;
  try {
    const auto& k = j.at("kernel");
    model.kernel.kind = kernel_kind_from_string(k.at("kind").get<std::string>());
    model.kernel.gamma = k.at("gamma").get<double>();
    model.kernel.degree = k.at("degree").get<int>();
    model.kernel.coef0 = k.at("coef0").get<double>();
    model.c = j.at("c").get<double>();
    model.bias = j.at("bias").get<double>();
    model.support_vectors = j.at("support_vectors").get<std::vector<std::vector<double>>>();
    model.dual_coefficients = j.at("dual_coefficients").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model blob: ") + e.what());
  }
  if (model.support_vectors.size() != model.dual_coefficients.size())
    throw ParseError("model blob: support vector / coefficient count mismatch");
  return model;
}

void save_model(const TrainedSvm& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << serialize_model(model);
  if (!out) throw Error("failed writing model to '" + path.string() + "'");
}

TrainedSvm load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file '" + path.string() + "'");
  std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(blob);
}

}  // namespace speechmark::svm
