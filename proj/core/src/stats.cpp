#include "vbench/stats.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "vbench/protocol.hpp"

namespace vbench::stats {

namespace {

constexpr double kPsiMax = 1e6;
constexpr double kSearchTol = 1e-8;
constexpr int kMaxIterations = 200;

bool row_parsed(const runner::TrialRow& r) {
  return r.api_success && r.parse_success && r.aggressiveness_score.has_value();
}

// Sufficient statistics that make each profile evaluation O(p^2 * groups).
struct ProfileContext {
  int n = 0;
  int p = 0;
  int q = 0;
  Eigen::MatrixXd xtx;
  Eigen::VectorXd xty;
  double yty = 0.0;
  std::vector<double> group_n;          // observations per group
  std::vector<Eigen::VectorXd> group_x;  // column sums of X per group
  std::vector<double> group_y;           // y sums per group
};

struct ProfileEval {
  double loglik = -std::numeric_limits<double>::infinity();
  Eigen::MatrixXd a;
  Eigen::VectorXd beta;
  double sigma_e2 = 0.0;
};

ProfileEval evaluate_psi(const ProfileContext& ctx, double psi) {
  ProfileEval ev;
  ev.a = ctx.xtx;
  Eigen::VectorXd b = ctx.xty;
  double ywy = ctx.yty;
  double logdet = 0.0;
  for (int j = 0; j < ctx.q; ++j) {
    double nj = ctx.group_n[j];
    double cj = psi / (1.0 + psi * nj);
    ev.a.noalias() -= cj * ctx.group_x[j] * ctx.group_x[j].transpose();
    b.noalias() -= cj * ctx.group_x[j] * ctx.group_y[j];
    ywy -= cj * ctx.group_y[j] * ctx.group_y[j];
    logdet += std::log1p(psi * nj);
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(ev.a);
  if (ldlt.info() != Eigen::Success) return ev;
  ev.beta = ldlt.solve(b);
  double quad = ywy - ev.beta.dot(b);
  if (!(quad > 0.0) || !std::isfinite(quad)) {
    // Exact fit: residual variance collapses, likelihood unbounded; treat as
    // a degenerate direction the search must not select.
    return ev;
  }
  ev.sigma_e2 = quad / ctx.n;
  ev.loglik = -0.5 * (ctx.n * std::log(2.0 * M_PI) + ctx.n * std::log(ev.sigma_e2) + logdet +
                      ctx.n);
  return ev;
}

}  // namespace

MixedModelFit fit_random_intercept(const RegressionData& data) {
  const int n = static_cast<int>(data.y.size());
  if (n == 0) throw std::invalid_argument("empty regression data");
  if (data.X.size() != data.y.size() || data.group.size() != data.y.size()) {
    throw std::invalid_argument("regression data sizes disagree");
  }
  const int p = static_cast<int>(data.X.front().size());
  if (p == 0) throw std::invalid_argument("no predictor columns");
  if (static_cast<int>(data.names.size()) != p) {
    throw std::invalid_argument("column name count does not match predictors");
  }

  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd y(n);
  int q = 0;
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(data.X[i].size()) != p) {
      throw std::invalid_argument("ragged predictor rows");
    }
    for (int j = 0; j < p; ++j) X(i, j) = data.X[i][j];
    y(i) = data.y[i];
    if (data.group[i] < 0) throw std::invalid_argument("negative group index");
    q = std::max(q, data.group[i] + 1);
  }

  if (n <= p) {
    throw SingularDesign("design has as many or more columns than observations");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) {
    std::vector<std::string> offending;
    const auto& perm = qr.colsPermutation().indices();
    for (int j = static_cast<int>(qr.rank()); j < p; ++j) {
      offending.push_back(data.names[perm[j]]);
    }
    throw SingularDesign("rank-deficient design matrix", offending);
  }

  ProfileContext ctx;
  ctx.n = n;
  ctx.p = p;
  ctx.q = q;
  ctx.xtx = X.transpose() * X;
  ctx.xty = X.transpose() * y;
  ctx.yty = y.dot(y);
  ctx.group_n.assign(q, 0.0);
  ctx.group_x.assign(q, Eigen::VectorXd::Zero(p));
  ctx.group_y.assign(q, 0.0);
  for (int i = 0; i < n; ++i) {
    int g = data.group[i];
    ctx.group_n[g] += 1.0;
    ctx.group_x[g] += X.row(i).transpose();
    ctx.group_y[g] += y(i);
  }

  auto loglik_at = [&](double psi) { return evaluate_psi(ctx, psi).loglik; };

  // Coarse log-spaced sweep to bracket the optimum before the 1-D search.
  std::vector<double> grid;
  grid.push_back(0.0);
  for (double e = -8.0; e <= 6.0 + 1e-9; e += 0.25) grid.push_back(std::pow(10.0, e));
  size_t best = 0;
  double best_ll = loglik_at(grid[0]);
  for (size_t i = 1; i < grid.size(); ++i) {
    double ll = loglik_at(grid[i]);
    if (ll > best_ll) {
      best_ll = ll;
      best = i;
    }
  }

  double lo = best > 0 ? grid[best - 1] : 0.0;
  double hi = best + 1 < grid.size() ? grid[best + 1] : kPsiMax;
  hi = std::min(hi, kPsiMax);

  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = loglik_at(c), fd = loglik_at(d);
  for (int it = 0; it < kMaxIterations && (b - a) > kSearchTol * (1.0 + b); ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = loglik_at(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = loglik_at(d);
    }
  }
  double psi_hat = (a + b) / 2.0;
  double ll_hat = loglik_at(psi_hat);
  if (best_ll > ll_hat) {
    psi_hat = grid[best];
    ll_hat = best_ll;
  }
  double ll_zero = loglik_at(0.0);
  bool boundary = ll_zero + 1e-10 >= ll_hat;
  if (boundary) {
    psi_hat = 0.0;
    ll_hat = ll_zero;
  }

  ProfileEval ev = evaluate_psi(ctx, psi_hat);
  if (!std::isfinite(ev.loglik)) {
    throw SingularDesign("profile likelihood is degenerate (zero residual variance)");
  }

  Eigen::LDLT<Eigen::MatrixXd> ldlt(ev.a);
  Eigen::MatrixXd a_inv = ldlt.solve(Eigen::MatrixXd::Identity(p, p));

  MixedModelFit fit;
  fit.n_obs = n;
  fit.n_groups = q;
  fit.psi = psi_hat;
  fit.sigma_e2 = ev.sigma_e2;
  fit.sigma_u2 = psi_hat * ev.sigma_e2;
  fit.boundary_flag = boundary;
  fit.log_likelihood = ev.loglik;
  int k = p + 2;
  fit.aic = 2.0 * k - 2.0 * ev.loglik;
  fit.bic = k * std::log(double(n)) - 2.0 * ev.loglik;

  fit.coefficients.reserve(p);
  for (int j = 0; j < p; ++j) {
    Coefficient coef;
    coef.name = data.names[j];
    coef.estimate = ev.beta(j);
    double var = ev.sigma_e2 * a_inv(j, j);
    coef.std_error = var > 0.0 ? std::sqrt(var) : 0.0;
    if (coef.std_error > 0.0) {
      coef.z = coef.estimate / coef.std_error;
      coef.p = std::erfc(std::abs(coef.z) / std::sqrt(2.0));
    } else {
      coef.z = 0.0;
      coef.p = 1.0;
    }
    coef.ci_low = coef.estimate - 1.96 * coef.std_error;
    coef.ci_high = coef.estimate + 1.96 * coef.std_error;
    fit.coefficients.push_back(std::move(coef));
  }
  return fit;
}

namespace {

// Levels present in the rows, in a fixed catalog-derived order, with the
// requested reference level moved first when present.
std::vector<std::string> ordered_levels(const std::vector<std::string>& canonical_order,
                                        const std::vector<std::string>& present_order,
                                        const std::string& reference) {
  std::vector<std::string> levels;
  for (const auto& level : canonical_order) {
    if (std::find(present_order.begin(), present_order.end(), level) != present_order.end()) {
      levels.push_back(level);
    }
  }
  for (const auto& level : present_order) {
    if (std::find(levels.begin(), levels.end(), level) == levels.end()) levels.push_back(level);
  }
  auto ref = std::find(levels.begin(), levels.end(), reference);
  if (ref != levels.end()) std::rotate(levels.begin(), ref, ref + 1);
  return levels;
}

std::vector<std::string> present_values(const std::vector<runner::TrialRow>& rows,
                                        std::string runner::TrialRow::*field) {
  std::vector<std::string> out;
  for (const auto& r : rows) {
    if (!row_parsed(r)) continue;
    const std::string& v = r.*field;
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  }
  return out;
}

}  // namespace

RegressionData build_design(const std::vector<runner::TrialRow>& rows,
                            bool include_interactions) {
  std::vector<const runner::TrialRow*> parsed;
  for (const auto& r : rows) {
    if (row_parsed(r)) parsed.push_back(&r);
  }
  if (parsed.empty()) throw std::invalid_argument("no parsed rows to fit");

  std::vector<std::string> condition_order;
  for (const auto& c : protocol::condition_catalog()) condition_order.push_back(c.code);
  std::vector<std::string> domain_order;
  for (auto d : corpus::kAllDomains) domain_order.push_back(corpus::domain_token(d));

  auto conditions = ordered_levels(condition_order,
                                   present_values(rows, &runner::TrialRow::condition_code),
                                   "AUTONOMY_MINUS");
  auto models = ordered_levels({}, present_values(rows, &runner::TrialRow::model_name),
                               "claude-4.5-sonnet");
  auto domains = ordered_levels(domain_order, present_values(rows, &runner::TrialRow::domain),
                                "cardiology");

  // Single-level factors carry no information beyond the intercept.
  auto dummy_levels = [](const std::vector<std::string>& levels) {
    return levels.size() >= 2 ? std::vector<std::string>(levels.begin() + 1, levels.end())
                              : std::vector<std::string>{};
  };
  auto cond_dummies = dummy_levels(conditions);
  auto model_dummies = dummy_levels(models);
  auto domain_dummies = dummy_levels(domains);

  RegressionData data;
  data.names.push_back("Intercept");
  for (const auto& c : cond_dummies) data.names.push_back("condition[" + c + "]");
  for (const auto& m : model_dummies) data.names.push_back("model[" + m + "]");
  for (const auto& d : domain_dummies) data.names.push_back("domain[" + d + "]");
  if (include_interactions) {
    for (const auto& c : cond_dummies) {
      for (const auto& m : model_dummies) {
        data.names.push_back("condition[" + c + "]:model[" + m + "]");
      }
    }
    for (const auto& c : cond_dummies) {
      for (const auto& d : domain_dummies) {
        data.names.push_back("condition[" + c + "]:domain[" + d + "]");
      }
    }
  }

  std::map<std::string, int> group_index;
  for (const auto* r : parsed) {
    data.y.push_back(double(*r->aggressiveness_score));
    std::vector<double> x;
    x.reserve(data.names.size());
    x.push_back(1.0);
    for (const auto& c : cond_dummies) x.push_back(r->condition_code == c ? 1.0 : 0.0);
    for (const auto& m : model_dummies) x.push_back(r->model_name == m ? 1.0 : 0.0);
    for (const auto& d : domain_dummies) x.push_back(r->domain == d ? 1.0 : 0.0);
    if (include_interactions) {
      for (const auto& c : cond_dummies) {
        for (const auto& m : model_dummies) {
          x.push_back((r->condition_code == c && r->model_name == m) ? 1.0 : 0.0);
        }
      }
      for (const auto& c : cond_dummies) {
        for (const auto& d : domain_dummies) {
          x.push_back((r->condition_code == c && r->domain == d) ? 1.0 : 0.0);
        }
      }
    }
    data.X.push_back(std::move(x));
    auto [it, inserted] = group_index.emplace(r->vignette_id, int(group_index.size()));
    data.group.push_back(it->second);
  }
  return data;
}

MixedModelFit fit_mixed_model(const std::vector<runner::TrialRow>& rows,
                              bool include_interactions) {
  return fit_random_intercept(build_design(rows, include_interactions));
}

double bonferroni_threshold(double alpha, int k) {
  if (k < 1) throw std::invalid_argument("comparison count must be at least 1");
  return alpha / k;
}

WilcoxonResult wilcoxon_exact(const std::vector<double>& diffs, int k_comparisons, double alpha) {
  if (k_comparisons < 1) throw std::invalid_argument("comparison count must be at least 1");
  WilcoxonResult result;
  result.n_pairs = static_cast<int>(diffs.size());
  if (!diffs.empty()) {
    result.mean_diff = std::accumulate(diffs.begin(), diffs.end(), 0.0) / diffs.size();
  }

  std::vector<double> nonzero;
  for (double d : diffs) {
    if (d != 0.0) nonzero.push_back(d);
  }
  const int m = static_cast<int>(nonzero.size());
  result.n_nonzero = m;
  if (m == 0) {
    result.p_exact = 1.0;
    result.w = 0.0;
  } else {
    if (m > 25) {
      throw std::invalid_argument("exact mode supports at most 25 non-zero differences");
    }

    // Midranks over |d|.
    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return std::abs(nonzero[a]) < std::abs(nonzero[b]);
    });
    std::vector<double> rank(m, 0.0);
    for (int i = 0; i < m;) {
      int j = i;
      while (j < m && std::abs(nonzero[order[j]]) == std::abs(nonzero[order[i]])) ++j;
      double mid = (double(i + 1) + double(j)) / 2.0;
      for (int t = i; t < j; ++t) rank[order[t]] = mid;
      i = j;
    }

    double w = 0.0;
    for (int i = 0; i < m; ++i) {
      if (nonzero[i] > 0.0) w += rank[i];
    }
    result.w = w;

    // Doubling turns midranks into integers for exact counting.
    std::vector<long> dr(m);
    for (int i = 0; i < m; ++i) dr[i] = std::lround(rank[i] * 2.0);
    long w2 = std::lround(w * 2.0);

    const unsigned long long total = 1ULL << m;
    unsigned long long count_le = 0, count_ge = 0;
    long current = 0;  // empty assignment: all differences negative
    std::vector<char> in_set(m, 0);
    auto tally = [&](long s) {
      if (s <= w2) ++count_le;
      if (s >= w2) ++count_ge;
    };
    tally(current);
    for (unsigned long long g = 1; g < total; ++g) {
      int bit = __builtin_ctzll(g);  // Gray-code neighbor differs in this bit
      if (in_set[bit]) {
        current -= dr[bit];
        in_set[bit] = 0;
      } else {
        current += dr[bit];
        in_set[bit] = 1;
      }
      tally(current);
    }
    double p_le = double(count_le) / double(total);
    double p_ge = double(count_ge) / double(total);
    result.p_exact = std::min(1.0, 2.0 * std::min(p_le, p_ge));
  }

  result.p_bonferroni = std::min(1.0, result.p_exact * k_comparisons);
  result.significant = result.p_bonferroni < alpha;
  return result;
}

double cohens_d(const std::vector<double>& group_a, const std::vector<double>& group_b) {
  if (group_a.empty() || group_b.empty()) {
    throw std::invalid_argument("both groups must be non-empty");
  }
  const double n1 = double(group_a.size()), n2 = double(group_b.size());
  double m1 = std::accumulate(group_a.begin(), group_a.end(), 0.0) / n1;
  double m2 = std::accumulate(group_b.begin(), group_b.end(), 0.0) / n2;
  if (m1 == m2) return 0.0;

  if (group_a.size() + group_b.size() < 3) {
    throw ZeroVariance("too few observations to pool a standard deviation");
  }
  double ss1 = 0.0, ss2 = 0.0;
  for (double v : group_a) ss1 += (v - m1) * (v - m1);
  for (double v : group_b) ss2 += (v - m2) * (v - m2);
  double pooled_var = (ss1 + ss2) / (n1 + n2 - 2.0);
  if (pooled_var <= 0.0) {
    throw ZeroVariance("pooled standard deviation is zero with unequal means");
  }
  return (m1 - m2) / std::sqrt(pooled_var);
}

std::vector<EffectSize> effect_sizes(const std::vector<runner::TrialRow>& rows,
                                     const std::string& model) {
  std::vector<double> control;
  for (const auto& r : rows) {
    if (row_parsed(r) && r.model_name == model && r.condition_code == "CONTROL") {
      control.push_back(double(*r.aggressiveness_score));
    }
  }

  std::vector<EffectSize> out;
  for (const auto& c : protocol::condition_catalog()) {
    if (c.code == "CONTROL") continue;
    bool any_row = false;
    std::vector<double> scores;
    for (const auto& r : rows) {
      if (r.model_name != model || r.condition_code != c.code) continue;
      any_row = true;
      if (row_parsed(r)) scores.push_back(double(*r.aggressiveness_score));
    }
    if (!any_row) continue;

    EffectSize es;
    es.model_label = model;
    es.condition_code = c.code;
    es.n_condition = static_cast<int>(scores.size());
    es.n_control = static_cast<int>(control.size());
    es.caution = scores.size() < 2 || control.size() < 2;
    if (scores.empty() || control.empty()) {
      es.gap = "no_data";
    } else {
      try {
        es.d = cohens_d(scores, control);
      } catch (const ZeroVariance&) {
        es.gap = "zero_variance";
      }
    }
    out.push_back(std::move(es));
  }
  return out;
}

}  // namespace vbench::stats
