#include "stnlm/correlations.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stnlm/prob_model.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace stnlm {

int syntactic_distance(const ParseTree& tree, int i, int j) {
  const auto leaves = tree.leaves_in_order();
  const int n = static_cast<int>(leaves.size());
  if (i < 0 || i >= n || j < 0 || j >= n)
    throw IndexOutOfRange("syntactic_distance: leaf index out of range");
  if (i == j) return 0;

  std::vector<int> parent(tree.size(), -1), depth(tree.size(), 0);
  std::vector<int> stack{tree.root()};
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int c : tree.node(v).children) {
      parent[c] = v;
      depth[c] = depth[v] + 1;
      stack.push_back(c);
    }
  }
  int a = leaves[i], b = leaves[j];
  int d = 0;
  while (depth[a] > depth[b]) {
    a = parent[a];
    ++d;
  }
  while (depth[b] > depth[a]) {
    b = parent[b];
    ++d;
  }
  while (a != b) {
    a = parent[a];
    b = parent[b];
    d += 2;
  }
  return d;
}

Observable Observable::word_indicator(int word, int vocab) {
  Observable o;
  o.over_words = true;
  o.weights.assign(vocab, 0.0);
  o.weights[word] = 1.0;
  return o;
}

Observable Observable::category_indicator(int category, int ncat) {
  Observable o;
  o.over_words = false;
  o.weights.assign(ncat, 0.0);
  o.weights[category] = 1.0;
  return o;
}

namespace {

// Leaf message with the observable inserted as a diagonal weight.
std::vector<double> weighted_leaf_message(const MergeTensorBank& bank,
                                          const Observable& f) {
  const int ncat = bank.num_categories();
  std::vector<double> out(ncat, 0.0);
  if (f.over_words) {
    for (int w = 0; w < bank.num_words(); ++w) {
      const double fw = f.weights[w];
      if (fw == 0.0) continue;
      for (int c = 0; c < ncat; ++c) out[c] += fw * bank.lexical.prob(w, c);
    }
  } else {
    const std::vector<double> col = bank.leaf_column_mass();
    for (int c = 0; c < ncat; ++c) out[c] = f.weights[c] * col[c];
  }
  return out;
}

// Same-leaf product f(w) * f'(w) message.
std::vector<double> weighted_leaf_message2(const MergeTensorBank& bank,
                                           const Observable& f,
                                           const Observable& fp) {
  const int ncat = bank.num_categories();
  std::vector<double> out(ncat, 0.0);
  if (f.over_words && fp.over_words) {
    for (int w = 0; w < bank.num_words(); ++w) {
      const double fw = f.weights[w] * fp.weights[w];
      if (fw == 0.0) continue;
      for (int c = 0; c < ncat; ++c) out[c] += fw * bank.lexical.prob(w, c);
    }
    return out;
  }
  if (!f.over_words && !fp.over_words) {
    const std::vector<double> col = bank.leaf_column_mass();
    for (int c = 0; c < ncat; ++c)
      out[c] = f.weights[c] * fp.weights[c] * col[c];
    return out;
  }
  const Observable& words = f.over_words ? f : fp;
  const Observable& cats = f.over_words ? fp : f;
  for (int w = 0; w < bank.num_words(); ++w) {
    const double fw = words.weights[w];
    if (fw == 0.0) continue;
    for (int c = 0; c < ncat; ++c)
      out[c] += fw * cats.weights[c] * bank.lexical.prob(w, c);
  }
  return out;
}

double contract_with(const ParseTree& shape, const MergeTensorBank& bank,
                     const std::unordered_map<int, std::vector<double>>& ov) {
  const auto m = inside_messages(shape, bank, &ov);
  double s = 0.0;
  for (double v : m[shape.root()]) s += v;
  return s;
}

}  // namespace

double two_point(const ParseTree& shape, const MergeTensorBank& bank, int i,
                 int j, const Observable& f, const Observable& fp) {
  const int n = shape.leaf_count();
  if (i < 0 || i >= n || j < 0 || j >= n)
    throw IndexOutOfRange("two_point: leaf index out of range");
  const double z = tree_partition(shape, bank);
  if (!(z > 0.0)) throw ZeroPartition("two_point: zero partition");

  std::unordered_map<int, std::vector<double>> ov;
  if (i == j) {
    ov[i] = weighted_leaf_message2(bank, f, fp);
  } else {
    ov[i] = weighted_leaf_message(bank, f);
    ov[j] = weighted_leaf_message(bank, fp);
  }
  const double joint = contract_with(shape, bank, ov) / z;

  ov.clear();
  ov[i] = weighted_leaf_message(bank, f);
  const double ef = contract_with(shape, bank, ov) / z;
  ov.clear();
  ov[j] = weighted_leaf_message(bank, fp);
  const double efp = contract_with(shape, bank, ov) / z;
  return joint - ef * efp;
}

double mutual_information(const ParseTree& shape, const MergeTensorBank& bank,
                          int i, int j) {
  const int n = shape.leaf_count();
  if (i < 0 || i >= n || j < 0 || j >= n)
    throw IndexOutOfRange("mutual_information: leaf index out of range");
  const double z = tree_partition(shape, bank);
  if (!(z > 0.0)) throw ZeroPartition("mutual_information: zero partition");

  const int vocab = bank.num_words();
  const int ncat = bank.num_categories();
  std::vector<double> joint(static_cast<std::size_t>(vocab) * vocab, 0.0);

  std::unordered_map<int, std::vector<double>> ov;
  for (int a = 0; a < vocab; ++a) {
    std::vector<double> row_a(ncat);
    for (int c = 0; c < ncat; ++c) row_a[c] = bank.lexical.prob(a, c);
    if (i == j) {
      ov.clear();
      ov[i] = row_a;
      const double p = contract_with(shape, bank, ov) / z;
      joint[static_cast<std::size_t>(a) * vocab + a] = p;
      continue;
    }
    for (int b = 0; b < vocab; ++b) {
      std::vector<double> row_b(ncat);
      for (int c = 0; c < ncat; ++c) row_b[c] = bank.lexical.prob(b, c);
      ov.clear();
      ov[i] = row_a;
      ov[j] = std::move(row_b);
      joint[static_cast<std::size_t>(a) * vocab + b] =
          contract_with(shape, bank, ov) / z;
    }
  }

  std::vector<double> pa(vocab, 0.0), pb(vocab, 0.0);
  for (int a = 0; a < vocab; ++a)
    for (int b = 0; b < vocab; ++b) {
      pa[a] += joint[static_cast<std::size_t>(a) * vocab + b];
      pb[b] += joint[static_cast<std::size_t>(a) * vocab + b];
    }
  double info = 0.0;
  for (int a = 0; a < vocab; ++a)
    for (int b = 0; b < vocab; ++b) {
      const double p = joint[static_cast<std::size_t>(a) * vocab + b];
      if (p <= 0.0) continue;
      info += p * std::log2(p / (pa[a] * pb[b]));
    }
  return std::max(info, 0.0);
}

DecayFit fit_decay(std::span<const std::pair<double, double>> points,
                   DecayModel model, double window_lo, double window_hi) {
  std::vector<std::pair<double, double>> inside;
  bool dropped_nonpositive = false;
  for (const auto& [d, v] : points) {
    if (d < window_lo || d > window_hi) continue;
    if (v <= 0.0) {
      dropped_nonpositive = true;
      continue;
    }
    if (model == DecayModel::power && d <= 0.0)
      throw NonPositiveValues("fit_decay: power model needs distances > 0");
    inside.emplace_back(d, v);
  }
  if (inside.empty() && dropped_nonpositive)
    throw NonPositiveValues("fit_decay: no positive values inside window");
  if (inside.size() < 3)
    throw InsufficientPoints("fit_decay: need at least 3 usable points, got " +
                             std::to_string(inside.size()));

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(inside.size());
  for (const auto& [d, v] : inside) {
    const double x = model == DecayModel::power ? std::log(d) : d;
    const double y = std::log(v);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = m * sxx - sx * sx;
  const double slope = denom != 0.0 ? (m * sxy - sx * sy) / denom : 0.0;
  const double intercept = (sy - slope * sx) / m;

  double ss_res = 0, ss_tot = 0;
  const double ybar = sy / m;
  for (const auto& [d, v] : inside) {
    const double x = model == DecayModel::power ? std::log(d) : d;
    const double y = std::log(v);
    const double pred = slope * x + intercept;
    ss_res += (y - pred) * (y - pred);
    ss_tot += (y - ybar) * (y - ybar);
  }

  DecayFit fit;
  fit.model = model;
  fit.tau = slope < 0.0 ? -1.0 / slope : std::numeric_limits<double>::infinity();
  fit.intercept = intercept;
  fit.r_squared = ss_tot > 0.0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0)
                               : (ss_res <= 1e-24 ? 1.0 : 0.0);
  fit.window_lo = window_lo;
  fit.window_hi = window_hi;
  return fit;
}

namespace {

// Neumaier compensated accumulator.
struct Kahan {
  double sum = 0.0, comp = 0.0;
  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      comp += (sum - t) + v;
    else
      comp += (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

}  // namespace

DecaySeries corpus_average_decay(std::span<const ParseTree> corpus,
                                 const MergeTensorBank& bank, int rmax,
                                 double fit_lo, double fit_hi, int jobs) {
  if (corpus.empty()) throw EmptyCorpus("corpus_average_decay: empty corpus");
  const int ncat = bank.num_categories();

  struct TreeSums {
    std::vector<double> c_sum, i_sum;
    std::vector<long> count;
  };
  std::vector<TreeSums> per_tree(corpus.size());

  auto run_tree = [&](std::size_t ti) {
    const ParseTree& tree = corpus[ti];
    TreeSums& ts = per_tree[ti];
    ts.c_sum.assign(rmax, 0.0);
    ts.i_sum.assign(rmax, 0.0);
    ts.count.assign(rmax, 0);
    const int n = tree.leaf_count();
    for (int r = 1; r <= rmax; ++r) {
      for (int i = 0; i + r < n; ++i) {
        const int j = i + r;
        double cval = 0.0;
        for (int c = 0; c < ncat; ++c) {
          const Observable f = Observable::category_indicator(c, ncat);
          cval += std::abs(two_point(tree, bank, i, j, f, f));
        }
        ts.c_sum[r - 1] += cval / ncat;
        ts.i_sum[r - 1] += mutual_information(tree, bank, i, j);
        ts.count[r - 1] += 1;
      }
    }
  };

#ifdef _OPENMP
  if (jobs != 1) {
    const int threads = jobs <= 0 ? omp_get_max_threads() : jobs;
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (std::size_t ti = 0; ti < corpus.size(); ++ti) run_tree(ti);
  } else {
    for (std::size_t ti = 0; ti < corpus.size(); ++ti) run_tree(ti);
  }
#else
  (void)jobs;
  for (std::size_t ti = 0; ti < corpus.size(); ++ti) run_tree(ti);
#endif

  DecaySeries series;
  series.rmax = rmax;
  series.avg_abs_c.assign(rmax, 0.0);
  series.avg_i.assign(rmax, 0.0);
  for (int r = 0; r < rmax; ++r) {
    Kahan cs, is;
    long cnt = 0;
    for (const TreeSums& ts : per_tree) {
      cs.add(ts.c_sum[r]);
      is.add(ts.i_sum[r]);
      cnt += ts.count[r];
    }
    if (cnt > 0) {
      series.avg_abs_c[r] = cs.value() / static_cast<double>(cnt);
      series.avg_i[r] = is.value() / static_cast<double>(cnt);
    }
  }

  std::vector<std::pair<double, double>> cpts, ipts;
  for (int r = 1; r <= rmax; ++r) {
    cpts.emplace_back(r, series.avg_abs_c[r - 1]);
    ipts.emplace_back(r, series.avg_i[r - 1]);
  }
  series.c_exponential = fit_decay(cpts, DecayModel::exponential, fit_lo, fit_hi);
  series.c_power = fit_decay(cpts, DecayModel::power, fit_lo, fit_hi);
  series.i_exponential = fit_decay(ipts, DecayModel::exponential, fit_lo, fit_hi);
  series.i_power = fit_decay(ipts, DecayModel::power, fit_lo, fit_hi);
  return series;
}

}  // namespace stnlm
