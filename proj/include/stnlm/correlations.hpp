#ifndef STNLM_CORRELATIONS_HPP
#define STNLM_CORRELATIONS_HPP

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stnlm/tensor_bank.hpp"
#include "stnlm/treebank.hpp"

namespace stnlm {

// Edge count of the unique tree path between leaves i and j; d(i,i) = 0.
int syntactic_distance(const ParseTree& tree, int i, int j);

// Diagonal weight inserted at a leaf: a real function of either the word
// index or the leaf's category index.
struct Observable {
  bool over_words = false;
  std::vector<double> weights;

  static Observable word_indicator(int word, int vocab);
  static Observable category_indicator(int category, int ncat);
};

// C(i,j) = <f(w_i) f'(w_j)> - <f(w_i)><f'(w_j)> under p(.|T_n)/Z, computed
// exactly by tree contraction with the observables as leaf weights.
double two_point(const ParseTree& shape, const MergeTensorBank& bank, int i,
                 int j, const Observable& f, const Observable& fp);

// Exact Shannon mutual information (bits) of the joint word marginal at
// leaves i and j.
double mutual_information(const ParseTree& shape, const MergeTensorBank& bank,
                          int i, int j);

enum class DecayModel { exponential, power };

struct DecayFit {
  DecayModel model = DecayModel::exponential;
  double tau = 0.0;        // slope = -1/tau in the transformed space
  double intercept = 0.0;
  double r_squared = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
};

// Ordinary least squares on (d, ln v) for the exponential model or
// (ln d, ln v) for the power model, restricted to the window.
DecayFit fit_decay(std::span<const std::pair<double, double>> points,
                   DecayModel model, double window_lo = 0.0,
                   double window_hi = 1e300);

struct DecaySeries {
  int rmax = 0;
  std::vector<double> avg_abs_c;  // index r-1
  std::vector<double> avg_i;
  DecayFit c_exponential, c_power;
  DecayFit i_exponential, i_power;
};

// Corpus-averaged |C|(r) and I(r) over all trees and all pairs at linear
// separation r, with both decay fits per series. The default observable set
// averages over all same-category indicator pairs.
DecaySeries corpus_average_decay(std::span<const ParseTree> corpus,
                                 const MergeTensorBank& bank, int rmax,
                                 double fit_lo = 2.0, double fit_hi = 1e300,
                                 int jobs = 1);

}  // namespace stnlm

#endif
