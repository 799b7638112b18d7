#ifndef STNLM_TENSOR_BANK_HPP
#define STNLM_TENSOR_BANK_HPP

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "stnlm/treebank.hpp"

namespace stnlm {

// Dense 3-index probability tensor over (alpha, beta, gamma) = (left child,
// right child, parent) category indices. Probabilities are jointly
// normalized: the sum over all entries of a key's tensor is 1. Counts are
// kept alongside so smoothed entries stay reconstructable.
struct MergeTensor {
  int n = 0;  // category count N_l
  std::vector<double> p;
  std::vector<std::uint64_t> c;

  MergeTensor() = default;
  explicit MergeTensor(int ncat)
      : n(ncat),
        p(static_cast<std::size_t>(ncat) * ncat * ncat, 0.0),
        c(static_cast<std::size_t>(ncat) * ncat * ncat, 0) {}

  std::size_t idx(int a, int b, int g) const {
    return (static_cast<std::size_t>(a) * n + b) * n + g;
  }
  double prob(int a, int b, int g) const { return p[idx(a, b, g)]; }
  double& prob(int a, int b, int g) { return p[idx(a, b, g)]; }
  std::uint64_t count(int a, int b, int g) const { return c[idx(a, b, g)]; }
  std::uint64_t& count(int a, int b, int g) { return c[idx(a, b, g)]; }
  double sum() const;
  // True when every (alpha, beta) with support maps to a single gamma.
  bool is_diagonal() const;
};

// Axis selector bits for residual distributions.
enum Axis : unsigned { kAlpha = 1u, kBeta = 2u, kGamma = 4u };

// Marginal over the discarded axes, row-major over the kept axes in
// (alpha, beta, gamma) order. Sums to 1 for a normalized tensor.
std::vector<double> residual(const MergeTensor& tensor, unsigned keep);

// P(category | word): vocab x N_l, rows of seen words sum to 1, rows of
// unseen words are all zero.
struct LexicalMatrix {
  int vocab = 0;
  int ncat = 0;
  std::vector<double> p;
  std::vector<std::uint64_t> c;

  LexicalMatrix() = default;
  LexicalMatrix(int v, int n)
      : vocab(v),
        ncat(n),
        p(static_cast<std::size_t>(v) * n, 0.0),
        c(static_cast<std::size_t>(v) * n, 0) {}

  std::size_t idx(int w, int cat) const {
    return static_cast<std::size_t>(w) * ncat + cat;
  }
  double prob(int w, int cat) const { return p[idx(w, cat)]; }
  double& prob(int w, int cat) { return p[idx(w, cat)]; }
  std::uint64_t count(int w, int cat) const { return c[idx(w, cat)]; }
  std::uint64_t& count(int w, int cat) { return c[idx(w, cat)]; }
  // Column mass sum_w P(cat | w), the leaf message of the contraction.
  std::vector<double> column_mass() const;
};

// Tensor keys by refinement level: L1 shares one tensor, L2 keys on z,
// L3 on (z,t), L4 on (whole-tree shape, z, t). Encoded text forms:
// "-", "z", "z:t", "shape|z:t".
struct TensorKey {
  std::string shape;
  int z = 0;
  int t = 0;

  static std::string encode(int level, const std::string& shape, int z, int t);
  static TensorKey decode(int level, const std::string& text);
};

struct MergeTensorBank {
  int level = 1;
  double lambda = 0.0;
  bool deterministic = false;
  Grammar grammar;
  LexicalMatrix lexical;
  std::map<std::string, MergeTensor> tensors;

  int num_categories() const { return grammar.num_categories(); }

  // Real vocabulary: the reserved unk row (always the last word index) is a
  // query-time fallback, not a word the model sums or samples over.
  int num_words() const {
    const int v = grammar.vocab_size();
    if (v > 0 && grammar.words.back() == grammar.unk_token) return v - 1;
    return v;
  }

  // Column masses sum_w P(cat | w) over real words: the leaf message of
  // every contraction.
  std::vector<double> leaf_column_mass() const {
    std::vector<double> out(lexical.ncat, 0.0);
    for (int w = 0; w < num_words(); ++w)
      for (int cat = 0; cat < lexical.ncat; ++cat)
        out[cat] += lexical.prob(w, cat);
    return out;
  }

  const MergeTensor* find(const std::string& key) const {
    auto it = tensors.find(key);
    return it == tensors.end() ? nullptr : &it->second;
  }

  // Key for a merge happening at node coordinates (z,t) of a tree with the
  // given shape. Level 4 requires the shape to be known to the bank.
  std::string key_for(const std::string& shape, int z, int t) const;

  // Entry lookup with level dispatch; unseen keys give 0 at lambda = 0 and
  // the uniform smoothed value otherwise.
  double merge_prob(const std::string& shape, int z, int t, int alpha,
                    int beta, int gamma) const;
  double merge_prob_named(const std::string& shape, int z, int t,
                          const std::string& alpha, const std::string& beta,
                          const std::string& gamma) const;
};

struct EstimateOptions {
  double lambda = 0.0;
  int jobs = 1;  // <= 0 resolves to the OpenMP default
  std::string unk_token = "<unk>";
};

// Frequency estimation over a binary-parsed corpus. Tensor entries are
// (count + lambda) / (total + lambda * N_l^3) per key; lexical rows are
// P(category | word). The unk row pools hapax legomena.
MergeTensorBank estimate(std::span<const ParseTree> corpus, int level,
                         const EstimateOptions& options = {});

struct ValidationIssue {
  enum class Kind { negativity, normalization, determinism, lexical_row };
  Kind kind;
  std::string key;
  int alpha = -1, beta = -1, gamma = -1;
  double value = 0.0;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
};

ValidationReport validate(const MergeTensorBank& bank);

// Line-oriented text model format (.stn) with a trailing CRC-32. Probabilities
// round-trip bit exactly through 17 significant digits.
void save_bank(const MergeTensorBank& bank, const std::string& path);
MergeTensorBank load_bank(const std::string& path);

std::string serialize_bank(const MergeTensorBank& bank);
MergeTensorBank deserialize_bank(std::string_view text);

}  // namespace stnlm

#endif
