#ifndef STNLM_PROB_MODEL_HPP
#define STNLM_PROB_MODEL_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "stnlm/tensor_bank.hpp"
#include "stnlm/treebank.hpp"

namespace stnlm {

// Natural-log probability of a fully labeled binary tree: the product of
// lexical factors P(cat | word) and one merge factor per internal node.
// Zero factors give -infinity. No contraction is performed.
double sentence_logprob(const ParseTree& tree, const MergeTensorBank& bank,
                        bool use_unk = false);

// Partial assignment for the brute-force contraction: category per arena
// node (leaves included) and word per leaf position, each optionally fixed.
struct OracleFixing {
  std::vector<std::optional<int>> node_category;  // indexed by arena node id
  std::vector<std::optional<int>> leaf_word;      // indexed by leaf position

  static OracleFixing none(const ParseTree& tree);
  // Fixes everything from the tree's labels and words.
  static OracleFixing all(const ParseTree& tree, const MergeTensorBank& bank);
};

// Exact sum of the full factor product over every unfixed word and category
// index. Guard: n <= 10 and at most 10^7 terms, else LimitExceeded. This is
// the oracle the factorized path is tested against.
double contract_oracle(const ParseTree& tree, const MergeTensorBank& bank,
                       const OracleFixing& fixing);

// Per-node inside vectors over categories; leaves carry the lexical column
// mass unless overridden (used by correlations to insert observables).
// leaf_override maps leaf position -> weight vector over categories.
std::vector<std::vector<double>> inside_messages(
    const ParseTree& tree, const MergeTensorBank& bank,
    const std::unordered_map<int, std::vector<double>>* leaf_override =
        nullptr);

// Outside vectors; root receives all-ones (the top index is summed).
std::vector<std::vector<double>> outside_messages(
    const ParseTree& tree, const MergeTensorBank& bank,
    const std::vector<std::vector<double>>& inside);

// Z(T_n): total probability mass over all sentences with this tree shape,
// by bottom-up contraction in O(n * N_l^3).
double tree_partition(const ParseTree& tree, const MergeTensorBank& bank);

// Masked-word prediction on a fully labeled skeleton. Unnormalized weight of
// word w is P(cat | w) times the single merge factor tying the masked leaf
// to its sibling and parent; everything else cancels. With category_free the
// masked leaf's own category is summed instead of read from the skeleton.
struct MarginalQuery {
  const ParseTree* tree = nullptr;
  int masked_pos = 0;
  bool category_free = false;
  bool use_unk = false;
};

std::vector<double> marginal_word(const MarginalQuery& query,
                                  const MergeTensorBank& bank);

// 2^H(p) in bits; input must be non-negative and sum to 1 within 1e-9
// (renormalized internally), else NotADistribution.
double perplexity(std::span<const double> dist);

// Ancestral sampling of word sequences for a tree shape: root category from
// the contracted weights, children pairs conditioned on the parent, words
// from lexical columns. Sentence i draws from a stream seeded with
// derive_stream_seed(seed, i), so output is schedule-independent and
// identical for identical seeds.
std::vector<std::vector<int>> sample(const ParseTree& shape,
                                     const MergeTensorBank& bank, int count,
                                     std::uint64_t seed, int jobs = 1);

struct UnigramTable {
  std::unordered_map<std::string, double> prob;
};

UnigramTable estimate_unigram(std::span<const ParseTree> corpus);

// Mean-field baseline: sum of independent per-word log probabilities.
double onegram_logprob(std::span<const std::string> words,
                       const UnigramTable& table);

// (1/p_max)^(n-1) with p_max the largest probability entry anywhere in the
// bank (merge tensors and the lexical matrix, which is the z0-scale merge).
double rough_perplexity_bound(int n, const MergeTensorBank& bank);

}  // namespace stnlm

#endif
