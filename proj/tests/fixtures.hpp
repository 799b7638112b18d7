#ifndef STNLM_TESTS_FIXTURES_HPP
#define STNLM_TESTS_FIXTURES_HPP

#include <cstdint>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

#include "stnlm/prob_model.hpp"
#include "stnlm/rng.hpp"
#include "stnlm/tensor_bank.hpp"
#include "stnlm/treebank.hpp"

namespace stnlm::testing {

inline ParseTree tree_of(const std::string& bracketed) {
  auto trees = parse_bracketed(bracketed);
  return trees.at(0);
}

struct TripleSpec {
  std::string a, b, g;
  double weight = 1.0;
};

struct LexSpec {
  std::string word;
  std::string cat;
  double weight = 1.0;  // relative within the word's row
};

// Hand-built level-1 bank; merge weights normalize jointly, lexical rows
// normalize per word.
inline MergeTensorBank make_bank(const std::vector<std::string>& cats,
                                 const std::vector<std::string>& words,
                                 const std::vector<TripleSpec>& triples,
                                 const std::vector<LexSpec>& lex) {
  MergeTensorBank bank;
  bank.level = 1;
  for (const auto& c : cats) bank.grammar.add_category(c);
  for (const auto& w : words) bank.grammar.add_word(w);
  bank.grammar.add_word(bank.grammar.unk_token);
  const int n = bank.grammar.num_categories();
  MergeTensor tensor(n);
  double total = 0.0;
  for (const auto& t : triples) total += t.weight;
  for (const auto& t : triples)
    tensor.prob(bank.grammar.category_of(t.a), bank.grammar.category_of(t.b),
                bank.grammar.category_of(t.g)) += t.weight / total;
  bank.deterministic = tensor.is_diagonal();
  bank.tensors.emplace("-", std::move(tensor));

  bank.lexical = LexicalMatrix(bank.grammar.vocab_size(), n);
  std::vector<double> row_total(bank.grammar.vocab_size(), 0.0);
  for (const auto& l : lex) row_total[bank.grammar.word_of(l.word)] += l.weight;
  for (const auto& l : lex) {
    const int w = bank.grammar.word_of(l.word);
    bank.lexical.prob(w, bank.grammar.category_of(l.cat)) +=
        l.weight / row_total[w];
    bank.lexical.count(w, bank.grammar.category_of(l.cat)) += 1;
  }
  return bank;
}

// Toy grammar with three uniform merge rules and a one-hot lexicon with two
// interchangeable nouns. Paired with the 5-leaf sentence
// "(S (NP (D the) (N cat)) (VP (V eats) (NP (D the) (N fish))))".
inline MergeTensorBank g0() {
  return make_bank({"D", "N", "V", "NP", "VP", "S"},
                   {"the", "cat", "fish", "eats"},
                   {{"D", "N", "NP"}, {"V", "NP", "VP"}, {"NP", "VP", "S"}},
                   {{"the", "D"}, {"cat", "N"}, {"fish", "N"}, {"eats", "V"}});
}

inline ParseTree g0_sentence() {
  return tree_of(
      "(S (NP (D the) (N cat)) (VP (V eats) (NP (D the) (N fish))))");
}

// Two-rule variant for intransitive 3-leaf sentences like
// "(S (NP (D the) (N cat)) (V sleeps))".
inline MergeTensorBank g0_small() {
  return make_bank({"D", "N", "V", "NP", "S"},
                   {"the", "cat", "fish", "sleeps"},
                   {{"D", "N", "NP"}, {"NP", "V", "S"}},
                   {{"the", "D"}, {"cat", "N"}, {"fish", "N"}, {"sleeps", "V"}});
}

inline ParseTree g0_small_sentence() {
  return tree_of("(S (NP (D the) (N cat)) (V sleeps))");
}

struct RandomModelOptions {
  int ncat = 3;
  int vocab = 3;
  int nleaves = 4;
  int level = 1;
  bool det_merge = false;
  bool det_lexicon = false;
  bool latin = false;  // injective-per-argument deterministic maps
  double lambda = 0.0;
};

struct RandomModel {
  MergeTensorBank bank;
  ParseTree tree;  // fully labeled, with words
};

inline ParseTree random_shape(int nleaves, Rng& rng) {
  // Random recursive split; labels and words filled in later.
  struct Builder {
    ParseTree tree;
    Rng& rng;
    int build(int n) {
      if (n == 1) return tree.add_leaf("", "");
      const int k =
          1 + static_cast<int>(rng() % static_cast<std::uint64_t>(n - 1));
      const int l = build(k);
      const int r = build(n - k);
      return tree.add_internal("", l, r);
    }
  } b{ParseTree{}, rng};
  b.tree.set_root(b.build(nleaves));
  b.tree.assign_coords();
  return b.tree;
}

inline RandomModel random_model(std::uint64_t seed,
                                const RandomModelOptions& opt) {
  Rng rng(seed);
  RandomModel model;
  model.tree = random_shape(opt.nleaves, rng);

  MergeTensorBank& bank = model.bank;
  bank.level = opt.level;
  bank.lambda = opt.lambda;
  for (int c = 0; c < opt.ncat; ++c)
    bank.grammar.add_category("C" + std::to_string(c));
  for (int w = 0; w < opt.vocab; ++w)
    bank.grammar.add_word("w" + std::to_string(w));
  bank.grammar.add_word(bank.grammar.unk_token);
  const int n = opt.ncat;

  // Lexicon.
  bank.lexical = LexicalMatrix(bank.grammar.vocab_size(), n);
  std::vector<int> word_cat(opt.vocab, 0);
  for (int w = 0; w < opt.vocab; ++w) {
    if (opt.det_lexicon) {
      word_cat[w] = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
      bank.lexical.prob(w, word_cat[w]) = 1.0;
      bank.lexical.count(w, word_cat[w]) = 1;
    } else {
      double total = 0.0;
      std::vector<double> row(n);
      for (int c = 0; c < n; ++c) {
        row[c] = 0.05 + uniform01(rng);
        total += row[c];
      }
      for (int c = 0; c < n; ++c) {
        bank.lexical.prob(w, c) = row[c] / total;
        bank.lexical.count(w, c) = 1;
      }
    }
  }

  // One tensor per key the tree needs at this level.
  const std::string shape = tree_shape(model.tree);
  for (int i = 0; i < model.tree.size(); ++i) {
    const TreeNode& nd = model.tree.node(i);
    if (nd.is_leaf()) continue;
    std::string key = TensorKey::encode(opt.level, shape, nd.coord.z,
                                        nd.coord.t);
    if (bank.tensors.find(key) == bank.tensors.end())
      bank.tensors.emplace(std::move(key), MergeTensor(n));
  }
  if (bank.tensors.empty())
    bank.tensors.emplace(TensorKey::encode(opt.level, shape, 0, 0),
                         MergeTensor(n));

  for (auto& [key, tensor] : bank.tensors) {
    double total = 0.0;
    if (opt.det_merge) {
      std::vector<int> pi(n), rho(n);
      std::iota(pi.begin(), pi.end(), 0);
      std::iota(rho.begin(), rho.end(), 0);
      for (int i = n - 1; i > 0; --i) {
        std::swap(pi[i], pi[rng() % static_cast<std::uint64_t>(i + 1)]);
        std::swap(rho[i], rho[rng() % static_cast<std::uint64_t>(i + 1)]);
      }
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          const int g = opt.latin
                            ? (pi[a] + rho[b]) % n
                            : static_cast<int>(
                                  rng() % static_cast<std::uint64_t>(n));
          const double v = 0.05 + uniform01(rng);
          tensor.prob(a, b, g) = v;
          total += v;
        }
    } else {
      for (double& v : tensor.p) {
        v = 0.05 + uniform01(rng);
        total += v;
      }
    }
    for (double& v : tensor.p) v /= total;
  }
  bank.deterministic = opt.det_merge && opt.lambda == 0.0;

  // Labels and words on the tree; deterministic banks get the consistent
  // labeling so products are nonzero.
  struct Labeler {
    ParseTree& tree;
    MergeTensorBank& bank;
    const std::vector<int>& word_cat;
    Rng& rng;
    bool det;
    int label(int i) {
      // returns the category index assigned to node i
      TreeNode& nd = tree.mutable_node(i);
      if (nd.is_leaf()) {
        const int w = static_cast<int>(
            rng() % static_cast<std::uint64_t>(bank.grammar.vocab_size() - 1));
        nd.word = bank.grammar.words[w];
        int c;
        if (det) {
          c = word_cat[w];
        } else {
          c = static_cast<int>(
              rng() % static_cast<std::uint64_t>(bank.num_categories()));
        }
        nd.category = bank.grammar.categories[c];
        return c;
      }
      const int a = label(nd.left());
      const int b = label(nd.right());
      int g = -1;
      if (det) {
        const std::string key = TensorKey::encode(
            bank.level, tree_shape(tree), nd.coord.z, nd.coord.t);
        const MergeTensor& t = bank.tensors.at(key);
        for (int c = 0; c < t.n; ++c)
          if (t.prob(a, b, c) > 0.0) {
            g = c;
            break;
          }
      }
      if (g < 0)
        g = static_cast<int>(
            rng() % static_cast<std::uint64_t>(bank.num_categories()));
      nd.category = bank.grammar.categories[g];
      return g;
    }
  } labeler{model.tree, bank, word_cat, rng,
            opt.det_merge && opt.det_lexicon};
  labeler.label(model.tree.root());
  return model;
}

// Labels a shape bottom-up under a fully deterministic bank (one-hot lexical
// rows, single-output merge pairs), writing words and categories into the
// tree. Returns false when some step has no nonzero continuation.
inline bool det_label(ParseTree& tree, const std::vector<int>& words,
                      const MergeTensorBank& bank) {
  const std::string shape = tree_shape(tree);
  const auto leaves = tree.leaves_in_order();
  std::vector<int> cat(tree.size(), -1);
  std::vector<int> order;
  std::vector<int> stack{tree.root()};
  while (!stack.empty()) {
    int i = stack.back();
    stack.pop_back();
    order.push_back(i);
    for (int c : tree.node(i).children) stack.push_back(c);
  }
  std::reverse(order.begin(), order.end());
  std::vector<int> leaf_pos(tree.size(), -1);
  for (std::size_t p = 0; p < leaves.size(); ++p)
    leaf_pos[leaves[p]] = static_cast<int>(p);
  for (int i : order) {
    TreeNode& nd = tree.mutable_node(i);
    if (nd.is_leaf()) {
      const int w = words[leaf_pos[i]];
      for (int c = 0; c < bank.num_categories(); ++c)
        if (bank.lexical.prob(w, c) > 0.0) {
          cat[i] = c;
          break;
        }
      if (cat[i] < 0) return false;
      nd.word = bank.grammar.words[w];
      nd.category = bank.grammar.categories[cat[i]];
      continue;
    }
    const MergeTensor* t = bank.find(TensorKey::encode(
        bank.level, shape, nd.coord.z, nd.coord.t));
    if (t == nullptr) return false;
    for (int g = 0; g < t->n; ++g)
      if (t->prob(cat[nd.left()], cat[nd.right()], g) > 0.0) {
        cat[i] = g;
        break;
      }
    if (cat[i] < 0) return false;
    nd.category = bank.grammar.categories[cat[i]];
  }
  return true;
}

}  // namespace stnlm::testing

#endif
