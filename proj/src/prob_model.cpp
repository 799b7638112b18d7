#include "stnlm/prob_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stnlm/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace stnlm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Per-internal-node tensor pointers (nullptr = unseen key).
std::vector<const MergeTensor*> resolve_tensors(const ParseTree& tree,
                                                const MergeTensorBank& bank) {
  const std::string shape =
      bank.level == 4 ? tree_shape(tree) : std::string();
  std::vector<const MergeTensor*> out(tree.size(), nullptr);
  for (int i = 0; i < tree.size(); ++i) {
    const TreeNode& n = tree.node(i);
    if (n.is_leaf()) continue;
    out[i] = bank.find(bank.key_for(shape, n.coord.z, n.coord.t));
  }
  return out;
}

double merge_entry(const MergeTensor* tensor, const MergeTensorBank& bank,
                   int a, int b, int g) {
  if (tensor != nullptr) return tensor->prob(a, b, g);
  if (bank.lambda == 0.0) return 0.0;
  const double n = bank.num_categories();
  return 1.0 / (n * n * n);
}

int lexical_row(const MergeTensorBank& bank, const std::string& word,
                bool use_unk) {
  int w = bank.grammar.find_word(word);
  if (w >= 0) return w;
  if (!use_unk) throw UnknownWord("unknown word: " + word);
  return bank.grammar.word_of(bank.grammar.unk_token);
}

}  // namespace

double sentence_logprob(const ParseTree& tree, const MergeTensorBank& bank,
                        bool use_unk) {
  if (!tree.is_binary())
    throw NonBinaryTree("sentence_logprob requires a binary tree");
  const auto tensors = resolve_tensors(tree, bank);
  double logp = 0.0;
  for (int i = 0; i < tree.size(); ++i) {
    const TreeNode& n = tree.node(i);
    double factor;
    if (n.is_leaf()) {
      const int w = lexical_row(bank, n.word, use_unk);
      factor = bank.lexical.prob(w, bank.grammar.category_of(n.category));
    } else {
      factor = merge_entry(tensors[i], bank,
                           bank.grammar.category_of(
                               tree.node(n.left()).category),
                           bank.grammar.category_of(
                               tree.node(n.right()).category),
                           bank.grammar.category_of(n.category));
    }
    if (factor <= 0.0) return kNegInf;
    logp += std::log(factor);
  }
  return logp;
}

OracleFixing OracleFixing::none(const ParseTree& tree) {
  OracleFixing f;
  f.node_category.assign(tree.size(), std::nullopt);
  f.leaf_word.assign(tree.leaf_count(), std::nullopt);
  return f;
}

OracleFixing OracleFixing::all(const ParseTree& tree,
                               const MergeTensorBank& bank) {
  OracleFixing f = none(tree);
  for (int i = 0; i < tree.size(); ++i)
    f.node_category[i] = bank.grammar.category_of(tree.node(i).category);
  const auto leaves = tree.leaves_in_order();
  for (std::size_t pos = 0; pos < leaves.size(); ++pos)
    f.leaf_word[pos] = bank.grammar.word_of(tree.node(leaves[pos]).word);
  return f;
}

double contract_oracle(const ParseTree& tree, const MergeTensorBank& bank,
                       const OracleFixing& fixing) {
  const int n = tree.leaf_count();
  if (n > 10) throw LimitExceeded("contract_oracle: more than 10 leaves");
  const int ncat = bank.num_categories();
  const int vocab = bank.grammar.vocab_size();

  // Free variable list: one slot per unfixed node category and leaf word.
  struct Var {
    bool is_word;
    int index;  // arena node id, or leaf position
    int domain;
  };
  std::vector<Var> vars;
  double terms = 1.0;
  for (int i = 0; i < tree.size(); ++i)
    if (!fixing.node_category[i]) {
      vars.push_back({false, i, ncat});
      terms *= ncat;
    }
  const int words_domain = bank.num_words();
  const auto leaves = tree.leaves_in_order();
  for (std::size_t pos = 0; pos < leaves.size(); ++pos)
    if (!fixing.leaf_word[pos]) {
      vars.push_back({true, static_cast<int>(pos), words_domain});
      terms *= words_domain;
    }
  if (terms > 1e7)
    throw LimitExceeded("contract_oracle: sum has more than 1e7 terms");

  std::vector<int> cat(tree.size(), 0), word(leaves.size(), 0);
  for (int i = 0; i < tree.size(); ++i)
    if (fixing.node_category[i]) cat[i] = *fixing.node_category[i];
  for (std::size_t pos = 0; pos < leaves.size(); ++pos)
    if (fixing.leaf_word[pos]) word[pos] = *fixing.leaf_word[pos];

  std::vector<int> leaf_pos_of(tree.size(), -1);
  for (std::size_t pos = 0; pos < leaves.size(); ++pos)
    leaf_pos_of[leaves[pos]] = static_cast<int>(pos);

  const auto tensors = resolve_tensors(tree, bank);

  std::vector<int> odo(vars.size(), 0);
  double total = 0.0;
  for (;;) {
    for (std::size_t v = 0; v < vars.size(); ++v) {
      if (vars[v].is_word)
        word[vars[v].index] = odo[v];
      else
        cat[vars[v].index] = odo[v];
    }
    double prod = 1.0;
    for (int i = 0; i < tree.size() && prod != 0.0; ++i) {
      const TreeNode& nd = tree.node(i);
      if (nd.is_leaf())
        prod *= bank.lexical.prob(word[leaf_pos_of[i]], cat[i]);
      else
        prod *= merge_entry(tensors[i], bank, cat[nd.left()],
                            cat[nd.right()], cat[i]);
    }
    total += prod;

    std::size_t v = 0;
    while (v < vars.size() && ++odo[v] == vars[v].domain) odo[v++] = 0;
    if (v == vars.size()) break;
    if (vars.empty()) break;
  }
  return total;
}

std::vector<std::vector<double>> inside_messages(
    const ParseTree& tree, const MergeTensorBank& bank,
    const std::unordered_map<int, std::vector<double>>* leaf_override) {
  const int ncat = bank.num_categories();
  const auto tensors = resolve_tensors(tree, bank);
  const std::vector<double> col = bank.leaf_column_mass();
  std::vector<std::vector<double>> m(tree.size());

  std::vector<int> order;  // post-order
  {
    std::vector<int> stack{tree.root()};
    while (!stack.empty()) {
      int i = stack.back();
      stack.pop_back();
      order.push_back(i);
      for (int c : tree.node(i).children) stack.push_back(c);
    }
    std::reverse(order.begin(), order.end());
  }

  std::vector<int> leaf_pos_of(tree.size(), -1);
  {
    const auto leaves = tree.leaves_in_order();
    for (std::size_t pos = 0; pos < leaves.size(); ++pos)
      leaf_pos_of[leaves[pos]] = static_cast<int>(pos);
  }

  for (int i : order) {
    const TreeNode& nd = tree.node(i);
    if (nd.is_leaf()) {
      if (leaf_override != nullptr) {
        auto it = leaf_override->find(leaf_pos_of[i]);
        if (it != leaf_override->end()) {
          m[i] = it->second;
          continue;
        }
      }
      m[i] = col;
      continue;
    }
    const auto& ml = m[nd.left()];
    const auto& mr = m[nd.right()];
    std::vector<double> out(ncat, 0.0);
    const MergeTensor* tensor = tensors[i];
    if (tensor != nullptr) {
      for (int a = 0; a < ncat; ++a) {
        if (ml[a] == 0.0) continue;
        for (int b = 0; b < ncat; ++b) {
          const double w = ml[a] * mr[b];
          if (w == 0.0) continue;
          for (int g = 0; g < ncat; ++g) out[g] += tensor->prob(a, b, g) * w;
        }
      }
    } else if (bank.lambda != 0.0) {
      double sl = 0.0, sr = 0.0;
      for (double v : ml) sl += v;
      for (double v : mr) sr += v;
      const double u = sl * sr / (static_cast<double>(ncat) * ncat * ncat);
      for (int g = 0; g < ncat; ++g) out[g] = u;
    }
    m[i] = std::move(out);
  }
  return m;
}

std::vector<std::vector<double>> outside_messages(
    const ParseTree& tree, const MergeTensorBank& bank,
    const std::vector<std::vector<double>>& inside) {
  const int ncat = bank.num_categories();
  const auto tensors = resolve_tensors(tree, bank);
  std::vector<std::vector<double>> o(tree.size());
  o[tree.root()].assign(ncat, 1.0);

  std::vector<int> order;  // pre-order: parents before children
  std::vector<int> stack{tree.root()};
  while (!stack.empty()) {
    int i = stack.back();
    stack.pop_back();
    order.push_back(i);
    for (int c : tree.node(i).children) stack.push_back(c);
  }

  for (int i : order) {
    const TreeNode& nd = tree.node(i);
    if (nd.is_leaf()) continue;
    const auto& ov = o[i];
    const auto& ml = inside[nd.left()];
    const auto& mr = inside[nd.right()];
    std::vector<double> ol(ncat, 0.0), orr(ncat, 0.0);
    const MergeTensor* tensor = tensors[i];
    if (tensor != nullptr) {
      for (int g = 0; g < ncat; ++g) {
        if (ov[g] == 0.0) continue;
        for (int a = 0; a < ncat; ++a)
          for (int b = 0; b < ncat; ++b) {
            const double t = tensor->prob(a, b, g) * ov[g];
            if (t == 0.0) continue;
            ol[a] += t * mr[b];
            orr[b] += t * ml[a];
          }
      }
    } else if (bank.lambda != 0.0) {
      double so = 0.0, sl = 0.0, sr = 0.0;
      for (double v : ov) so += v;
      for (double v : ml) sl += v;
      for (double v : mr) sr += v;
      const double cube = static_cast<double>(ncat) * ncat * ncat;
      for (int a = 0; a < ncat; ++a) ol[a] = so * sr / cube;
      for (int b = 0; b < ncat; ++b) orr[b] = so * sl / cube;
    }
    o[nd.left()] = std::move(ol);
    o[nd.right()] = std::move(orr);
  }
  return o;
}

double tree_partition(const ParseTree& tree, const MergeTensorBank& bank) {
  const auto m = inside_messages(tree, bank);
  double z = 0.0;
  for (double v : m[tree.root()]) z += v;
  return z;
}

std::vector<double> marginal_word(const MarginalQuery& query,
                                  const MergeTensorBank& bank) {
  const ParseTree& tree = *query.tree;
  const int n = tree.leaf_count();
  if (query.masked_pos < 0 || query.masked_pos >= n)
    throw MaskedPositionInvalid("masked position " +
                                std::to_string(query.masked_pos) +
                                " out of range for " + std::to_string(n) +
                                " leaves");
  const auto leaves = tree.leaves_in_order();
  const int leaf_id = leaves[query.masked_pos];
  const int ncat = bank.num_categories();
  const int vocab = bank.grammar.vocab_size();

  // Find the parent of the masked leaf, if any.
  int parent = -1;
  for (int i = 0; i < tree.size(); ++i) {
    const TreeNode& nd = tree.node(i);
    if (!nd.is_leaf() && (nd.left() == leaf_id || nd.right() == leaf_id)) {
      parent = i;
      break;
    }
  }

  // Merge factor as a function of the masked leaf's category.
  std::vector<double> merge_factor(ncat, 1.0);
  if (parent >= 0) {
    const TreeNode& p = tree.node(parent);
    const bool masked_is_left = p.left() == leaf_id;
    const int sibling = masked_is_left ? p.right() : p.left();
    const int sib_cat = bank.grammar.category_of(tree.node(sibling).category);
    const int par_cat = bank.grammar.category_of(p.category);
    const std::string shape =
        bank.level == 4 ? tree_shape(tree) : std::string();
    const MergeTensor* tensor =
        bank.find(bank.key_for(shape, p.coord.z, p.coord.t));
    for (int c = 0; c < ncat; ++c)
      merge_factor[c] = masked_is_left
                            ? merge_entry(tensor, bank, c, sib_cat, par_cat)
                            : merge_entry(tensor, bank, sib_cat, c, par_cat);
  }

  std::vector<double> weights(vocab, 0.0);
  double total = 0.0;
  if (query.category_free) {
    for (int w = 0; w < bank.num_words(); ++w) {
      double s = 0.0;
      for (int c = 0; c < ncat; ++c)
        s += bank.lexical.prob(w, c) * merge_factor[c];
      weights[w] = s;
      total += s;
    }
  } else {
    const int c = bank.grammar.category_of(tree.node(leaf_id).category);
    for (int w = 0; w < bank.num_words(); ++w) {
      weights[w] = bank.lexical.prob(w, c) * merge_factor[c];
      total += weights[w];
    }
  }
  if (total > 0.0)
    for (double& v : weights) v /= total;
  return weights;
}

double perplexity(std::span<const double> dist) {
  double sum = 0.0;
  for (double v : dist) {
    if (v < 0.0) throw NotADistribution("negative probability entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw NotADistribution("entries sum to " + std::to_string(sum));
  double h = 0.0;
  for (double v : dist) {
    const double q = v / sum;
    if (q > 0.0) h -= q * std::log2(q);
  }
  return std::exp2(h);
}

std::vector<std::vector<int>> sample(const ParseTree& shape,
                                     const MergeTensorBank& bank, int count,
                                     std::uint64_t seed, int jobs) {
  const int ncat = bank.num_categories();
  const int vocab = bank.grammar.vocab_size();
  const auto inside = inside_messages(shape, bank);
  const auto tensors = resolve_tensors(shape, bank);
  double z = 0.0;
  for (double v : inside[shape.root()]) z += v;
  if (!(z > 0.0)) throw ZeroPartition("sample: partition function is zero");

  const auto leaves = shape.leaves_in_order();
  std::vector<int> leaf_pos_of(shape.size(), -1);
  for (std::size_t pos = 0; pos < leaves.size(); ++pos)
    leaf_pos_of[leaves[pos]] = static_cast<int>(pos);

  const int n = shape.leaf_count();
  std::vector<std::vector<int>> out(count, std::vector<int>(n, -1));

  auto draw_one = [&](int index) {
    Rng rng(derive_stream_seed(seed, static_cast<std::uint64_t>(index)));
    std::vector<int> node_cat(shape.size(), -1);
    const auto& mroot = inside[shape.root()];
    node_cat[shape.root()] = sample_index(mroot, z, rng);
    // Pre-order walk; parents are assigned before children.
    std::vector<int> stack{shape.root()};
    std::vector<double> pair_w(static_cast<std::size_t>(ncat) * ncat);
    while (!stack.empty()) {
      int i = stack.back();
      stack.pop_back();
      const TreeNode& nd = shape.node(i);
      if (nd.is_leaf()) {
        const int c = node_cat[i];
        std::vector<double> w(bank.num_words());
        double tot = 0.0;
        for (int wi = 0; wi < bank.num_words(); ++wi) {
          w[wi] = bank.lexical.prob(wi, c);
          tot += w[wi];
        }
        out[index][leaf_pos_of[i]] = sample_index(w, tot, rng);
        continue;
      }
      const int g = node_cat[i];
      const auto& ml = inside[nd.left()];
      const auto& mr = inside[nd.right()];
      double tot = 0.0;
      for (int a = 0; a < ncat; ++a)
        for (int b = 0; b < ncat; ++b) {
          const double w =
              merge_entry(tensors[i], bank, a, b, g) * ml[a] * mr[b];
          pair_w[static_cast<std::size_t>(a) * ncat + b] = w;
          tot += w;
        }
      const int ab = sample_index(pair_w, tot, rng);
      node_cat[nd.left()] = ab / ncat;
      node_cat[nd.right()] = ab % ncat;
      stack.push_back(nd.right());
      stack.push_back(nd.left());
    }
  };

#ifdef _OPENMP
  if (jobs != 1) {
    const int threads = jobs <= 0 ? omp_get_max_threads() : jobs;
#pragma omp parallel for schedule(static) num_threads(threads)
    for (int i = 0; i < count; ++i) draw_one(i);
    return out;
  }
#else
  (void)jobs;
#endif
  for (int i = 0; i < count; ++i) draw_one(i);
  return out;
}

UnigramTable estimate_unigram(std::span<const ParseTree> corpus) {
  if (corpus.empty()) throw EmptyCorpus("estimate_unigram: empty corpus");
  UnigramTable table;
  std::uint64_t total = 0;
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const ParseTree& t : corpus)
    for (const std::string& w : t.words()) {
      ++counts[w];
      ++total;
    }
  for (auto& [w, c] : counts)
    table.prob[w] = static_cast<double>(c) / static_cast<double>(total);
  return table;
}

double onegram_logprob(std::span<const std::string> words,
                       const UnigramTable& table) {
  double logp = 0.0;
  for (const std::string& w : words) {
    auto it = table.prob.find(w);
    if (it == table.prob.end()) throw UnknownWord("unknown word: " + w);
    if (it->second <= 0.0) return kNegInf;
    logp += std::log(it->second);
  }
  return logp;
}

double rough_perplexity_bound(int n, const MergeTensorBank& bank) {
  if (bank.tensors.empty() && bank.lexical.p.empty())
    throw EmptyCorpus("rough_perplexity_bound: empty bank");
  double pmax = 0.0;
  for (const auto& [key, tensor] : bank.tensors)
    for (double v : tensor.p) pmax = std::max(pmax, v);
  for (double v : bank.lexical.p) pmax = std::max(pmax, v);
  if (pmax <= 0.0) return std::numeric_limits<double>::infinity();
  return std::pow(1.0 / pmax, n - 1);
}

}  // namespace stnlm
