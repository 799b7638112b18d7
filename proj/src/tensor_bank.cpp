#include "stnlm/tensor_bank.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace stnlm {

double MergeTensor::sum() const {
  double s = 0.0;
  for (double v : p) s += v;
  return s;
}

bool MergeTensor::is_diagonal() const {
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      int support = 0;
      for (int g = 0; g < n; ++g)
        if (prob(a, b, g) != 0.0) ++support;
      if (support > 1) return false;
    }
  return true;
}

std::vector<double> residual(const MergeTensor& tensor, unsigned keep) {
  const int n = tensor.n;
  std::size_t size = 1;
  for (unsigned bit : {kAlpha, kBeta, kGamma})
    if (keep & bit) size *= n;
  std::vector<double> out(size, 0.0);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int g = 0; g < n; ++g) {
        std::size_t pos = 0;
        if (keep & kAlpha) pos = pos * n + a;
        if (keep & kBeta) pos = pos * n + b;
        if (keep & kGamma) pos = pos * n + g;
        out[pos] += tensor.prob(a, b, g);
      }
  return out;
}

std::vector<double> LexicalMatrix::column_mass() const {
  std::vector<double> out(ncat, 0.0);
  for (int w = 0; w < vocab; ++w)
    for (int cat = 0; cat < ncat; ++cat) out[cat] += prob(w, cat);
  return out;
}

std::string TensorKey::encode(int level, const std::string& shape, int z,
                              int t) {
  switch (level) {
    case 1:
      return "-";
    case 2:
      return std::to_string(z);
    case 3:
      return std::to_string(z) + ":" + std::to_string(t);
    case 4:
      return shape + "|" + std::to_string(z) + ":" + std::to_string(t);
    default:
      throw IndexOutOfRange("bad refinement level " + std::to_string(level));
  }
}

TensorKey TensorKey::decode(int level, const std::string& text) {
  TensorKey k;
  std::string rest = text;
  if (level == 4) {
    auto bar = text.rfind('|');
    if (bar == std::string::npos)
      throw FormatVersionMismatch("level-4 key without shape: " + text);
    k.shape = text.substr(0, bar);
    rest = text.substr(bar + 1);
  }
  if (level == 1) return k;
  auto colon = rest.find(':');
  if (level == 2) {
    k.z = std::stoi(rest);
  } else {
    if (colon == std::string::npos)
      throw FormatVersionMismatch("bad key: " + text);
    k.z = std::stoi(rest.substr(0, colon));
    k.t = std::stoi(rest.substr(colon + 1));
  }
  return k;
}

std::string MergeTensorBank::key_for(const std::string& shape, int z,
                                     int t) const {
  if (level == 4 && !shape.empty()) {
    // Unseen whole-tree shapes have no level-4 tensors at all; per the
    // format there is no back-off, so this is a hard error.
    const std::string probe = shape + "|";
    auto it = tensors.lower_bound(probe);
    if (it == tensors.end() || it->first.compare(0, probe.size(), probe) != 0)
      throw UnknownShape("no level-4 tensors for shape " + shape);
  }
  return TensorKey::encode(level, shape, z, t);
}

double MergeTensorBank::merge_prob(const std::string& shape, int z, int t,
                                   int alpha, int beta, int gamma) const {
  const int n = num_categories();
  if (alpha < 0 || alpha >= n || beta < 0 || beta >= n || gamma < 0 ||
      gamma >= n)
    throw UnknownCategory("category index out of range");
  const MergeTensor* tensor = find(key_for(shape, z, t));
  if (tensor == nullptr) {
    if (lambda == 0.0) return 0.0;
    return 1.0 / (static_cast<double>(n) * n * n);  // empty key, smoothed
  }
  return tensor->prob(alpha, beta, gamma);
}

double MergeTensorBank::merge_prob_named(const std::string& shape, int z,
                                         int t, const std::string& alpha,
                                         const std::string& beta,
                                         const std::string& gamma) const {
  return merge_prob(shape, z, t, grammar.category_of(alpha),
                    grammar.category_of(beta), grammar.category_of(gamma));
}

namespace {

struct CountMaps {
  std::map<std::string, std::map<std::tuple<int, int, int>, std::uint64_t>>
      merge;
  std::map<std::pair<int, int>, std::uint64_t> lexical;

  void absorb(CountMaps&& other) {
    for (auto& [key, triples] : other.merge) {
      auto& dst = merge[key];
      for (auto& [t, c] : triples) dst[t] += c;
    }
    for (auto& [wc, c] : other.lexical) lexical[wc] += c;
  }
};

CountMaps count_tree(const ParseTree& tree, int level,
                     const Grammar& grammar) {
  CountMaps out;
  const std::string shape = level == 4 ? tree_shape(tree) : std::string();
  for (int i = 0; i < tree.size(); ++i) {
    const TreeNode& node = tree.node(i);
    if (node.is_leaf()) {
      out.lexical[{grammar.word_of(node.word),
                   grammar.category_of(node.category)}] += 1;
      continue;
    }
    const std::string key =
        TensorKey::encode(level, shape, node.coord.z, node.coord.t);
    const int a = grammar.category_of(tree.node(node.left()).category);
    const int b = grammar.category_of(tree.node(node.right()).category);
    const int g = grammar.category_of(node.category);
    out.merge[key][{a, b, g}] += 1;
  }
  return out;
}

int resolve_jobs(int jobs) {
#ifdef _OPENMP
  if (jobs <= 0) return omp_get_max_threads();
  return jobs;
#else
  (void)jobs;
  return 1;
#endif
}

}  // namespace

MergeTensorBank estimate(std::span<const ParseTree> corpus, int level,
                         const EstimateOptions& options) {
  if (corpus.empty()) throw EmptyCorpus("estimate: empty corpus");
  if (level < 1 || level > 4)
    throw IndexOutOfRange("estimate: level must be 1..4");
  for (const ParseTree& t : corpus)
    if (!t.is_binary())
      throw NonBinaryTree("estimate: corpus contains a non-binary tree");

  MergeTensorBank bank;
  bank.level = level;
  bank.lambda = options.lambda;
  bank.grammar = Grammar::from_corpus(corpus, options.unk_token);
  const Grammar& grammar = bank.grammar;
  const int ncat = grammar.num_categories();
  const int vocab = grammar.vocab_size();

  // Per-sentence counting is independent; chunks merge in index order so the
  // result does not depend on the schedule.
  const int jobs = resolve_jobs(options.jobs);
  const int m = static_cast<int>(corpus.size());
  CountMaps counts;
  if (jobs <= 1 || m < 2) {
    for (const ParseTree& t : corpus)
      counts.absorb(count_tree(t, level, grammar));
  } else {
    const int chunks = std::min(m, jobs * 4);
    std::vector<CountMaps> partial(chunks);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
#endif
    for (int c = 0; c < chunks; ++c) {
      const int lo = static_cast<int>(static_cast<long long>(m) * c / chunks);
      const int hi =
          static_cast<int>(static_cast<long long>(m) * (c + 1) / chunks);
      for (int i = lo; i < hi; ++i)
        partial[c].absorb(count_tree(corpus[i], level, grammar));
    }
    for (CountMaps& c : partial) counts.absorb(std::move(c));
  }

  const double lambda = options.lambda;
  const double cube = static_cast<double>(ncat) * ncat * ncat;
  bool deterministic = lambda == 0.0;
  for (auto& [key, triples] : counts.merge) {
    MergeTensor tensor(ncat);
    std::uint64_t total = 0;
    for (auto& [t, c] : triples) total += c;
    const double denom = static_cast<double>(total) + lambda * cube;
    if (lambda == 0.0) {
      for (auto& [t, c] : triples) {
        auto [a, b, g] = t;
        tensor.count(a, b, g) = c;
        tensor.prob(a, b, g) = static_cast<double>(c) / denom;
      }
    } else {
      for (int a = 0; a < ncat; ++a)
        for (int b = 0; b < ncat; ++b)
          for (int g = 0; g < ncat; ++g)
            tensor.prob(a, b, g) = lambda / denom;
      for (auto& [t, c] : triples) {
        auto [a, b, g] = t;
        tensor.count(a, b, g) = c;
        tensor.prob(a, b, g) = (static_cast<double>(c) + lambda) / denom;
      }
    }
    if (deterministic && !tensor.is_diagonal()) deterministic = false;
    bank.tensors.emplace(key, std::move(tensor));
  }
  bank.deterministic = deterministic;

  bank.lexical = LexicalMatrix(vocab, ncat);
  std::vector<std::uint64_t> word_total(vocab, 0);
  for (auto& [wc, c] : counts.lexical) {
    bank.lexical.count(wc.first, wc.second) += c;
    word_total[wc.first] += c;
  }
  // The reserved unk row pools hapax legomena (count-1 words).
  const int unk = grammar.word_of(grammar.unk_token);
  for (int w = 0; w < vocab; ++w) {
    if (w == unk || word_total[w] != 1) continue;
    for (int cat = 0; cat < ncat; ++cat) {
      bank.lexical.count(unk, cat) += bank.lexical.count(w, cat);
      word_total[unk] += bank.lexical.count(w, cat);
    }
  }
  for (int w = 0; w < vocab; ++w) {
    if (word_total[w] == 0) continue;
    for (int cat = 0; cat < ncat; ++cat)
      bank.lexical.prob(w, cat) =
          static_cast<double>(bank.lexical.count(w, cat)) /
          static_cast<double>(word_total[w]);
  }
  return bank;
}

ValidationReport validate(const MergeTensorBank& bank) {
  ValidationReport report;
  const double kNormTol = 1e-9;
  for (const auto& [key, tensor] : bank.tensors) {
    double sum = 0.0;
    for (int a = 0; a < tensor.n; ++a)
      for (int b = 0; b < tensor.n; ++b) {
        int support = 0;
        for (int g = 0; g < tensor.n; ++g) {
          const double v = tensor.prob(a, b, g);
          sum += v;
          if (v != 0.0) ++support;
          if (v < 0.0)
            report.issues.push_back(
                {ValidationIssue::Kind::negativity, key, a, b, g, v,
                 "negative entry"});
        }
        if (bank.deterministic && support > 1)
          report.issues.push_back({ValidationIssue::Kind::determinism, key, a,
                                   b, -1, static_cast<double>(support),
                                   "pair maps to multiple outputs"});
      }
    if (std::abs(sum - 1.0) > kNormTol)
      report.issues.push_back({ValidationIssue::Kind::normalization, key, -1,
                               -1, -1, sum, "tensor sum drifts from 1"});
  }
  for (int w = 0; w < bank.lexical.vocab; ++w) {
    double row = 0.0;
    bool seen = false;
    for (int cat = 0; cat < bank.lexical.ncat; ++cat) {
      const double v = bank.lexical.prob(w, cat);
      row += v;
      if (bank.lexical.count(w, cat) > 0) seen = true;
      if (v < 0.0)
        report.issues.push_back({ValidationIssue::Kind::negativity, "lex", w,
                                 cat, -1, v, "negative lexical entry"});
    }
    if (seen && std::abs(row - 1.0) > kNormTol)
      report.issues.push_back({ValidationIssue::Kind::lexical_row, "lex", w,
                               -1, -1, row, "lexical row drifts from 1"});
  }
  return report;
}

}  // namespace stnlm
