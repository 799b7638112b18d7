#include "stnlm/treebank.hpp"

#include <algorithm>
#include <cctype>

namespace stnlm {

int ParseTree::add_leaf(std::string category, std::string word) {
  TreeNode n;
  n.category = std::move(category);
  n.word = std::move(word);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int ParseTree::add_internal(std::string category, std::vector<int> children) {
  TreeNode n;
  n.category = std::move(category);
  n.children = std::move(children);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int ParseTree::add_internal(std::string category, int left, int right) {
  return add_internal(std::move(category), std::vector<int>{left, right});
}

void ParseTree::set_root(int root) { root_ = root; }

int ParseTree::leaf_count() const {
  int c = 0;
  for (const auto& n : nodes_)
    if (n.is_leaf()) ++c;
  return c;
}

bool ParseTree::is_binary() const {
  for (const auto& n : nodes_)
    if (!n.is_leaf() && n.children.size() != 2) return false;
  return true;
}

std::vector<int> ParseTree::leaves_in_order() const {
  std::vector<int> out;
  out.reserve(nodes_.size());
  std::vector<int> stack;
  if (root_ >= 0) stack.push_back(root_);
  while (!stack.empty()) {
    int i = stack.back();
    stack.pop_back();
    const TreeNode& n = nodes_[i];
    if (n.is_leaf()) {
      out.push_back(i);
    } else {
      for (auto it = n.children.rbegin(); it != n.children.rend(); ++it)
        stack.push_back(*it);
    }
  }
  return out;
}

std::vector<std::string> ParseTree::words() const {
  std::vector<std::string> out;
  for (int i : leaves_in_order()) out.push_back(nodes_[i].word);
  return out;
}

void ParseTree::assign_coords() {
  if (root_ < 0) return;
  // Post-order: children before parents.
  std::vector<int> order;
  order.reserve(nodes_.size());
  std::vector<int> stack{root_};
  while (!stack.empty()) {
    int i = stack.back();
    stack.pop_back();
    order.push_back(i);
    for (int c : nodes_[i].children) stack.push_back(c);
  }
  std::reverse(order.begin(), order.end());
  int next_leaf = 0;
  for (int i : order) {
    TreeNode& n = nodes_[i];
    if (n.is_leaf()) {
      n.coord.z = 1;
      n.coord.t = next_leaf++;
    } else {
      int zmax = 0;
      for (int c : n.children) zmax = std::max(zmax, nodes_[c].coord.z);
      n.coord.z = 1 + zmax;
      n.coord.t = nodes_[n.children.front()].coord.t;
    }
  }
}

int Grammar::add_category(const std::string& label) {
  auto it = category_index.find(label);
  if (it != category_index.end()) return it->second;
  int id = static_cast<int>(categories.size());
  categories.push_back(label);
  category_index.emplace(label, id);
  return id;
}

int Grammar::add_word(const std::string& word) {
  auto it = word_index.find(word);
  if (it != word_index.end()) return it->second;
  int id = static_cast<int>(words.size());
  words.push_back(word);
  word_index.emplace(word, id);
  return id;
}

int Grammar::category_of(const std::string& label) const {
  auto it = category_index.find(label);
  if (it == category_index.end())
    throw UnknownCategory("unknown category: " + label);
  return it->second;
}

int Grammar::word_of(const std::string& word) const {
  auto it = word_index.find(word);
  if (it == word_index.end()) throw UnknownWord("unknown word: " + word);
  return it->second;
}

int Grammar::find_word(const std::string& word) const {
  auto it = word_index.find(word);
  return it == word_index.end() ? -1 : it->second;
}

Grammar Grammar::from_corpus(std::span<const ParseTree> corpus,
                             std::string unk_token) {
  Grammar g;
  g.unk_token = std::move(unk_token);
  for (const ParseTree& t : corpus) {
    for (int i = 0; i < t.size(); ++i) {
      const TreeNode& n = t.node(i);
      g.add_category(n.category);
      if (n.is_leaf()) g.add_word(n.word);
    }
  }
  g.add_word(g.unk_token);
  return g;
}

namespace {

struct RawNode {
  std::string label;
  std::string word;  // non-empty iff leaf
  std::vector<RawNode> children;
  bool is_leaf() const { return children.empty(); }
};

bool is_trace_token(std::string_view tok) {
  if (tok.size() >= 2 && tok.front() == '<' && tok.back() == '>') return true;
  return tok.find("*T*") != std::string_view::npos;
}

std::string strip_label(std::string_view raw) {
  // Function tags / indices after '-' or '=' are dropped (NP-SBJ -> NP);
  // a leading separator is kept so labels like -NONE- survive intact.
  std::size_t cut = raw.npos;
  for (std::size_t i = 1; i < raw.size(); ++i) {
    if (raw[i] == '-' || raw[i] == '=') {
      cut = i;
      break;
    }
  }
  return std::string(raw.substr(0, cut));
}

class BracketParser {
 public:
  explicit BracketParser(std::string_view text, std::size_t base)
      : text_(text), base_(base) {}

  std::vector<RawNode> parse_all() {
    std::vector<RawNode> out;
    for (;;) {
      skip_ws();
      if (pos_ >= text_.size()) break;
      if (text_[pos_] != '(')
        throw UnbalancedBrackets("unexpected token at byte " +
                                 std::to_string(base_ + pos_));
      out.push_back(parse_node());
    }
    return out;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  std::string next_token() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '(' || c == ')' || std::isspace(static_cast<unsigned char>(c)))
        break;
      ++pos_;
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  RawNode parse_node() {
    const std::size_t open_pos = base_ + pos_;
    ++pos_;  // consume '('
    RawNode node;
    node.label = strip_label(next_token());
    if (node.label.empty())
      throw EmptyNode("node without label at byte " + std::to_string(open_pos));
    std::vector<std::string> words;
    for (;;) {
      skip_ws();
      if (pos_ >= text_.size())
        throw UnbalancedBrackets("unclosed bracket opened at byte " +
                                 std::to_string(open_pos));
      char c = text_[pos_];
      if (c == ')') {
        ++pos_;
        break;
      }
      if (c == '(') {
        node.children.push_back(parse_node());
      } else {
        std::string tok = next_token();
        if (is_trace_token(tok))
          throw TraceToken("trace token '" + tok +
                           "' (long-range chains are unsupported)");
        words.push_back(std::move(tok));
      }
    }
    if (words.empty() && node.children.empty())
      throw EmptyNode("empty node at byte " + std::to_string(open_pos));
    if (words.size() == 1 && node.children.empty()) {
      node.word = std::move(words.front());
      return node;
    }
    // Several words, or words mixed with children: each word becomes its
    // own leaf child tagged with the parent label.
    for (std::string& w : words) {
      RawNode leaf;
      leaf.label = node.label;
      leaf.word = std::move(w);
      node.children.push_back(std::move(leaf));
    }
    return node;
  }

  std::string_view text_;
  std::size_t base_;
  std::size_t pos_ = 0;
};

// Collapses unary chains onto the lower node; counts discarded labels.
RawNode collapse_unary(RawNode node, int* collapsed) {
  while (node.children.size() == 1) {
    RawNode child = std::move(node.children.front());
    ++*collapsed;
    node = std::move(child);
  }
  std::vector<RawNode> kids = std::move(node.children);
  node.children.clear();
  for (RawNode& c : kids)
    node.children.push_back(collapse_unary(std::move(c), collapsed));
  return node;
}

int build_tree(const RawNode& raw, ParseTree& tree, bool allow_nary) {
  if (raw.is_leaf()) return tree.add_leaf(raw.label, raw.word);
  const int k = static_cast<int>(raw.children.size());
  if (k != 2 && !allow_nary)
    throw NonBinaryNode("node '" + raw.label + "' has " + std::to_string(k) +
                        " children");
  std::vector<int> kids;
  kids.reserve(raw.children.size());
  for (const RawNode& c : raw.children)
    kids.push_back(build_tree(c, tree, allow_nary));
  return tree.add_internal(raw.label, std::move(kids));
}

}  // namespace

std::vector<ParseTree> parse_bracketed(std::string_view text,
                                       const ParseOptions& options,
                                       ParseStats* stats) {
  ParseStats local;
  ParseStats* st = stats ? stats : &local;

  // Top-level groups are located first so --skip-traces drops exactly the
  // offending sentence.
  std::vector<std::pair<std::size_t, std::size_t>> groups;
  {
    int depth = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
      char c = text[i];
      if (c == '(') {
        if (depth == 0) start = i;
        ++depth;
      } else if (c == ')') {
        if (depth == 0)
          throw UnbalancedBrackets("stray ')' at byte " + std::to_string(i));
        if (--depth == 0) groups.emplace_back(start, i + 1);
      } else if (depth == 0 && !std::isspace(static_cast<unsigned char>(c))) {
        throw UnbalancedBrackets("text outside brackets at byte " +
                                 std::to_string(i));
      }
    }
    if (depth != 0) throw UnbalancedBrackets("unclosed bracket at end of input");
  }

  std::vector<ParseTree> out;
  for (auto [lo, hi] : groups) {
    std::vector<RawNode> raw;
    try {
      raw = BracketParser(text.substr(lo, hi - lo), lo).parse_all();
    } catch (const TraceToken&) {
      if (options.skip_traces) {
        ++st->skipped_sentences;
        continue;
      }
      throw;
    }
    for (RawNode& r : raw) {
      r = collapse_unary(std::move(r), &st->collapsed_unary);
      ParseTree tree;
      tree.set_root(build_tree(r, tree, options.binarize));
      if (options.binarize && !tree.is_binary())
        tree = binarize(tree, options.policy);
      tree.assign_coords();
      out.push_back(std::move(tree));
    }
  }
  return out;
}

namespace {

int binarize_node(const ParseTree& src, int i, ParseTree& dst,
                  BinarizePolicy policy) {
  const TreeNode& n = src.node(i);
  if (n.is_leaf()) return dst.add_leaf(n.category, n.word);
  std::vector<int> kids;
  kids.reserve(n.children.size());
  for (int c : n.children) kids.push_back(binarize_node(src, c, dst, policy));
  const int k = static_cast<int>(kids.size());
  if (k == 1) return kids[0];
  if (k == 2) return dst.add_internal(n.category, kids[0], kids[1]);
  const std::string inner = n.category + "'";
  if (policy == BinarizePolicy::left) {
    int acc = dst.add_internal(inner, kids[0], kids[1]);
    for (int j = 2; j < k; ++j)
      acc = dst.add_internal(j == k - 1 ? n.category : inner, acc, kids[j]);
    return acc;
  }
  int acc = dst.add_internal(inner, kids[k - 2], kids[k - 1]);
  for (int j = k - 3; j >= 0; --j)
    acc = dst.add_internal(j == 0 ? n.category : inner, kids[j], acc);
  return acc;
}

}  // namespace

ParseTree binarize(const ParseTree& tree, BinarizePolicy policy) {
  ParseTree out;
  out.set_root(binarize_node(tree, tree.root(), out, policy));
  out.assign_coords();
  return out;
}

namespace {

void shape_of(const ParseTree& t, int i, std::string& out) {
  const TreeNode& n = t.node(i);
  if (n.is_leaf()) {
    out.push_back('.');
    return;
  }
  out.push_back('(');
  for (int c : n.children) shape_of(t, c, out);
  out.push_back(')');
}

void bracket_of(const ParseTree& t, int i, std::string& out) {
  const TreeNode& n = t.node(i);
  out.push_back('(');
  out += n.category;
  if (n.is_leaf()) {
    out.push_back(' ');
    out += n.word;
  } else {
    for (int c : n.children) {
      out.push_back(' ');
      bracket_of(t, c, out);
    }
  }
  out.push_back(')');
}

}  // namespace

std::string tree_shape(const ParseTree& tree) {
  std::string out;
  shape_of(tree, tree.root(), out);
  return out;
}

std::string to_bracketed(const ParseTree& tree) {
  std::string out;
  bracket_of(tree, tree.root(), out);
  return out;
}

BigInt catalan_count(int n) {
  if (n < 1) throw IndexOutOfRange("catalan_count requires n >= 1");
  // (2(n-1))! / (n! (n-1)!) via the exact recurrence
  // C_0 = 1, C_k = C_{k-1} * 2(2k-1) / (k+1).
  BigInt c = 1;
  for (int k = 1; k <= n - 1; ++k) {
    c *= 2 * (2 * k - 1);
    c /= k + 1;
  }
  return c;
}

namespace {

void enumerate_into(int n, std::vector<std::vector<std::string>>& memo) {
  if (!memo[n].empty()) return;
  if (n == 1) {
    memo[1] = {"."};
    return;
  }
  std::vector<std::string> out;
  for (int k = 1; k < n; ++k) {
    enumerate_into(k, memo);
    enumerate_into(n - k, memo);
    for (const std::string& l : memo[k])
      for (const std::string& r : memo[n - k]) out.push_back("(" + l + r + ")");
  }
  memo[n] = std::move(out);
}

}  // namespace

std::vector<std::string> enumerate_shapes(int n) {
  if (n < 1) throw IndexOutOfRange("enumerate_shapes requires n >= 1");
  if (n > 14)
    throw LimitExceeded("enumerate_shapes: n = " + std::to_string(n) +
                        " exceeds the n <= 14 guard");
  std::vector<std::vector<std::string>> memo(n + 1);
  enumerate_into(n, memo);
  return memo[n];
}

namespace {

int shape_node(std::string_view s, std::size_t& pos, ParseTree& tree) {
  if (pos >= s.size()) throw UnbalancedBrackets("shape string ended early");
  char c = s[pos];
  if (c == '.') {
    ++pos;
    return tree.add_leaf("", "");
  }
  if (c != '(')
    throw UnbalancedBrackets("unexpected character in shape string at " +
                             std::to_string(pos));
  ++pos;
  int l = shape_node(s, pos, tree);
  int r = shape_node(s, pos, tree);
  if (pos >= s.size() || s[pos] != ')')
    throw UnbalancedBrackets("expected ')' in shape string at " +
                             std::to_string(pos));
  ++pos;
  return tree.add_internal("", l, r);
}

}  // namespace

ParseTree tree_from_shape(std::string_view shape) {
  ParseTree tree;
  std::size_t pos = 0;
  int root = shape_node(shape, pos, tree);
  if (pos != shape.size())
    throw UnbalancedBrackets("trailing characters in shape string");
  tree.set_root(root);
  tree.assign_coords();
  return tree;
}

}  // namespace stnlm
