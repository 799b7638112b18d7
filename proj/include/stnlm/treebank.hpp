#ifndef STNLM_TREEBANK_HPP
#define STNLM_TREEBANK_HPP

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "stnlm/errors.hpp"

namespace stnlm {

using BigInt = boost::multiprecision::cpp_int;

// Node coordinates in the <z,t> plane: z counts levels from the leaves
// (z = 1 at a leaf) upward, t is the 0-based leftmost leaf index of the
// node's span.
struct Coord {
  int z = 1;
  int t = 0;
};

struct TreeNode {
  std::string category;
  std::string word;           // leaves only
  std::vector<int> children;  // empty iff leaf; binary trees have 2
  Coord coord;
  bool is_leaf() const { return children.empty(); }
  int left() const { return children[0]; }
  int right() const { return children[1]; }
};

// Rooted tree stored as a node arena. Trees coming out of the parser are
// strictly binary; k-ary nodes exist only as inputs to binarize().
class ParseTree {
 public:
  ParseTree() = default;

  int add_leaf(std::string category, std::string word);
  int add_internal(std::string category, std::vector<int> children);
  int add_internal(std::string category, int left, int right);
  void set_root(int root);

  int root() const { return root_; }
  const TreeNode& node(int i) const { return nodes_[i]; }
  TreeNode& mutable_node(int i) { return nodes_[i]; }
  int size() const { return static_cast<int>(nodes_.size()); }
  bool empty() const { return nodes_.empty(); }

  int leaf_count() const;
  int internal_count() const { return size() - leaf_count(); }
  bool is_binary() const;

  // Leaf arena indices in sentence order.
  std::vector<int> leaves_in_order() const;
  std::vector<std::string> words() const;

  // Recomputes every node's <z,t> coordinate from the structure.
  void assign_coords();

 private:
  std::vector<TreeNode> nodes_;
  int root_ = -1;
};

struct Grammar {
  std::vector<std::string> categories;
  std::vector<std::string> words;
  std::string unk_token = "<unk>";

  std::unordered_map<std::string, int> category_index;
  std::unordered_map<std::string, int> word_index;

  int add_category(const std::string& label);
  int add_word(const std::string& word);
  int category_of(const std::string& label) const;  // throws UnknownCategory
  int word_of(const std::string& word) const;       // throws UnknownWord
  int find_word(const std::string& word) const;     // -1 when absent
  int num_categories() const { return static_cast<int>(categories.size()); }
  int vocab_size() const { return static_cast<int>(words.size()); }

  // First-encounter order over the corpus; unk_token registered last.
  static Grammar from_corpus(std::span<const ParseTree> corpus,
                             std::string unk_token = "<unk>");
};

enum class BinarizePolicy { left, right };

struct ParseOptions {
  bool binarize = false;
  BinarizePolicy policy = BinarizePolicy::left;
  // Drop the whole sentence on a trace token instead of throwing.
  bool skip_traces = false;
};

struct ParseStats {
  int collapsed_unary = 0;  // unary levels discarded
  int skipped_sentences = 0;
};

// Reads whitespace-separated bracketed trees: `(LABEL child child)` internal,
// `(LABEL word)` leaf. Function tags after `-` or `=` are stripped from
// labels; unary chains are collapsed onto the lower node.
std::vector<ParseTree> parse_bracketed(std::string_view text,
                                       const ParseOptions& options = {},
                                       ParseStats* stats = nullptr);

// k-ary nodes become nested chains of binary nodes labeled `L'`.
ParseTree binarize(const ParseTree& tree, BinarizePolicy policy);

// Canonical shape string with labels erased: leaf ".", internal "(LR)".
std::string tree_shape(const ParseTree& tree);

// Number of binary tree shapes over n leaves: (2(n-1))! / (n! (n-1)!).
BigInt catalan_count(int n);

// All shapes over n leaves; n <= 14 guarded by LimitExceeded.
std::vector<std::string> enumerate_shapes(int n);

// Structure-only tree from a shape string (labels empty, words empty).
ParseTree tree_from_shape(std::string_view shape);

// Round trip back to bracketed text, one line per tree.
std::string to_bracketed(const ParseTree& tree);

}  // namespace stnlm

#endif
