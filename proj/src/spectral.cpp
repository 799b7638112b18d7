#include "stnlm/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <Eigen/Dense>

#include "stnlm/prob_model.hpp"

namespace stnlm {

std::map<std::string, AmplitudeTensor> amplitudes(const MergeTensorBank& bank) {
  std::map<std::string, AmplitudeTensor> out;
  for (const auto& [key, tensor] : bank.tensors) {
    AmplitudeTensor amp;
    amp.n = tensor.n;
    amp.a.resize(tensor.p.size());
    for (std::size_t i = 0; i < tensor.p.size(); ++i)
      amp.a[i] = std::sqrt(tensor.p[i]);
    out.emplace(key, std::move(amp));
  }
  return out;
}

double IsometricNetwork::omega_norm2() const {
  double s = 0.0;
  for (double v : omega) s += v * v;
  return s;
}

namespace {

// sqrt of the lexical conditional matrix, vocab x N_l.
Mat lexical_amplitude(const MergeTensorBank& bank) {
  Mat e(bank.num_words(), bank.lexical.ncat);
  for (int w = 0; w < e.rows; ++w)
    for (int c = 0; c < bank.lexical.ncat; ++c)
      e(w, c) = std::sqrt(bank.lexical.prob(w, c));
  return e;
}

// Amplitude entry of the node tensor, honoring smoothing for unseen keys.
double amp_entry(const AmplitudeTensor* amp, const MergeTensorBank& bank,
                 int a, int b, int g) {
  if (amp != nullptr) return amp->at(a, b, g);
  if (bank.lambda == 0.0) return 0.0;
  const double n = bank.num_categories();
  return std::sqrt(1.0 / (n * n * n));
}

std::vector<int> post_order_internal(const ParseTree& tree) {
  std::vector<int> order;
  std::vector<int> stack{tree.root()};
  while (!stack.empty()) {
    int i = stack.back();
    stack.pop_back();
    order.push_back(i);
    for (int c : tree.node(i).children) stack.push_back(c);
  }
  std::reverse(order.begin(), order.end());
  std::vector<int> internal;
  for (int i : order)
    if (!tree.node(i).is_leaf()) internal.push_back(i);
  return internal;
}

int next_pow2(int v) {
  int p = 1;
  while (p < v) p *= 2;
  return p;
}

}  // namespace

IsometricNetwork isometrize(const ParseTree& shape,
                            const MergeTensorBank& bank) {
  IsometricNetwork net;
  net.shape = tree_shape(shape);
  net.nleaves = shape.leaf_count();
  net.ncat = bank.num_categories();
  net.vocab = bank.num_words();
  const int ncat = net.ncat;

  const Mat lex = lexical_amplitude(bank);
  const auto amps = amplitudes(bank);
  const std::string l4shape = bank.level == 4 ? net.shape : std::string();

  if (shape.leaf_count() == 1) {
    // Degenerate single-word tree: the lexical amplitude is the whole
    // network; its column sums form the top residue.
    net.omega.assign(net.vocab, 0.0);
    for (int w = 0; w < net.vocab; ++w) {
      double s = 0.0;
      for (int c = 0; c < ncat; ++c) s += lex(w, c);
      net.omega[w] = s;
    }
    return net;
  }

  // R factor flowing up from each node (its parent-leg transform).
  std::vector<Mat> upward(shape.size());
  for (int i = 0; i < shape.size(); ++i)
    if (shape.node(i).is_leaf()) upward[i] = lex;

  const auto order = post_order_internal(shape);
  for (int i : order) {
    const TreeNode& nd = shape.node(i);
    const Mat& cl = upward[nd.left()];
    const Mat& cr = upward[nd.right()];
    const AmplitudeTensor* amp = [&]() -> const AmplitudeTensor* {
      auto it = amps.find(bank.key_for(l4shape, nd.coord.z, nd.coord.t));
      return it == amps.end() ? nullptr : &it->second;
    }();

    const int dl = cl.rows;
    const int dr = cr.rows;
    // T((a,b), g) = sum_{alpha,beta} CL(a,alpha) CR(b,beta) A(alpha,beta,g)
    Mat t(dl * dr, ncat);
    for (int alpha = 0; alpha < ncat; ++alpha)
      for (int beta = 0; beta < ncat; ++beta) {
        // skip fully zero columns early
        bool any = false;
        for (int g = 0; g < ncat && !any; ++g)
          any = amp_entry(amp, bank, alpha, beta, g) != 0.0;
        if (!any) continue;
        for (int a = 0; a < dl; ++a) {
          const double la = cl(a, alpha);
          if (la == 0.0) continue;
          for (int b = 0; b < dr; ++b) {
            const double w = la * cr(b, beta);
            if (w == 0.0) continue;
            for (int g = 0; g < ncat; ++g)
              t(a * dr + b, g) += w * amp_entry(amp, bank, alpha, beta, g);
          }
        }
      }

    QrResult qr = thin_qr(t);
    if (!qr.deficient_columns.empty()) net.rank_deficient_nodes.push_back(i);

    NodeIsometry iso;
    iso.node = i;
    iso.rows_left = dl;
    iso.rows_right = dr;
    iso.cols = qr.q.cols;
    iso.wire_a = shape.node(nd.left()).coord.t;
    iso.wire_b = shape.node(nd.right()).coord.t;
    iso.q = std::move(qr.q);
    net.isometries.push_back(std::move(iso));
    upward[i] = std::move(qr.r);
  }

  const Mat& rroot = upward[shape.root()];
  net.omega.assign(rroot.rows, 0.0);
  for (int k = 0; k < rroot.rows; ++k) {
    double s = 0.0;
    for (int g = 0; g < rroot.cols; ++g) s += rroot(k, g);
    net.omega[k] = s;
  }
  return net;
}

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void export_circuit(const IsometricNetwork& net, const std::string& path) {
  const int dim = next_pow2(std::max(net.ncat, net.vocab));
  double norm2 = net.omega_norm2();
  if (!(norm2 > 0.0))
    throw ZeroPartition("export_circuit: network has zero norm");
  const double norm = std::sqrt(norm2);

  std::string out;
  out += "STNCIRC 1\n";
  out += "DIM " + std::to_string(dim) + "\n";
  out += "WIRES " + std::to_string(net.nleaves) + "\n";
  out += "PREP 0";
  for (int i = 0; i < dim; ++i) {
    const double v =
        i < static_cast<int>(net.omega.size()) ? net.omega[i] / norm : 0.0;
    out += " " + fmt17(v);
  }
  out += "\n";
  for (const NodeIsometry& iso : net.isometries)
    out += "ANCILLA " + std::to_string(iso.wire_b) + "\n";

  for (const NodeIsometry& iso : net.isometries) {
    // Embed Q ((dl*dr) x r) into a D^2 x D^2 unitary: column (i*D + 0)
    // carries Q(:, i); the rest is completed orthonormally.
    const int d2 = dim * dim;
    Mat embedded(d2, iso.cols);
    for (int a = 0; a < iso.rows_left; ++a)
      for (int b = 0; b < iso.rows_right; ++b)
        for (int c = 0; c < iso.cols; ++c)
          embedded(a * dim + b, c) = iso.q(a * iso.rows_right + b, c);
    // Column i*D of the unitary is Q(:, i): input |i> on target-a with the
    // ancilla |0> on target-b. Remaining columns are completed orthonormally.
    Mat square = complete_to_square(embedded);
    Mat unitary(d2, d2);
    int extra = iso.cols;
    for (int col = 0; col < d2; ++col) {
      const int a = col / dim;
      const int b = col % dim;
      if (b == 0 && a < iso.cols) {
        for (int r = 0; r < d2; ++r) unitary(r, col) = square(r, a);
      } else {
        for (int r = 0; r < d2; ++r) unitary(r, col) = square(r, extra);
        ++extra;
      }
    }

    out += "GATE2 " + std::to_string(iso.node) + " " +
           std::to_string(iso.wire_a) + " " + std::to_string(iso.wire_b);
    for (int r = 0; r < d2; ++r)
      for (int c = 0; c < d2; ++c) out += " " + fmt17(unitary(r, c));
    out += "\n";
  }

  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (f == nullptr) throw IoError("cannot open for writing: " + path);
  const std::size_t written = std::fwrite(out.data(), 1, out.size(), f);
  std::fclose(f);
  if (written != out.size()) throw IoError("write failed: " + path);
}

Circuit read_circuit(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (f == nullptr) throw IoError("cannot open: " + path);
  std::string text;
  char buf[1 << 16];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof(buf), f)) > 0) text.append(buf, got);
  std::fclose(f);

  Circuit circ;
  std::size_t pos = 0;
  auto next_line = [&](std::string& line) {
    if (pos >= text.size()) return false;
    auto nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    line = text.substr(pos, nl - pos);
    pos = nl + 1;
    return true;
  };

  std::string line;
  if (!next_line(line) || line != "STNCIRC 1")
    throw FormatVersionMismatch("bad circuit header");
  while (next_line(line)) {
    if (line.empty()) continue;
    std::istringstream ls{line};
    std::string tag;
    ls >> tag;
    if (tag == "DIM") {
      ls >> circ.qudit_dim;
    } else if (tag == "WIRES") {
      ls >> circ.wires;
    } else if (tag == "PREP") {
      ls >> circ.prep_wire;
      double v;
      while (ls >> v) circ.prep.push_back(v);
    } else if (tag == "ANCILLA") {
      int w;
      ls >> w;
      circ.ancillas.push_back(w);
    } else if (tag == "GATE2") {
      CircuitGate g;
      ls >> g.node >> g.target_a >> g.target_b;
      const int d2 = circ.qudit_dim * circ.qudit_dim;
      g.u = Mat(d2, d2);
      for (int r = 0; r < d2; ++r)
        for (int c = 0; c < d2; ++c)
          if (!(ls >> g.u(r, c)))
            throw FormatVersionMismatch("short GATE2 line");
      circ.gates.push_back(std::move(g));
    } else {
      throw FormatVersionMismatch("unknown circuit record: " + tag);
    }
  }
  return circ;
}

namespace {

// Locates the internal-or-leaf node whose span is exactly [start, start+len).
int find_subtree(const ParseTree& tree, int start, int len) {
  std::vector<int> width(tree.size(), 0);
  std::vector<int> order;
  std::vector<int> stack{tree.root()};
  while (!stack.empty()) {
    int i = stack.back();
    stack.pop_back();
    order.push_back(i);
    for (int c : tree.node(i).children) stack.push_back(c);
  }
  std::reverse(order.begin(), order.end());
  for (int i : order) {
    const TreeNode& nd = tree.node(i);
    width[i] = nd.is_leaf() ? 1 : width[nd.left()] + width[nd.right()];
  }
  for (int i = 0; i < tree.size(); ++i)
    if (tree.node(i).coord.t == start && width[i] == len) return i;
  return -1;
}

}  // namespace

EntanglementSpectrum block_spectrum(const ParseTree& shape,
                                    const MergeTensorBank& bank,
                                    int block_start, int block_len) {
  const int n = shape.leaf_count();
  if (block_len <= 0) throw EmptyBlock("block_spectrum: empty block");
  if (block_start < 0 || block_start + block_len > n)
    throw IndexOutOfRange("block_spectrum: block outside the sentence");

  EntanglementSpectrum spec;
  spec.block_start = block_start;
  spec.block_len = block_len;

  if (block_len == n) {
    // The whole sentence is the pure state itself.
    spec.subtree = true;
    spec.lambda = {1.0};
    return spec;
  }

  const double z = tree_partition(shape, bank);
  if (!(z > 0.0)) throw ZeroPartition("block_spectrum: zero partition");

  const int cut = find_subtree(shape, block_start, block_len);
  if (cut >= 0) {
    // Single cut edge: block weight times environment weight over Z.
    const auto inside = inside_messages(shape, bank);
    const auto outside = outside_messages(shape, bank, inside);
    spec.subtree = true;
    spec.lambda.resize(bank.num_categories());
    for (int c = 0; c < bank.num_categories(); ++c)
      spec.lambda[c] = inside[cut][c] * outside[cut][c] / z;
    return spec;
  }

  // Multi-cut span: dense doubled contraction. The environment is the other
  // words plus the top category register.
  spec.subtree = false;
  const int vocab = bank.num_words();
  double block_dim_d = 1.0, env_dim_d = 1.0;
  for (int i = 0; i < block_len; ++i) block_dim_d *= vocab;
  for (int i = 0; i < n - block_len; ++i) env_dim_d *= vocab;
  if (block_dim_d > 4096.0)
    throw BlockTooLarge("block dimension exceeds 4096");
  if (block_dim_d * env_dim_d > 262144.0)
    throw BlockTooLarge("total enumeration exceeds the dense-route guard");
  const int bdim = static_cast<int>(block_dim_d);
  const int edim = static_cast<int>(env_dim_d);
  const int ncat = bank.num_categories();

  // Amplitude-level inside run with clamped leaf words, root leg open.
  const Mat lex = lexical_amplitude(bank);
  const auto amps = amplitudes(bank);
  const std::string l4shape = bank.level == 4 ? tree_shape(shape) : std::string();
  const auto leaves = shape.leaves_in_order();

  auto amplitude_vector = [&](const std::vector<int>& words) {
    // inside recursion over amplitudes; returns vector over root categories
    std::vector<std::vector<double>> m(shape.size());
    std::vector<int> order;
    std::vector<int> stack{shape.root()};
    while (!stack.empty()) {
      int i = stack.back();
      stack.pop_back();
      order.push_back(i);
      for (int c : shape.node(i).children) stack.push_back(c);
    }
    std::reverse(order.begin(), order.end());
    std::vector<int> leaf_pos_of(shape.size(), -1);
    for (std::size_t p = 0; p < leaves.size(); ++p)
      leaf_pos_of[leaves[p]] = static_cast<int>(p);
    for (int i : order) {
      const TreeNode& nd = shape.node(i);
      if (nd.is_leaf()) {
        m[i].resize(ncat);
        const int w = words[leaf_pos_of[i]];
        for (int c = 0; c < ncat; ++c) m[i][c] = lex(w, c);
        continue;
      }
      const AmplitudeTensor* amp = [&]() -> const AmplitudeTensor* {
        auto it = amps.find(bank.key_for(l4shape, nd.coord.z, nd.coord.t));
        return it == amps.end() ? nullptr : &it->second;
      }();
      const auto& ml = m[nd.left()];
      const auto& mr = m[nd.right()];
      std::vector<double> out(ncat, 0.0);
      for (int a = 0; a < ncat; ++a) {
        if (ml[a] == 0.0) continue;
        for (int b = 0; b < ncat; ++b) {
          const double w = ml[a] * mr[b];
          if (w == 0.0) continue;
          for (int g = 0; g < ncat; ++g)
            out[g] += w * amp_entry(amp, bank, a, b, g);
        }
      }
      m[i] = std::move(out);
    }
    return m[shape.root()];
  };

  Eigen::MatrixXd rho = Eigen::MatrixXd::Zero(bdim, bdim);
  std::vector<int> words(n, 0);
  Eigen::MatrixXd psi(bdim, ncat);
  for (int e = 0; e < edim; ++e) {
    int rem = e;
    for (int i = 0; i < n - block_len; ++i) {
      const int pos = i < block_start ? i : i + block_len;
      words[pos] = rem % vocab;
      rem /= vocab;
    }
    for (int bidx = 0; bidx < bdim; ++bidx) {
      int brem = bidx;
      for (int i = 0; i < block_len; ++i) {
        words[block_start + i] = brem % vocab;
        brem /= vocab;
      }
      const std::vector<double> av = amplitude_vector(words);
      for (int g = 0; g < ncat; ++g) psi(bidx, g) = av[g];
    }
    rho.noalias() += psi * psi.transpose();
  }
  rho /= z;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(rho);
  std::vector<double> ev(solver.eigenvalues().data(),
                         solver.eigenvalues().data() + bdim);
  std::sort(ev.begin(), ev.end(), std::greater<>());
  for (double v : ev) {
    if (v < 1e-14) break;
    spec.lambda.push_back(v);
  }
  if (spec.lambda.empty()) spec.lambda.push_back(0.0);
  return spec;
}

EntanglementMeasures entanglement(const EntanglementSpectrum& spec) {
  EntanglementMeasures m;
  double lmax = 0.0;
  for (double v : spec.lambda) {
    if (v > 0.0) m.entropy_bits -= v * std::log2(v);
    lmax = std::max(lmax, v);
  }
  m.single_copy_bits = lmax > 0.0 ? -std::log2(lmax) : 0.0;
  return m;
}

PerplexityBoundReport perplexity_lower_bound(const ParseTree& shape,
                                             const MergeTensorBank& bank,
                                             int block_start, int block_len) {
  EntanglementSpectrum spec;
  try {
    spec = block_spectrum(shape, bank, block_start, block_len);
  } catch (const ZeroPartition&) {
    throw ZeroWeight("perplexity_lower_bound: no category carries weight");
  }
  if (!spec.subtree)
    throw NotASubtreeBlock(
        "perplexity_lower_bound: block is not a single subtree");
  double lmax = 0.0;
  for (double v : spec.lambda) lmax = std::max(lmax, v);
  if (!(lmax > 0.0))
    throw ZeroWeight("perplexity_lower_bound: no category carries weight");
  const EntanglementMeasures m = entanglement(spec);
  PerplexityBoundReport rep;
  rep.bound = 1.0 / lmax;
  rep.entropy_bits = m.entropy_bits;
  rep.single_copy_bits = m.single_copy_bits;
  return rep;
}

}  // namespace stnlm
