#ifndef STNLM_SPECTRAL_HPP
#define STNLM_SPECTRAL_HPP

#include <map>
#include <string>
#include <vector>

#include "stnlm/linalg.hpp"
#include "stnlm/tensor_bank.hpp"
#include "stnlm/treebank.hpp"

namespace stnlm {

// Elementwise square roots of a bank's merge tensors.
struct AmplitudeTensor {
  int n = 0;
  std::vector<double> a;
  double at(int i, int j, int g) const {
    return a[(static_cast<std::size_t>(i) * n + j) * n + g];
  }
};

std::map<std::string, AmplitudeTensor> amplitudes(const MergeTensorBank& bank);

// One isometry per internal node, produced by the bottom-up QR sweep with
// child R factors (and square-rooted lexical columns at leaf legs) absorbed
// before factorization.
struct NodeIsometry {
  int node = -1;        // arena id in the swept tree
  int rows_left = 0;    // left leg dimension
  int rows_right = 0;   // right leg dimension
  int cols = 0;         // parent leg dimension after QR
  int wire_a = 0;       // leftmost leaf position of the left child's span
  int wire_b = 0;       // leftmost leaf position of the right child's span
  Mat q;                // (rows_left * rows_right) x cols
};

struct IsometricNetwork {
  std::string shape;
  int nleaves = 0;
  int ncat = 0;
  int vocab = 0;
  std::vector<NodeIsometry> isometries;  // bottom-up (post-order)
  std::vector<double> omega;             // top residue, length <= N_l
  std::vector<int> rank_deficient_nodes;
  double omega_norm2() const;
};

IsometricNetwork isometrize(const ParseTree& shape,
                            const MergeTensorBank& bank);

// Gate-list text export. Qudit dimension is max(N_l, V) padded to the next
// power of two; every isometry ships as its square unitary completion acting
// on two qudits, serialized row-major with 17 significant digits.
void export_circuit(const IsometricNetwork& net, const std::string& path);

struct CircuitGate {
  int node = -1;
  int target_a = 0;
  int target_b = 0;
  Mat u;  // D^2 x D^2
};

struct Circuit {
  int qudit_dim = 0;
  int wires = 0;
  int prep_wire = 0;
  std::vector<double> prep;
  std::vector<int> ancillas;
  std::vector<CircuitGate> gates;
};

Circuit read_circuit(const std::string& path);

// Eigenvalues of the reduced density operator of a contiguous word block.
// Subtree blocks use the closed form block-weight x environment-weight / Z;
// other spans build the operator densely (block dimension guard 4096).
struct EntanglementSpectrum {
  std::vector<double> lambda;
  int block_start = 0;
  int block_len = 0;
  bool subtree = false;
};

EntanglementSpectrum block_spectrum(const ParseTree& shape,
                                    const MergeTensorBank& bank,
                                    int block_start, int block_len);

struct EntanglementMeasures {
  double entropy_bits = 0.0;      // S
  double single_copy_bits = 0.0;  // E1
};

EntanglementMeasures entanglement(const EntanglementSpectrum& spec);

// min over categories with nonzero weight of 1/lambda_alpha for a subtree
// block, i.e. 2^E1 of the normalized spectrum; the witness chain
// 2^E1 <= 2^S <= P comes along for the report.
struct PerplexityBoundReport {
  double bound = 1.0;
  double entropy_bits = 0.0;
  double single_copy_bits = 0.0;
};

PerplexityBoundReport perplexity_lower_bound(const ParseTree& shape,
                                             const MergeTensorBank& bank,
                                             int block_start, int block_len);

}  // namespace stnlm

#endif
