#pragma once

#include <string>
#include <vector>

#include "mbcnn/tensor.hpp"

namespace mbcnn {

// Orthonormal 2-D DCT-II synthesis basis for p x p blocks. Column f holds the
// spatial pattern of frequency f; indices are row-major pairs, f = u*p + v and
// s = r*p + c. Always computed and stored in double.
struct DctBasis {
  int p = 0;
  std::vector<double> factor;  // 1-D factor, factor[k*p + n]
  std::vector<double> m;       // synthesis matrix, m[s*p*p + f]

  double at(int s, int f) const { return m[static_cast<std::size_t>(s) * p * p + f]; }
};

// 1-D factor C[k][n] = a_k cos(pi (2n+1) k / (2p)), a_0 = sqrt(1/p),
// a_k = sqrt(2/p); the 2-D basis is its Kronecker square. 2 <= p <= 16.
DctBasis dct_matrix(int p);

// The block IDCT as a fixed 1x1 conv kernel (1,1,p^2,p^2): channel s of the
// output is row s of matrix * xi.
template <typename T>
TensorT<T> idct_as_kernel(const DctBasis& basis);

// Bandpass weights folded into the IDCT kernel: column f scaled by theta_f.
// theta is (1,1,1,p^2), non-negative; differentiable in theta.
template <typename T>
TensorT<T> fold_passband(const TensorT<T>& theta, const DctBasis& basis);

template <typename T>
TensorT<T> make_passband(int p, T init = T(1));

// Figure-style dumps of a learned passband: u-major p x p grid as an 8-bit
// PGM (min-max normalized) and as raw CSV values.
void write_passband_pgm(const std::string& path, const Tensor& theta, int p);
void write_passband_csv(const std::string& path, const Tensor& theta, int p);
Tensor read_passband_csv(const std::string& path);

}  // namespace mbcnn
