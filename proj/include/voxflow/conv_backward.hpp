#pragma once

#include <vector>

#include "voxflow/dataflows.hpp"

namespace voxflow {

template <std::size_t Dim>
struct ConvGradients {
  Matrix<double> input;                  // d(loss)/d(input features)
  std::vector<Matrix<double>> weights;   // d(loss)/d(W), per offset
};

// Analytic backward pass over the same kernel map used forward:
//   grad_x[j]  += grad_out[i] * W_delta^T  for every (j, i) in pairs(delta)
//   grad_W_d    = sum of x[j]^T (outer) grad_out[i] over pairs(delta)
template <typename T, std::size_t Dim>
ConvGradients<Dim> conv_backward(const SparseTensor<T, Dim>& grad_out,
                                 const SparseTensor<T, Dim>& x, const ConvSpec<T, Dim>& spec,
                                 const KernelMap<Dim>& map) {
  detail::validate_conv_args(x, spec, map);
  if (grad_out.rows() != std::int64_t(map.out_coords.size()))
    throw InconsistentMap("gradient row count does not match map output count");
  if (grad_out.channels() != spec.out_channels)
    throw InconsistentMap("gradient width does not match spec out_channels");

  ConvGradients<Dim> g;
  g.input = Matrix<double>::Zero(x.rows(), spec.in_channels);
  g.weights.assign(std::size_t(spec.num_offsets()),
                   Matrix<double>::Zero(spec.in_channels, spec.out_channels));

  for (int b = 0; b < spec.num_offsets(); ++b) {
    const auto& list = map.pairs[std::size_t(b)];
    if (list.empty()) continue;
    const std::int64_t m = std::int64_t(list.size());
    Matrix<double> gathered_x(m, spec.in_channels);
    Matrix<double> gathered_g(m, spec.out_channels);
    for (std::int64_t k = 0; k < m; ++k) {
      gathered_x.row(k) = x.features.row(list[std::size_t(k)].in_row).template cast<double>();
      gathered_g.row(k) =
          grad_out.features.row(list[std::size_t(k)].out_row).template cast<double>();
    }
    g.weights[std::size_t(b)] = gathered_x.transpose() * gathered_g;
    const Matrix<double> scatter =
        gathered_g * spec.weights[std::size_t(b)].template cast<double>().transpose();
    for (std::int64_t k = 0; k < m; ++k)
      g.input.row(list[std::size_t(k)].in_row) += scatter.row(k);
  }
  return g;
}

}  // namespace voxflow
