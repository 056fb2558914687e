#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "voxflow/offsets.hpp"
#include "voxflow/sparse_tensor.hpp"

namespace voxflow {

// Convolution description: kernel geometry, stride, channel widths, and the
// weight bank (one in_channels x out_channels matrix per kernel offset).
template <typename T, std::size_t Dim>
struct ConvSpec {
  int kernel_size = 1;
  int stride = 1;
  int in_channels = 0;
  int out_channels = 0;
  bool submanifold = false;
  OffsetSet<Dim> offsets;
  std::vector<Matrix<T>> weights;

  int num_offsets() const { return offsets.size(); }

  void validate() const {
    if (kernel_size < 1) throw InvalidSpec("kernel size must be >= 1");
    if (stride < 1) throw InvalidSpec("stride must be >= 1");
    if (in_channels < 1 || out_channels < 1) throw InvalidSpec("channel widths must be >= 1");
    if (submanifold && (stride != 1 || kernel_size % 2 == 0))
      throw InvalidSpec("submanifold convolution requires stride 1 and odd kernel size");
    if (offsets.kernel_size != kernel_size) throw InvalidSpec("offset set kernel size mismatch");
    if (int(weights.size()) != num_offsets())
      throw InvalidSpec("weight count must equal the kernel volume");
    for (const auto& w : weights)
      if (w.rows() != in_channels || w.cols() != out_channels)
        throw InvalidSpec("weight matrix shape mismatch");
  }
};

template <typename T, std::size_t Dim>
ConvSpec<T, Dim> make_conv_spec(int kernel_size, int stride, int in_channels, int out_channels,
                                bool submanifold) {
  ConvSpec<T, Dim> spec;
  spec.kernel_size = kernel_size;
  spec.stride = stride;
  spec.in_channels = in_channels;
  spec.out_channels = out_channels;
  spec.submanifold = submanifold;
  spec.offsets = enumerate_offsets<Dim>(kernel_size);
  spec.weights.assign(std::size_t(spec.num_offsets()),
                      Matrix<T>::Zero(in_channels, out_channels));
  spec.validate();
  return spec;
}

// Uniform initialization in +-sqrt(1 / (kernel_volume * in_channels)).
template <typename T, std::size_t Dim>
void init_weights(ConvSpec<T, Dim>& spec, std::mt19937_64& rng) {
  const double bound = std::sqrt(1.0 / (double(spec.num_offsets()) * spec.in_channels));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (auto& w : spec.weights)
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = T(u(rng));
}

}  // namespace voxflow
