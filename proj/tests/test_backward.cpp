#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "voxflow/conv_backward.hpp"
#include "voxflow/dataflows.hpp"
#include "test_util.hpp"

using namespace voxflow;

namespace {

// Scalar loss sum(G .* conv(x)) whose gradients the analytic backward pass
// must reproduce; G is a fixed random matrix.
double probe_loss(const SparseTensor<double, 3>& x, const ConvSpec<double, 3>& spec,
                  const KernelMap<3>& map, const Matrix<double>& g) {
  const auto y = conv_gather_scatter(x, spec, map);
  return (y.features.cwiseProduct(g)).sum();
}

bool grad_close(double analytic, double numeric, double rel_tol, double abs_floor) {
  const double diff = std::abs(analytic - numeric);
  return diff <= rel_tol * std::max(std::abs(analytic), std::abs(numeric)) || diff <= abs_floor;
}

}  // namespace

TEST_CASE("conv backward basics") {
  std::mt19937_64 rng(211);
  const auto inst = testutil::random_conv_instance<double>(rng);
  const auto out = output_coords(inst.input.coords, inst.spec);
  const auto map = build_kernel_map(inst.input.coords, out, inst.spec);

  SECTION("zero upstream gradient gives zero gradients") {
    SparseTensor<double, 3> grad;
    grad.coords = out;
    grad.features = Matrix<double>::Zero(std::int64_t(out.size()), inst.spec.out_channels);
    const auto g = conv_backward(grad, inst.input, inst.spec, map);
    CHECK(g.input.cwiseAbs().maxCoeff() == 0.0);
    for (const auto& gw : g.weights) CHECK(gw.cwiseAbs().maxCoeff() == 0.0);
  }

  SECTION("row count mismatch is an inconsistent map") {
    SparseTensor<double, 3> grad;
    grad.coords = {{0, 0, 0}};
    grad.features = Matrix<double>::Zero(1, inst.spec.out_channels);
    if (out.size() != 1) CHECK_THROWS_AS(conv_backward(grad, inst.input, inst.spec, map),
                                         InconsistentMap);
  }
}

TEST_CASE("K=1 weight gradient reduces to a single matrix product") {
  auto spec = make_conv_spec<double, 3>(1, 1, 3, 2, true);
  std::mt19937_64 rng(223);
  init_weights(spec, rng);
  SparseTensor<double, 3> x;
  x.coords = {{0, 0, 0}, {1, 0, 0}, {4, 4, 4}};
  x.features = Matrix<double>::Random(3, 3);
  const auto map = build_kernel_map(x.coords, x.coords, spec);
  SparseTensor<double, 3> grad;
  grad.coords = x.coords;
  grad.features = Matrix<double>::Random(3, 2);

  const auto g = conv_backward(grad, x, spec, map);
  const Matrix<double> expected = x.features.transpose() * grad.features;
  REQUIRE((g.weights[0] - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("conv backward matches central finite differences") {
  // h = 1e-3 central differences in double precision
  const double h = 1e-3;
  const double rel_tol = 1e-4;
  const double abs_floor = 1e-9;

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    auto inst = testutil::random_conv_instance<double>(rng);
    // keep instances small so the sweep stays fast
    while (inst.input.rows() > 48 || inst.spec.kernel_size > 3 || inst.spec.in_channels > 4 ||
           inst.spec.out_channels > 4)
      inst = testutil::random_conv_instance<double>(rng);

    const auto out = output_coords(inst.input.coords, inst.spec);
    const auto map = build_kernel_map(inst.input.coords, out, inst.spec);
    const Matrix<double> g = Matrix<double>::Random(std::int64_t(out.size()),
                                                    inst.spec.out_channels);
    SparseTensor<double, 3> upstream;
    upstream.coords = out;
    upstream.features = g;
    const auto analytic = conv_backward(upstream, inst.input, inst.spec, map);

    // input gradient
    for (Eigen::Index r = 0; r < inst.input.features.rows(); ++r)
      for (Eigen::Index c = 0; c < inst.input.features.cols(); ++c) {
        auto plus = inst;
        plus.input.features(r, c) += h;
        auto minus = inst;
        minus.input.features(r, c) -= h;
        const double numeric =
            (probe_loss(plus.input, inst.spec, map, g) -
             probe_loss(minus.input, inst.spec, map, g)) /
            (2 * h);
        INFO("seed=" << seed << " input grad at (" << r << "," << c << ")");
        REQUIRE(grad_close(analytic.input(r, c), numeric, rel_tol, abs_floor));
      }

    // weight gradient, probing one offset to bound runtime
    const std::size_t b = std::size_t(seed) % inst.spec.weights.size();
    for (Eigen::Index r = 0; r < inst.spec.weights[b].rows(); ++r)
      for (Eigen::Index c = 0; c < inst.spec.weights[b].cols(); ++c) {
        auto plus = inst.spec;
        plus.weights[b](r, c) += h;
        auto minus = inst.spec;
        minus.weights[b](r, c) -= h;
        const double numeric = (probe_loss(inst.input, plus, map, g) -
                                probe_loss(inst.input, minus, map, g)) /
                               (2 * h);
        INFO("seed=" << seed << " weight grad offset " << b << " (" << r << "," << c << ")");
        REQUIRE(grad_close(analytic.weights[b](r, c), numeric, rel_tol, abs_floor));
      }
  }
}
