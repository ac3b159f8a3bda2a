#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "adaseg/core/rng.hpp"
#include "adaseg/nn/blocks.hpp"
#include "adaseg/nn/interp.hpp"
#include "adaseg/nn/layers.hpp"
#include "adaseg/nn/optim.hpp"
#include "adaseg/segnet/loss.hpp"
#include "adaseg/segnet/model.hpp"
#include "support/gradcheck.hpp"

using namespace adaseg;
using nn::Ctx;

namespace {

template <typename T>
Tensor<T> random_tensor(std::vector<std::int64_t> shape, Rng& rng,
                        double lo = -1.0, double hi = 1.0) {
  Tensor<T> t(std::move(shape));
  for (std::int64_t i = 0; i < t.numel(); ++i)
    t[i] = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

// Direct 7-loop convolution; the oracle for the im2col+GEMM path.
template <typename T>
Tensor<T> conv_oracle(const Tensor<T>& x, const Tensor<T>& w,
                      const Tensor<T>& b, int cout, int k, int stride,
                      int dil) {
  const int N = (int)x.dim(0), C = (int)x.dim(1), H = (int)x.dim(2),
            W = (int)x.dim(3);
  const int pad = dil * (k - 1) / 2;
  const int OH = (H + 2 * pad - dil * (k - 1) - 1) / stride + 1;
  const int OW = (W + 2 * pad - dil * (k - 1) - 1) / stride + 1;
  Tensor<T> y({N, cout, OH, OW});
  for (int n = 0; n < N; ++n)
    for (int co = 0; co < cout; ++co)
      for (int oy = 0; oy < OH; ++oy)
        for (int ox = 0; ox < OW; ++ox) {
          double s = b[co];
          for (int c = 0; c < C; ++c)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int iy = oy * stride - pad + ky * dil;
                const int ix = ox * stride - pad + kx * dil;
                if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                s += static_cast<double>(x.at(n, c, iy, ix)) *
                     w[((std::size_t)co * C + c) * k * k + ky * k + kx];
              }
          y.at(n, co, oy, ox) = static_cast<T>(s);
        }
  return y;
}

double scalarize(const Tensor<double>& y, const Tensor<double>& w) {
  double s = 0;
  for (std::int64_t i = 0; i < y.numel(); ++i) s += y[i] * w[i];
  return s;
}

}  // namespace

TEST_CASE("conv2d matches direct convolution oracle") {
  Rng rng(11);
  for (auto [stride, dil] : {std::pair{1, 1}, {2, 1}, {1, 2}}) {
    nn::Conv2d<double> conv(3, 4, 3, stride, dil);
    conv.init_he(rng);
    auto x = random_tensor<double>({2, 3, 10, 10}, rng);
    auto got = conv.forward(x, false);
    auto want = conv_oracle(x, conv.w, conv.b, 4, 3, stride, dil);
    REQUIRE(got.same_shape(want));
    for (std::int64_t i = 0; i < got.numel(); ++i)
      CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-10));
  }
}

TEST_CASE("conv block gradients match finite differences") {
  Rng rng(21);
  nn::ConvBlock<double> block(2, 3, 3, 2, 1,
                              nn::ConvBlock<double>::Opts{true, true, 0.0, 0.0});
  block.init(rng);
  auto x = random_tensor<double>({2, 2, 8, 8}, rng);
  auto wsum = random_tensor<double>({2, 3, 4, 4}, rng);

  auto params = nn::collect_params<double>(block, "block");
  auto loss = [&] {
    Ctx ctx;
    ctx.train = true;
    return scalarize(block.forward(x, ctx), wsum);
  };
  nn::zero_grads(params);
  Ctx ctx;
  ctx.train = true;
  ctx.cache = true;
  auto y = block.forward(x, ctx);
  (void)y;
  auto gx = block.backward(wsum, true);
  auto rp = gradcheck::check_params(params, loss, 1e-5);
  CHECK(rp.max_rel < 1e-4);
  auto ri = gradcheck::check_input(x, gx, loss, 1e-5);
  CHECK(ri.max_rel < 1e-4);
}

TEST_CASE("residual module with projection: gradients match finite differences") {
  Rng rng(33);
  nn::ResidualModule<double> rm(2, 4, 2, 1, 0.0);
  rm.init(rng);
  auto x = random_tensor<double>({2, 2, 8, 8}, rng);
  auto wsum = random_tensor<double>({2, 4, 4, 4}, rng);
  auto params = nn::collect_params<double>(rm, "rm");
  auto loss = [&] {
    Ctx ctx;
    ctx.train = true;
    return scalarize(rm.forward(x, ctx), wsum);
  };
  nn::zero_grads(params);
  Ctx ctx;
  ctx.train = true;
  ctx.cache = true;
  rm.forward(x, ctx);
  auto gx = rm.backward(wsum, true);
  CHECK(gradcheck::check_params(params, loss, 1e-5).max_rel < 1e-4);
  CHECK(gradcheck::check_input(x, gx, loss, 1e-5).max_rel < 1e-4);
}

TEST_CASE("bilinear adjoint satisfies <g, R x> == <R* g, x>") {
  Rng rng(44);
  auto x = random_tensor<double>({2, 3, 7, 5}, rng);
  auto g = random_tensor<double>({2, 3, 13, 11}, rng);
  auto y = nn::bilinear_resize(x, 13, 11);
  auto gt = nn::bilinear_adjoint(g, 7, 5);
  double lhs = 0, rhs = 0;
  for (std::int64_t i = 0; i < y.numel(); ++i) lhs += y[i] * g[i];
  for (std::int64_t i = 0; i < x.numel(); ++i) rhs += x[i] * gt[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("softmax and critic head gradients match finite differences") {
  Rng rng(55);
  nn::Softmax<double> sm;
  auto x = random_tensor<double>({2, 4, 3, 3}, rng);
  auto wsum = random_tensor<double>({2, 4, 3, 3}, rng);
  auto loss = [&] {
    Ctx c;
    return scalarize(sm.forward(x, c), wsum);
  };
  Ctx c;
  c.cache = true;
  sm.forward(x, c);
  auto gx = sm.backward(wsum, false);
  CHECK(gradcheck::check_input(x, gx, loss, 1e-6).max_rel < 1e-6);

  nn::GlobalAvgLinear<double> head(4);
  head.init_he(rng);
  auto hx = random_tensor<double>({3, 4, 5, 5}, rng);
  auto sw = random_tensor<double>({3}, rng);
  auto params = nn::collect_params<double>(head, "head");
  auto hloss = [&] {
    Ctx cc;
    auto s = head.forward(hx, cc);
    double v = 0;
    for (int i = 0; i < 3; ++i) v += s[i] * sw[i];
    return v;
  };
  nn::zero_grads(params);
  Ctx cc;
  cc.cache = true;
  head.forward(hx, cc);
  auto ghx = head.backward(sw, true);
  CHECK(gradcheck::check_params(params, hloss, 1e-6).max_rel < 1e-6);
  CHECK(gradcheck::check_input(hx, ghx, hloss, 1e-6).max_rel < 1e-6);
}

TEST_CASE("full segmenter hybrid-loss gradient matches finite differences") {
  segnet::NetworkConfig cfg;
  cfg.input_size = 16;
  cfg.in_channels = 1;
  cfg.num_classes = 2;
  cfg.dropout_rate = 0.0;  // finite differences need a deterministic loss
  cfg.smooth_kernel = 3;
  cfg.stage_widths = {2, 2, 2, 2, 2, 2, 2, 2, 2, 2};
  auto model = segnet::build_segmenter<double>(cfg, 7);

  auto params = model.params();
  const auto n_params = nn::count_params(params);
  CHECK(n_params <= 1000);

  Rng rng(71);
  auto x = random_tensor<double>({2, 1, 16, 16}, rng);
  Tensor<std::uint8_t> labels({2, 16, 16});
  for (std::int64_t i = 0; i < labels.numel(); ++i)
    labels[i] = static_cast<std::uint8_t>(rng.uniform_int(2));
  auto onehot = segnet::onehot_from_labels<double>(labels, 2);
  segnet::LossWeights weights;
  weights.lambda_ce = 0.7;
  weights.beta_l2 = 1e-3;
  weights.class_weights = {1.0, 1.5};

  auto loss = [&] {
    Ctx ctx;
    ctx.train = true;
    auto out = segnet::forward(model, x, {}, ctx);
    return segnet::seg_loss(out.probs, onehot, weights, params).total;
  };

  nn::zero_grads(params);
  Ctx ctx;
  ctx.train = true;
  ctx.cache = true;
  auto out = segnet::forward(model, x, {}, ctx);
  auto l = segnet::seg_loss(out.probs, onehot, weights, params);
  auto views = model.stage_views(ctx, true);
  segnet::backward_stages(views, l.dprobs, {});
  nn::add_l2_grads(params, weights.beta_l2);

  auto r = gradcheck::check_params(params, loss, 1e-5);
  MESSAGE("max rel err ", r.max_rel, " at ", r.worst);
  CHECK(r.max_rel <= 1e-4);
}

TEST_CASE("softmax output normalizes per pixel") {
  segnet::NetworkConfig cfg;
  cfg.input_size = 16;
  cfg.in_channels = 3;
  cfg.num_classes = 5;
  cfg.base_width = 4;
  auto model = segnet::build_segmenter<float>(cfg, 3);
  Rng rng(5);
  auto x = random_tensor<float>({2, 3, 16, 16}, rng, -3.0, 3.0);
  auto out = segnet::forward(model, x);
  const int HW = 16 * 16;
  for (int n = 0; n < 2; ++n)
    for (int i = 0; i < HW; ++i) {
      double s = 0;
      for (int c = 0; c < 5; ++c)
        s += out.probs[((std::size_t)n * 5 + c) * HW + i];
      CHECK(std::abs(s - 1.0) <= 1e-5);
    }
}

TEST_CASE("taps resolve by name and reject unknown names") {
  segnet::NetworkConfig cfg;
  cfg.input_size = 16;
  cfg.base_width = 2;
  cfg.in_channels = 1;
  cfg.num_classes = 3;
  auto model = segnet::build_segmenter<float>(cfg, 1);
  Rng rng(6);
  auto x = random_tensor<float>({1, 1, 16, 16}, rng);
  auto out = segnet::forward(model, x, {"RM2", "RM4", "Conv10", "pre-softmax"});
  // Stride plan: RM2, RM4, RM6 halve resolution.
  CHECK(out.taps.at("RM2").dim(2) == 8);
  CHECK(out.taps.at("RM4").dim(2) == 4);
  CHECK(out.taps.at("Conv10").dim(2) == 2);
  CHECK(out.taps.at("pre-softmax").dim(2) == 16);
  CHECK(out.taps.at("pre-softmax").dim(1) == 3);
  CHECK_THROWS_AS(segnet::forward(model, x, {"RM99"}), LookupError);

  auto none = segnet::forward(model, x, {});
  CHECK(none.taps.empty());
  for (std::int64_t i = 0; i < none.probs.numel(); ++i)
    CHECK(none.probs[i] == out.probs[i]);
}
