#include <gtest/gtest.h>
#include <functional>
#include <map>

#include <cmath>
#include <random>

#include "dpg/drdlf/model.hpp"
#include "dpg/tensor/errors.hpp"
#include "support/model_fixtures.hpp"

using namespace dpg;
using dpg::testing::random_tensor;
using dpg::testing::random_tensor_f;

namespace {

using dpg::testing::fill_prefix;
using dpg::testing::random_inputs;

ModelConfig small_config() {
  ModelConfig c;
  c.input_size = 32;
  c.base_width = 2;
  c.fc1_width = 16;
  c.classes = 3;
  c.n_drdb = 2;
  c.seed = 11;
  return c;
}

template <typename T>
bool all_equal(const Tensor<T>& a, const Tensor<T>& b) {
  return a.shape() == b.shape() && std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

}  // namespace

TEST(ParameterBudget, DefaultSixClassTotal) {
  ModelConfig c;
  EXPECT_EQ(count_params(c), 18085014u);
  const double rel = std::abs(double(count_params(c)) - 17961536.0) / 17961536.0;
  EXPECT_LT(rel, 0.02);
  // Hand-summed per-layer budget.
  std::size_t enc = (9 * 1 * 8 + 8) + (9 * 8 * 16 + 16) + (9 * 16 * 32 + 32) + (9 * 32 * 64 + 64) +
                    2 * (8 + 16 + 32 + 64);
  EXPECT_EQ(enc, 24624u);
  const std::size_t sa = 3 * (64 * 32 + 32) + (32 * 64 + 64);
  const std::size_t xattn = (9 * 128 * 64 + 64) + 2 * (9 * 64 * 64 + 64 + sa);
  const std::size_t drdb = (9 * 64 * 64 + 64) + (9 * 128 * 64 + 64) + (9 * 192 * 64 + 64) +
                           (192 * 64 + 64);
  const std::size_t total = 3 * enc + 2 * xattn + (9 * 192 * 64 + 64) + 3 * drdb +
                            (192 * 64 + 64) + 2 * (9 * 64 * 64 + 64) + (16384 * 1024 + 1024) +
                            (1024 * 6 + 6);
  EXPECT_EQ(count_params(c), total);
}

TEST(ParameterBudget, MatchesBuiltModelPerComponent) {
  for (auto mutate : std::vector<std::function<void(ModelConfig&)>>{
           [](ModelConfig&) {},
           [](ModelConfig& c) { c.enable_i1 = false; },
           [](ModelConfig& c) { c.enable_sa_module = false; c.fusion = Fusion::kAdd; },
           [](ModelConfig& c) { c.enable_drdb = false; c.main_branch = 0; },
           [](ModelConfig& c) { c.enable_cross_attention = false; c.n_drdb = 5; }}) {
    auto c = small_config();
    mutate(c);
    DpigNet<float> net(c);
    EXPECT_EQ(net.params().trainable_count(), count_params(c));
    for (const auto& line : parameter_budget(c))
      EXPECT_EQ(net.params().trainable_count(line.name), line.count) << line.name;
  }
}

TEST(ParameterBudget, DefaultBuiltStoreAgrees) {
  ModelConfig c;
  DpigNet<float> net(c);
  EXPECT_EQ(net.params().trainable_count(), 18085014u);
  EXPECT_EQ(net.params().trainable_count("pccaf.enc2"), 24624u);
}

TEST(ParameterBudget, HeadRemovalArithmetic) {
  ModelConfig c;
  std::size_t head = 0;
  for (const auto& l : parameter_budget(c))
    if (l.name.rfind("head.", 0) == 0) head += l.count;
  EXPECT_EQ(head, 16384u * 1024 + 1024 + 1024 * 6 + 6);
}

TEST(ParameterBudget, StrictlyIncreasingInDrdbCount) {
  ModelConfig c;
  std::size_t prev = 0;
  for (int n = 1; n <= 5; ++n) {
    c.n_drdb = n;
    EXPECT_GT(count_params(c), prev);
    prev = count_params(c);
  }
  c.n_drdb = 6;
  EXPECT_THROW(count_params(c), ConfigError);
}

TEST(ParameterBudget, AddFusionIsSmaller) {
  ModelConfig concat, add;
  add.fusion = Fusion::kAdd;
  EXPECT_LT(count_params(add), count_params(concat));
  EXPECT_EQ(count_params(concat) - count_params(add), 9u * 128 * 64);
}

TEST(ParameterBudget, DisablingComponentLeavesOthersUnchanged) {
  ModelConfig base;
  auto lines = [](const ModelConfig& c) {
    std::map<std::string, std::size_t> m;
    for (const auto& l : parameter_budget(c)) m[l.name] = l.count;
    return m;
  };
  const auto ref = lines(base);
  for (auto mutate : std::vector<std::function<void(ModelConfig&)>>{
           [](ModelConfig& c) { c.enable_sa_module = false; },
           [](ModelConfig& c) { c.enable_drdb = false; },
           [](ModelConfig& c) { c.enable_global_residual = false; }}) {
    auto c = base;
    mutate(c);
    for (const auto& [name, n] : lines(c)) {
      const bool touched = (!c.enable_sa_module && name.rfind("pccaf.xattn", 0) == 0) ||
                           (!c.enable_drdb && name.rfind("drdlf.drdb", 0) == 0);
      if (!touched) EXPECT_EQ(n, ref.at(name)) << name;
    }
  }
}

TEST(ModelConfig, Validation) {
  ModelConfig c;
  c.enable_i2 = false;  // main branch disabled
  EXPECT_THROW(c.validate(), ConfigError);
  c.main_branch = 0;
  EXPECT_NO_THROW(c.validate());
  c.enable_i1 = c.enable_i3 = false;
  EXPECT_THROW(c.validate(), ConfigError);
  ModelConfig d;
  d.input_size = 224;  // 14x14 terminal maps
  EXPECT_NO_THROW(d.validate());
  d.input_size = 200;
  EXPECT_THROW(d.validate(), ConfigError);
  d.input_size = 256;
  d.n_drdb = 0;
  EXPECT_THROW(d.validate(), ConfigError);
}

TEST(ShapeLedger, DefaultArchitectureFullSize) {
  ModelConfig c;
  DpigNet<float> net(c);
  std::mt19937_64 rng(1);
  auto in = random_inputs<float>(c, 2, rng);
  ForwardTrace t;
  auto logits = net.forward(nullptr, in, true, &t);
  for (int b = 1; b <= 3; ++b) {
    const auto e = "enc" + std::to_string(b);
    EXPECT_EQ(t.at("input.I" + std::to_string(b)), (Shape{2, 1, 256, 256}));
    EXPECT_EQ(t.at(e + ".s1"), (Shape{2, 8, 128, 128}));
    EXPECT_EQ(t.at(e + ".s2"), (Shape{2, 16, 64, 64}));
    EXPECT_EQ(t.at(e + ".s3"), (Shape{2, 32, 32, 32}));
    EXPECT_EQ(t.at(e + ".s4"), (Shape{2, 64, 16, 16}));
  }
  for (auto x : {"xattn1", "xattn3"}) {
    EXPECT_EQ(t.at(std::string(x) + ".c0"), (Shape{2, 128, 16, 16}));
    EXPECT_EQ(t.at(std::string(x) + ".c3"), (Shape{2, 64, 16, 16}));
  }
  EXPECT_THROW(t.at("xattn2.c0"), std::out_of_range);
  EXPECT_EQ(t.at("z_s"), (Shape{2, 192, 16, 16}));
  EXPECT_EQ(t.at("f0"), (Shape{2, 64, 16, 16}));
  EXPECT_EQ(t.at("drdb3"), (Shape{2, 64, 16, 16}));
  EXPECT_EQ(t.at("q0.in"), (Shape{2, 192, 16, 16}));
  EXPECT_EQ(t.at("q1"), (Shape{2, 64, 16, 16}));
  EXPECT_EQ(t.at("flatten"), (Shape{2, 16384}));
  EXPECT_EQ(t.at("logits"), (Shape{2, 6}));
  EXPECT_EQ(logits.shape(), (Shape{2, 6}));
}

TEST(Encoder, ZeroInputGivesZeroOutput) {
  ParamStore<double> s;
  Encoder<double> enc(s, "e", 2, 3);
  Tensor<double> x({2, 1, 32, 32});
  auto y = enc.forward(nullptr, x, true);
  EXPECT_EQ(y.shape(), (Shape{2, 16, 2, 2}));
  for (double v : y.data()) EXPECT_EQ(v, 0.0);
}

TEST(Encoder, RejectsWrongChannelCount) {
  ParamStore<double> s;
  Encoder<double> enc(s, "e", 2, 3);
  EXPECT_THROW(enc.forward(nullptr, Tensor<double>({1, 2, 16, 16}), true), ShapeError);
}

TEST(SAModule, AttentionRowsSumToOne) {
  ParamStore<double> s;
  SAModule<double> sa(s, "sa", 8, 4);
  std::mt19937_64 rng(2);
  auto x = random_tensor({2, 8, 4, 5}, rng);
  auto f = sa.attention(nullptr, x);
  ASSERT_EQ(f.shape(), (Shape{2, 1, 20, 20}));
  for (std::size_t r = 0; r < 40; ++r) {
    double sum = 0;
    for (std::size_t j = 0; j < 20; ++j) sum += f.data()[r * 20 + j];
    EXPECT_NEAR(sum, 1.0, 1e-6);
  }
  EXPECT_EQ(sa.forward(nullptr, x).shape(), x.shape());
}

TEST(SAModule, ConstantInputGivesUniformAttention) {
  ParamStore<double> s;
  SAModule<double> sa(s, "sa", 8, 4);
  Tensor<double> x({1, 8, 3, 3});
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  for (std::size_t c = 0; c < 8; ++c) {
    const double v = u(rng);
    for (std::size_t i = 0; i < 9; ++i) x.mutable_data()[c * 9 + i] = v;
  }
  auto f = sa.attention(nullptr, x);
  for (double v : f.data()) EXPECT_NEAR(v, 1.0 / 9, 1e-12);
}

TEST(SAModule, FullWidthShape) {
  ParamStore<float> s;
  SAModule<float> sa(s, "sa", 64, 4);
  std::mt19937_64 rng(3);
  auto x = random_tensor_f({2, 64, 16, 16}, rng);
  EXPECT_EQ(sa.forward(nullptr, x).shape(), x.shape());
  EXPECT_EQ(s.trainable_count(), SAModule<float>::count(64));
}

TEST(SAModule, RejectsOddChannels) {
  ParamStore<double> s;
  EXPECT_THROW(SAModule<double>(s, "sa", 7, 1), ShapeError);
}

TEST(CrossAttention, ZeroWeightsGiveHalf) {
  ParamStore<double> s;
  CrossAttention<double> xa(s, "x", 8, true, 1);
  fill_prefix(s, "x", 0.0);
  std::mt19937_64 rng(4);
  auto a = xa.forward(nullptr, random_tensor({2, 8, 4, 4}, rng), random_tensor({2, 8, 4, 4}, rng));
  for (double v : a.data()) EXPECT_EQ(v, 0.5);
}

TEST(CrossAttention, StrictlyInsideUnitIntervalAndAsymmetric) {
  ParamStore<double> s;
  CrossAttention<double> xa(s, "x", 8, true, 1);
  std::mt19937_64 rng(6);
  // Moderate magnitudes: sigmoid rounds to 1.0 in double once its argument passes ~37.
  auto zi = random_tensor({2, 8, 4, 4}, rng, 0, 0.5), zr = random_tensor({2, 8, 4, 4}, rng, 0, 0.5);
  auto a = xa.forward(nullptr, zi, zr), b = xa.forward(nullptr, zr, zi);
  double diff = 0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    EXPECT_GT(a.data()[i], 0.0);
    EXPECT_LT(a.data()[i], 1.0);
    diff = std::max(diff, std::abs(a.data()[i] - b.data()[i]));
  }
  EXPECT_GT(diff, 1e-6);
  EXPECT_THROW(xa.forward(nullptr, zi, random_tensor({2, 8, 2, 2}, rng)), ShapeError);
}

TEST(Pccaf, DisabledCrossAttentionIsPlainConcat) {
  auto c = small_config();
  c.enable_cross_attention = false;
  DpigNet<double> net(c);
  std::mt19937_64 rng(7);
  auto in = random_inputs<double>(c, 2, rng);
  PccafOutput<double> p;
  net.forward(nullptr, in, false, nullptr, &p);
  auto expect = ops::concat_channels<double>(nullptr, {p.z[0], p.z[1], p.z[2]});
  EXPECT_TRUE(all_equal(p.z_s, expect));
  EXPECT_FALSE(p.gate[0].defined());
}

TEST(Pccaf, OnlyI2GivesZ2) {
  auto c = small_config();
  c.enable_i1 = c.enable_i3 = false;
  DpigNet<double> net(c);
  std::mt19937_64 rng(8);
  auto in = random_inputs<double>(c, 2, rng);
  PccafOutput<double> p;
  ForwardTrace t;
  net.forward(nullptr, in, false, &t, &p);
  EXPECT_TRUE(all_equal(p.z_s, p.z[1]));
  EXPECT_EQ(t.at("z_s"), (Shape{2, c.feature_width(), 2, 2}));
  EXPECT_THROW(t.at("input.I1"), std::out_of_range);
}

TEST(Pccaf, GatingBound) {
  auto c = small_config();
  DpigNet<double> net(c);
  std::mt19937_64 rng(9);
  auto in = random_inputs<double>(c, 2, rng);
  PccafOutput<double> p;
  net.forward(nullptr, in, true, nullptr, &p);
  for (int b : {0, 2}) {
    ASSERT_TRUE(p.gate[b].defined());
    for (std::size_t i = 0; i < p.z[b].numel(); ++i) {
      EXPECT_GE(p.gated[b].data()[i], 0.0);
      EXPECT_LE(p.gated[b].data()[i], p.z[b].data()[i]);
    }
  }
}

TEST(Pccaf, BranchIndependenceWithoutCrossAttention) {
  auto c = small_config();
  c.enable_cross_attention = false;
  DpigNet<double> net(c);
  std::mt19937_64 rng(10);
  auto in = random_inputs<double>(c, 2, rng);
  PccafOutput<double> a, b;
  net.forward(nullptr, in, false, nullptr, &a);
  auto in2 = in;
  in2[0] = Tensor<double>(in[0].shape());
  net.forward(nullptr, in2, false, nullptr, &b);
  const auto w = c.feature_width(), hw = c.terminal_size() * c.terminal_size();
  bool first_changed = false;
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t ch = 0; ch < 3 * w; ++ch)
      for (std::size_t i = 0; i < hw; ++i) {
        const auto k = (n * 3 * w + ch) * hw + i;
        if (ch < w) first_changed |= a.z_s.data()[k] != b.z_s.data()[k];
        else EXPECT_EQ(a.z_s.data()[k], b.z_s.data()[k]);
      }
  EXPECT_TRUE(first_changed);
}

TEST(Pccaf, MainBranchReselection) {
  auto c = small_config();
  c.main_branch = 2;
  DpigNet<float> net(c);
  EXPECT_TRUE(net.params().contains("pccaf.xattn1.reduce.weight"));
  EXPECT_TRUE(net.params().contains("pccaf.xattn2.reduce.weight"));
  EXPECT_FALSE(net.params().contains("pccaf.xattn3.reduce.weight"));
  std::mt19937_64 rng(12);
  PccafOutput<float> p;
  net.forward(nullptr, random_inputs<float>(c, 2, rng), true, nullptr, &p);
  EXPECT_TRUE(all_equal(p.z_main, p.z[2]));
  EXPECT_TRUE(all_equal(p.gated[2], p.z[2]));
}

TEST(Pccaf, RejectsMissingOrMisshapenInput) {
  auto c = small_config();
  DpigNet<float> net(c);
  std::mt19937_64 rng(13);
  auto in = random_inputs<float>(c, 2, rng);
  auto missing = in;
  missing[2] = Tensor<float>();
  EXPECT_THROW(net.forward(nullptr, missing, true), ShapeError);
  auto wrong = in;
  wrong[1] = Tensor<float>({2, 1, 16, 16});
  EXPECT_THROW(net.forward(nullptr, wrong, true), ShapeError);
}

TEST(Drdb, IdentityAtZeroWeights) {
  ParamStore<double> s;
  Drdb<double> blk(s, "d", 8, true, 1);
  fill_prefix(s, "d", 0.0);
  std::mt19937_64 rng(14);
  auto x = random_tensor({2, 8, 16, 16}, rng);
  EXPECT_TRUE(all_equal(blk.forward(nullptr, x), x));
  EXPECT_THROW(blk.forward(nullptr, random_tensor({1, 4, 4, 4}, rng)), ShapeError);
}

namespace {

// Direct loop convolution used as an oracle.
std::vector<double> conv_ref(const std::vector<double>& x, std::size_t cin, std::size_t h,
                             std::size_t w, const Tensor<double>& wt, const Tensor<double>& b,
                             std::size_t k, long pad, long dil) {
  const auto cout = wt.dim(0);
  std::vector<double> y(cout * h * w);
  for (std::size_t o = 0; o < cout; ++o)
    for (long i = 0; i < long(h); ++i)
      for (long j = 0; j < long(w); ++j) {
        double acc = b.data()[o];
        for (std::size_t c = 0; c < cin; ++c)
          for (long u = 0; u < long(k); ++u)
            for (long v = 0; v < long(k); ++v) {
              const long yy = i - pad + u * dil, xx = j - pad + v * dil;
              if (yy < 0 || xx < 0 || yy >= long(h) || xx >= long(w)) continue;
              acc += wt.data()[((o * cin + c) * k + u) * k + v] * x[(c * h + yy) * w + xx];
            }
        y[(o * h + i) * w + j] = acc;
      }
  return y;
}

}  // namespace

TEST(Drdb, MatchesComposeByHandOracle) {
  ParamStore<double> s;
  Drdb<double> blk(s, "d", 64, true, 15);
  std::mt19937_64 rng(16);
  for (auto& e : s.entries())
    for (auto& v : e.value.mutable_data()) v = std::uniform_real_distribution<double>(-0.05, 0.05)(rng);
  auto x = random_tensor({1, 64, 4, 4}, rng);
  std::vector<double> f(x.data().begin(), x.data().end()), seen = f, ds;
  for (int k = 1; k <= 3; ++k) {
    auto d = conv_ref(seen, 64 * k, 4, 4, s.get("d.d" + std::to_string(k) + ".weight"),
                      s.get("d.d" + std::to_string(k) + ".bias"), 3, 2, 2);
    for (auto& v : d) v = std::max(0.0, v);
    seen.insert(seen.end(), d.begin(), d.end());
    ds.insert(ds.end(), d.begin(), d.end());
  }
  auto fused = conv_ref(ds, 192, 4, 4, s.get("d.fuse.weight"), s.get("d.fuse.bias"), 1, 0, 1);
  auto y = blk.forward(nullptr, x);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(y.data()[i], f[i] + fused[i], 1e-5);
}

TEST(Drdlf, ZeroFusionPathReturnsMainBranch) {
  auto c = small_config();
  DpigNet<double> net(c);
  fill_prefix(net.params(), "drdlf.drdb", 0.0);
  fill_prefix(net.params(), "drdlf.q0", 0.0);
  std::mt19937_64 rng(17);
  PccafOutput<double> p;
  net.forward(nullptr, random_inputs<double>(c, 2, rng), false, nullptr, &p);
  auto q1 = net.drdlf().fuse(nullptr, p.z_s, p.z_main);
  EXPECT_TRUE(all_equal(q1, p.z_main));
}

TEST(Drdlf, GlobalResidualToggle) {
  auto c = small_config();
  c.enable_global_residual = false;
  DpigNet<double> net(c);
  fill_prefix(net.params(), "drdlf.q0", 0.0);
  std::mt19937_64 rng(18);
  PccafOutput<double> p;
  net.forward(nullptr, random_inputs<double>(c, 2, rng), false, nullptr, &p);
  auto q1 = net.drdlf().fuse(nullptr, p.z_s, p.z_main);
  for (double v : q1.data()) EXPECT_EQ(v, 0.0);
}

TEST(Predict, SoftmaxAndTieBreak) {
  auto p = predict(Tensor<double>({3, 3}, {0, 0, 0, 10, 0, 0, 0.3, -1.2, 2.5}));
  EXPECT_EQ(p[0].label, 0);
  for (double v : p[0].probs) EXPECT_NEAR(v, 1.0 / 3, 1e-12);
  EXPECT_EQ(p[1].label, 0);
  EXPECT_GT(p[1].probs[0], 0.999);
  EXPECT_EQ(p[2].label, 2);
  std::mt19937_64 rng(19);
  for (const auto& q : predict(random_tensor({8, 6}, rng, -5, 5))) {
    double s = 0;
    for (double v : q.probs) s += v;
    EXPECT_NEAR(s, 1.0, 1e-6);
  }
  EXPECT_EQ(predict(Tensor<double>({1, 3}, {1, 4, 4}))[0].label, 1);
}

TEST(GradientFlow, EveryPccafParameterReceivesGradient) {
  auto c = small_config();
  DpigNet<double> net(c);
  std::mt19937_64 rng(20);
  auto in = random_inputs<double>(c, 4, rng);
  const std::vector<int> labels{0, 1, 2, 0};
  // Eval-mode BN: in training mode the bias of a conv feeding BN has an
  // exactly zero gradient because BN subtracts the batch mean.
  Tape<double> tape;
  auto loss = ops::cross_entropy<double>(&tape, net.forward(&tape, in, false), labels);
  tape.backward(loss);
  for (const auto& e : net.params().entries()) {
    if (e.kind != EntryKind::kParameter) continue;
    double mx = 0;
    for (double g : e.value.grad()) mx = std::max(mx, std::abs(g));
    EXPECT_GT(mx, 0.0) << e.name;
  }
}

TEST(GradCheck, MiniatureModelMatchesFiniteDifferences) {
  for (bool training : {false, true}) {
    auto r = dpg::testing::gradcheck_model(dpg::testing::miniature_config(), training, 22, 5);
    EXPECT_LT(r.result.max_error, 1e-4) << r.worst_name << "[" << r.result.worst_index
                                        << "] analytic " << r.result.worst_analytic
                                        << " numeric " << r.result.worst_numeric;
  }
}
