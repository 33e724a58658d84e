#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "dpg/tensor/binary_io.hpp"
#include "dpg/tensor/errors.hpp"
#include "dpg/tensor/param_store.hpp"
#include "dpg/tensor/weights_io.hpp"

using namespace dpg;

TEST(ParamStore, NamesAreUniqueAndOrdered) {
  ParamStore<float> s;
  s.add_parameter("a", Tensor<float>({2}));
  s.add_buffer("b", Tensor<float>({3}));
  EXPECT_THROW(s.add_parameter("a", Tensor<float>({1})), std::invalid_argument);
  EXPECT_EQ(s.entries()[0].name, "a");
  EXPECT_EQ(s.entries()[1].name, "b");
  EXPECT_EQ(s.trainable_count(), 2u);
  EXPECT_TRUE(s.get("a").has_grad());
  EXPECT_FALSE(s.get("b").has_grad());
  EXPECT_EQ(s.entries()[0].m.size(), 2u);
}

TEST(Adam, ZeroGradientLeavesParameterUnchanged) {
  ParamStore<double> s;
  s.add_parameter("w", Tensor<double>({3}, {1, -2, 3}));
  adam_step(s, {.lr = 0.1});
  EXPECT_EQ(s.step(), 1u);
  auto d = s.get("w").data();
  EXPECT_EQ(std::vector<double>(d.begin(), d.end()), (std::vector<double>{1, -2, 3}));
}

TEST(Adam, FirstStepMagnitudeIsLearningRate) {
  ParamStore<double> s;
  s.add_parameter("w", Tensor<double>::scalar(0.5));
  s.get("w").mutable_grad()[0] = -3.0;
  adam_step(s, {.lr = 1e-4});
  EXPECT_NEAR(s.get("w").item() - 0.5, 1e-4 * 3.0 / (3.0 + 1e-8), 1e-15);
}

TEST(Adam, TrajectoryMatchesManualRecurrence) {
  ParamStore<double> s;
  s.add_parameter("theta", Tensor<double>::scalar(1.0));
  // Oracle: the recurrence written out longhand.
  double theta = 1.0, m = 0, v = 0;
  for (int t = 1; t <= 10; ++t) {
    const double g = 2 * theta;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1 - std::pow(0.9, t)), vh = v / (1 - std::pow(0.999, t));
    theta -= 0.1 * mh / (std::sqrt(vh) + 1e-8);

    s.zero_grad();
    s.get("theta").mutable_grad()[0] = 2 * s.get("theta").item();
    adam_step(s, {.lr = 0.1});
    EXPECT_NEAR(s.get("theta").item(), theta, 1e-6) << "step " << t;
  }
  EXPECT_EQ(s.step(), 10u);
}

TEST(Adam, MissingGradientNamesParameter) {
  ParamStore<float> s;
  s.add_parameter("head.fc1.weight", Tensor<float>({2}));
  s.get("head.fc1.weight").set_requires_grad(false);
  try {
    adam_step(s, {});
    FAIL();
  } catch (const std::logic_error& e) {
    EXPECT_NE(std::string(e.what()).find("head.fc1.weight"), std::string::npos);
  }
}

TEST(Adam, GradientsPersistUntilExplicitZero) {
  ParamStore<float> s;
  s.add_parameter("w", Tensor<float>::scalar(0));
  s.get("w").mutable_grad()[0] = 1;
  adam_step(s, {});
  EXPECT_EQ(s.get("w").grad()[0], 1.0f);
  s.zero_grad();
  EXPECT_EQ(s.get("w").grad()[0], 0.0f);
}

TEST(HeInit, SampleVarianceMatchesTwoOverFanIn) {
  auto t = he_init<double>({100000}, 64, 7, "probe");
  double s = 0, ss = 0;
  for (auto v : t.data()) {
    s += v;
    ss += v * v;
  }
  const double n = 100000, mean = s / n, var = ss / n - mean * mean;
  EXPECT_NEAR(var, 2.0 / 64, 0.05 * 2.0 / 64);
  EXPECT_LT(std::abs(mean), 5 * std::sqrt(2.0 / 64 / n));
}

TEST(HeInit, DeterministicPerSeedAndName) {
  auto a = he_init<float>({4, 4}, 16, 42, "x.weight");
  auto b = he_init<float>({4, 4}, 16, 42, "x.weight");
  auto c = he_init<float>({4, 4}, 16, 42, "y.weight");
  auto d = he_init<float>({4, 4}, 16, 43, "x.weight");
  EXPECT_TRUE(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
  EXPECT_FALSE(std::equal(a.data().begin(), a.data().end(), c.data().begin()));
  EXPECT_FALSE(std::equal(a.data().begin(), a.data().end(), d.data().begin()));
}

TEST(WeightsIo, RoundTripIsBitExact) {
  ParamStore<float> s;
  std::mt19937 rng(1);
  std::uniform_real_distribution<float> u(-5, 5);
  Tensor<float> w({2, 3, 3, 3});
  for (auto& v : w.mutable_data()) v = u(rng);
  w.mutable_data()[0] = -0.0f;
  w.mutable_data()[1] = 1e-42f;  // subnormal
  s.add_parameter("enc.conv.weight", w);
  s.add_buffer("enc.bn.running_var", Tensor<float>({2}, {1.0f, 0.25f}));
  auto path = std::filesystem::temp_directory_path() / "dpg_weights_roundtrip.dpgw";
  save_weights(path, s);
  auto bytes = io::read_file(path);
  EXPECT_EQ(bytes.substr(0, 4), "DPGW");
  EXPECT_EQ(encode_weights(decode_weights(bytes)), bytes);

  ParamStore<float> t;
  t.add_parameter("enc.conv.weight", Tensor<float>({2, 3, 3, 3}));
  t.add_buffer("enc.bn.running_var", Tensor<float>({2}));
  load_weights(path, t);
  for (std::size_t i = 0; i < w.numel(); ++i)
    EXPECT_EQ(std::bit_cast<std::uint32_t>(t.get("enc.conv.weight").data()[i]),
              std::bit_cast<std::uint32_t>(w.data()[i]));
  std::filesystem::remove(path);
}

TEST(WeightsIo, HeaderLayout) {
  auto bytes = encode_weights({WeightEntry{"ab", {2}, {1.0f, 2.0f}}});
  const unsigned char expect[] = {'D', 'P', 'G', 'W', 1, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 'a', 'b',
                                  1,   0,   0,   0,   2, 0, 0, 0, 0, 0, 0x80, 0x3f, 0, 0, 0, 0x40};
  ASSERT_EQ(bytes.size(), sizeof(expect));
  for (std::size_t i = 0; i < bytes.size(); ++i) EXPECT_EQ(static_cast<unsigned char>(bytes[i]), expect[i]) << i;
}

TEST(WeightsIo, DiagnosticsForCorruptFiles) {
  auto good = encode_weights({WeightEntry{"w", {3}, {1, 2, 3}}});
  auto bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_weights(bad_magic), FormatError);
  try {
    decode_weights(good.substr(0, good.size() - 2));
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("truncated", 0), 0u) << e.what();
  }
}

TEST(WeightsIo, ArchitectureMismatchNamesFirstOffender) {
  ParamStore<float> s;
  s.add_parameter("a", Tensor<float>({2}));
  s.add_parameter("b", Tensor<float>({3}));
  try {
    assign_weights({WeightEntry{"a", {2}, {0, 0}}, WeightEntry{"b", {4}, {0, 0, 0, 0}}}, s);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("'b'"), std::string::npos) << e.what();
  }
}
