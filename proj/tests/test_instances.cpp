#include <algorithm>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "reference.hpp"
#include "topk/algorithms.hpp"
#include "topk/instances.hpp"

using namespace topk;

TEST(GapInstance, DefaultsHaveGapAtHalf) {
  const Instance inst = generate_gap_instance(GapInstanceSpec{});
  EXPECT_EQ(inst.size(), 10000u);
  EXPECT_EQ(inst.k(), 100u);
  EXPECT_DOUBLE_EQ(inst.threshold(), 0.525);
  EXPECT_NEAR(inst.gap(), 0.05, 1e-12);
  const auto values = inst.values();
  EXPECT_EQ(std::count_if(values.begin(), values.end(), [](double v) { return v > 0.5; }), 100);
}

TEST(GapInstance, GapAndTopCountAcrossSeeds) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    GapInstanceSpec spec;
    spec.n = 2000;
    spec.k = 40;
    spec.gap = 0.02 + 0.001 * static_cast<double>(seed % 50);
    spec.seed = seed;
    const Instance inst = generate_gap_instance(spec);
    std::vector<double> v(inst.values().begin(), inst.values().end());
    ASSERT_GE(reference::kth_largest(v, 40) - reference::kth_largest(v, 41), spec.gap - 1e-12);
    ASSERT_EQ(std::count_if(v.begin(), v.end(), [&](double x) { return x > spec.t_star; }), 40);
    for (double x : v) {
      ASSERT_GE(x, 0.0);
      ASSERT_LE(x, 1.0);
    }
  }
}

TEST(GapInstance, NearTieBandIsPopulated) {
  GapInstanceSpec spec;
  spec.n = 1000;
  spec.k = 50;
  spec.eta = 0.05;
  spec.gap = 0.05;
  const Instance inst = generate_gap_instance(spec);
  const auto v = inst.values();
  // k-th at t* + gap/2, then the (k+1)-th and 2k near ties in [t* - eta, t* - gap/2].
  const auto in_band = std::count_if(v.begin(), v.end(), [](double x) {
    return x >= 0.45 && x <= 0.475;
  });
  EXPECT_EQ(in_band, 101);
  // Remainder well below: nothing in (0.4, 0.45).
  EXPECT_EQ(std::count_if(v.begin(), v.end(), [](double x) { return x > 0.4 && x < 0.45; }), 0);
}

TEST(GapInstance, NoNearTiesGivesSmallMass) {
  GapInstanceSpec spec;
  spec.n = 1000;
  spec.k = 50;
  spec.near_ties = 0;
  const Instance inst = generate_gap_instance(spec);
  // Within 0.06 of t*: the k-th and (k+1)-th items plus whichever top items
  // landed just above the threshold.
  EXPECT_EQ(near_tie_mass(inst, 0.0), 1u);
  const auto v = inst.values();
  const auto above = std::count_if(v.begin(), v.end(), [&](double x) {
    return x > inst.threshold() && x <= inst.threshold() + 0.06;
  });
  EXPECT_EQ(near_tie_mass(inst, 0.06), static_cast<std::size_t>(above) + 2);
}

TEST(GapInstance, DeterministicInSeed) {
  GapInstanceSpec spec;
  spec.n = 500;
  spec.k = 10;
  spec.seed = 9;
  std::ostringstream a, b;
  write_instance(a, generate_gap_instance(spec));
  write_instance(b, generate_gap_instance(spec));
  EXPECT_EQ(a.str(), b.str());
  spec.seed = 10;
  std::ostringstream c;
  write_instance(c, generate_gap_instance(spec));
  EXPECT_NE(a.str(), c.str());
}

TEST(GapInstance, RejectsInfeasibleSpecs) {
  GapInstanceSpec spec;
  spec.n = 100;
  spec.k = 100;
  EXPECT_THROW(generate_gap_instance(spec), ParameterError);
  spec.k = 10;
  spec.eta = 0.01;  // below gap/2
  EXPECT_THROW(generate_gap_instance(spec), ParameterError);
  spec.eta.reset();
  spec.gap = 0.0;
  EXPECT_THROW(generate_gap_instance(spec), ParameterError);
  spec.gap = 0.5;  // band leaves no room for the remainder
  EXPECT_THROW(generate_gap_instance(spec), ParameterError);
}

TEST(Packing, PrescribedIntervalsAndAmbiguity) {
  for (std::size_t m : {50u, 100u, 200u}) {
    PackingSpec spec;
    spec.m = m;
    const auto packed = generate_packing_instance(spec, random_planted_set(spec, 5));
    const diagnostics::GroundTruth truth(packed.instance);
    EXPECT_TRUE(diagnostics::coverage_event_holds(truth, packed.intervals));
    const auto a = ambiguous_set(packed.intervals, spec.k);
    EXPECT_EQ(a.size(), m);
    for (ItemId x = 0; x < m; ++x) EXPECT_EQ(a[x], x);
    const auto band = boundary_band(packed.intervals, spec.k);
    for (ItemId x = m; x < spec.n; ++x) EXPECT_LT(packed.intervals.upper(x), band.lower_k);
    EXPECT_GE(near_tie_mass(packed.instance, epsilon_max(packed.intervals)), m);
    EXPECT_EQ(true_top_k(packed.instance), packed.planted);

    Oracles oracles(packed.instance, NoiseModel::exact(), 1);
    EXPECT_EQ(brute_force_certify(oracles, spec.k).output, packed.planted);
  }
}

TEST(Packing, Validation) {
  PackingSpec spec;
  spec.gap = 0.1;  // not above 2 eps
  EXPECT_THROW(spec.validate(), ParameterError);
  spec = PackingSpec{};
  spec.m = 5;  // below k
  EXPECT_THROW(spec.validate(), ParameterError);
  spec = PackingSpec{};
  spec.level = 0.2;  // level - gap - 2 eps <= 0
  EXPECT_THROW(spec.validate(), ParameterError);
  spec = PackingSpec{};
  EXPECT_THROW(generate_packing_instance(spec, {0, 1, 2}), ParameterError);
  EXPECT_THROW(generate_packing_instance(spec, {0, 1, 2, 3, 4, 5, 6, 7, 8, 60}), ParameterError);
  EXPECT_THROW(generate_packing_instance(spec, {0, 0, 2, 3, 4, 5, 6, 7, 8, 9}), ParameterError);
}

TEST(Packing, WeakSigmaReproducesRadius) {
  const double sigma = packing_weak_sigma(0.05, 12, 1e-4);
  EXPECT_NEAR(subgaussian_radius(sigma, 12, 1e-4), 0.05, 1e-12);
}

TEST(InstanceCsv, RoundTrip) {
  const Instance inst({0.1, 0.30000000000000004, 1.0, 0.0}, 2);
  std::stringstream buf;
  write_instance(buf, inst);
  const Instance back = read_instance(buf, 2);
  EXPECT_EQ(std::vector<double>(back.values().begin(), back.values().end()),
            std::vector<double>(inst.values().begin(), inst.values().end()));
}

TEST(InstanceCsv, WellFormedFile) {
  std::istringstream in("item_id,value\n0,0.5\n2,0.25\n1,0.75\n");
  const Instance inst = read_instance(in, 1);
  EXPECT_EQ(inst.size(), 3u);
  EXPECT_EQ(inst.value(1), 0.75);
  EXPECT_EQ(inst.value(2), 0.25);
}

namespace {

std::string error_of(const std::string& text) {
  std::istringstream in(text);
  try {
    read_instance(in, 1);
  } catch (const InstanceFormatError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(InstanceCsv, ValidationErrorsNameTheLine) {
  EXPECT_NE(error_of("item_id,value\n0,0.5\n1,1.2\n").find("line 3"), std::string::npos);
  EXPECT_NE(error_of("item_id,value\n0,0.5\n0,0.4\n").find("duplicate"), std::string::npos);
  EXPECT_NE(error_of("item_id,value\n0,0.5\n2,0.4\n").find("contiguous"), std::string::npos);
  EXPECT_NE(error_of("id,value\n0,0.5\n").find("header"), std::string::npos);
  EXPECT_NE(error_of("item_id,value\n0,abc\n").find("line 2"), std::string::npos);
  EXPECT_NE(error_of("item_id,value\n0\n").find("line 2"), std::string::npos);
  EXPECT_NE(error_of("item_id,value\n").find("no rows"), std::string::npos);
  EXPECT_THROW(load_instance("/nonexistent/instance.csv", 1), InstanceFormatError);
}
