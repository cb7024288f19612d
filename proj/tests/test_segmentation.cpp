#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "fiberorient/phantom.hpp"
#include "fiberorient/segmentation.hpp"
#include "oracles.hpp"

using namespace fiberorient;

namespace {

Histogram histogram_from_counts(const std::array<std::uint64_t, 256>& counts, double lo = 0.0,
                                double hi = 255.0) {
  Histogram h;
  h.lo = lo;
  h.hi = hi;
  h.counts = counts;
  for (auto c : counts) h.total += c;
  return h;
}

}  // namespace

TEST_CASE("two well-separated values threshold strictly between them", "[segmentation]") {
  Volume v({10, 10, 10});
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = i % 2 ? 10.0f : 200.0f;
  const Histogram h = build_histogram(v);
  const double t = otsu_threshold(h);
  REQUIRE(t > 10.0);
  REQUIRE(t < 200.0);
}

TEST_CASE("single-valued histogram raises a degenerate error", "[segmentation]") {
  const Volume v({4, 4, 4}, {1, 1, 1}, 7.0f);
  const Histogram h = build_histogram(v);
  REQUIRE_THROWS_AS(otsu_threshold(h), NumericError);
}

TEST_CASE("otsu equals the exhaustive between-class-variance search", "[segmentation]") {
  std::mt19937_64 rng(2024);

  SECTION("bimodal gaussian mixtures") {
    for (int rep = 0; rep < 20; ++rep) {
      Volume v({16, 16, 16});
      std::normal_distribution<double> lo(60.0, 12.0), hi(180.0, 18.0);
      std::bernoulli_distribution pick(0.4);
      for (auto& x : v.data())
        x = static_cast<float>(std::clamp(pick(rng) ? hi(rng) : lo(rng), 0.0, 255.0));
      const Histogram h = build_histogram(v);
      REQUIRE(otsu_bin(h) == oracle::otsu_exhaustive(h));
    }
  }

  SECTION("random count histograms") {
    std::uniform_int_distribution<std::uint64_t> count(0, 5000);
    for (int rep = 0; rep < 100; ++rep) {
      std::array<std::uint64_t, 256> counts{};
      for (auto& c : counts) c = count(rng);
      const Histogram h = histogram_from_counts(counts);
      REQUIRE(otsu_bin(h) == oracle::otsu_exhaustive(h));
    }
  }
}

TEST_CASE("otsu bin selection is invariant under positive affine maps", "[segmentation]") {
  const Volume v = oracle::random_u8_volume({12, 12, 12}, 31);
  const Histogram h0 = build_histogram(v);
  Volume w = v;
  for (auto& x : w.data()) x = 2.0f * x + 10.0f;
  const Histogram h1 = build_histogram(w);
  REQUIRE(otsu_bin(h0) == otsu_bin(h1));
}

TEST_CASE("histogram counts every considered voxel exactly once", "[segmentation]") {
  const Volume v = oracle::random_volume({9, 8, 7}, 12);
  const Mask m = oracle::random_mask({9, 8, 7}, 13, 0.3);
  const Histogram h = build_histogram(v, &m);
  std::uint64_t expected = 0;
  for (auto b : m.data()) expected += b;
  REQUIRE(h.total == expected);
  std::uint64_t total = 0;
  for (auto c : h.counts) total += c;
  REQUIRE(total == expected);
}

TEST_CASE("opening keeps a uniform above-threshold volume intact", "[segmentation]") {
  const Volume v({6, 6, 6}, {1, 1, 1}, 100.0f);
  const Mask m = part_mask(v, 50.0);
  for (auto b : m.data()) REQUIRE(b == 1);
}

TEST_CASE("opening removes a single isolated voxel", "[segmentation]") {
  Volume v({7, 7, 7}, {1, 1, 1}, 0.0f);
  v(3, 3, 3) = 100.0f;
  const Mask m = part_mask(v, 50.0);
  for (auto b : m.data()) REQUIRE(b == 0);
}

TEST_CASE("separable opening equals the naive 27-neighborhood oracle", "[segmentation]") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const Mask m = oracle::random_mask({12, 11, 10}, seed, 0.7);
    const Mask got = morphological_opening(m, 2);
    const Mask want = oracle::dilate27(oracle::erode27(m));
    REQUIRE(got.data() == want.data());
  }
}

TEST_CASE("opening is idempotent and anti-extensive", "[segmentation]") {
  const Mask m = oracle::random_mask({14, 13, 12}, 77, 0.6);
  const Mask once = morphological_opening(m);
  const Mask twice = morphological_opening(once);
  REQUIRE(once.data() == twice.data());
  for (std::size_t i = 0; i < m.size(); ++i) REQUIRE(once[i] <= m[i]);
}

TEST_CASE("all-true mask stays all-true under opening", "[segmentation]") {
  Mask m({5, 5, 5});
  for (auto& b : m.data()) b = 1;
  const Mask o = morphological_opening(m);
  for (auto b : o.data()) REQUIRE(b == 1);
}

TEST_CASE("fiber mask is empty when the factor pushes past the max gray", "[segmentation]") {
  Volume v({8, 8, 8});
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = i % 2 ? 80.0f : 200.0f;
  Mask part(v.dims());
  for (auto& b : part.data()) b = 1;
  const Mask f = fiber_mask(v, part, 100.0);
  for (auto b : f.data()) REQUIRE(b == 0);
}

TEST_CASE("factor 1 reduces to the plain otsu split inside the part", "[segmentation]") {
  Volume v({10, 10, 10});
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = i % 3 ? 60.0f : 190.0f;
  Mask part(v.dims());
  for (auto& b : part.data()) b = 1;
  const Mask f = fiber_mask(v, part, 1.0);
  const double t = otsu_threshold(build_histogram(v, &part));
  for (std::size_t i = 0; i < v.size(); ++i) REQUIRE((f[i] != 0) == (v[i] >= t));
}

TEST_CASE("fiber mask stays inside the part mask", "[segmentation]") {
  const Volume v = oracle::random_volume({12, 12, 12}, 5, 0.0f, 255.0f);
  const Mask part = part_mask(v, 60.0);
  bool part_nonempty = false;
  for (auto b : part.data()) part_nonempty |= b != 0;
  if (!part_nonempty) return;  // degenerate draw
  const Mask f = fiber_mask(v, part, 1.25);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (f[i]) REQUIRE(part[i] == 1);
  }
}

TEST_CASE("fiber mask excludes matrix-only voxels of a phantom", "[segmentation]") {
  PhantomGrays grays;
  grays.air = 0.0;
  grays.matrix = 50.0;
  grays.fiber = 200.0;
  const PhantomResult ph =
      gen_straight_bundle({48, 48, 48}, {1, 1, 1}, {0, 1, 0}, 3.0, 20, 9, grays, 0.0);
  Mask part(ph.volume.dims());
  for (auto& b : part.data()) b = 1;
  const Mask f = fiber_mask(ph.volume, part, 1.25);

  std::size_t n_fiber = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i]) {
      ++n_fiber;
      // never a matrix-only voxel: those have exactly the matrix gray
      REQUIRE(ph.volume[i] > 50.0f);
    }
  }
  REQUIRE(n_fiber > 0);

  // voxels fully inside a fiber carry the fiber gray and must be kept
  std::size_t n_core = 0, n_core_masked = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (ph.volume[i] == 200.0f) {
      ++n_core;
      n_core_masked += f[i] ? 1 : 0;
    }
  }
  REQUIRE(n_core > 0);
  REQUIRE(n_core_masked == n_core);

  REQUIRE_THROWS_AS(fiber_mask(ph.volume, part, 0.0), ArgumentError);
  REQUIRE_THROWS_AS(fiber_mask(ph.volume, part, -1.0), ArgumentError);
}
