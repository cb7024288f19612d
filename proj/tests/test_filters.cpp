#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fiberorient/eigen_sym3.hpp"
#include "fiberorient/filters.hpp"
#include "oracles.hpp"

using namespace fiberorient;

TEST_CASE("smoothing kernels normalize to unit sum", "[filters]") {
  for (double sigma : {0.5, 1.0, 2.0, 3.7, 8.0}) {
    const Kernel1D k = gaussian_kernel(sigma);
    REQUIRE(k.taps.size() % 2 == 1);
    REQUIRE(std::abs(k.sum() - 1.0) < 1e-9);
    REQUIRE(static_cast<int>(k.taps.size()) == 2 * static_cast<int>(std::ceil(3.0 * sigma)) + 1);
  }
  REQUIRE(std::abs(binomial3_kernel().sum() - 1.0) < 1e-12);
  REQUIRE_THROWS_AS(gaussian_kernel(-0.1), ArgumentError);
}

TEST_CASE("mirror index folds out-of-range offsets symmetrically", "[filters]") {
  REQUIRE(mirror_index(-1, 5) == 0);
  REQUIRE(mirror_index(-2, 5) == 1);
  REQUIRE(mirror_index(5, 5) == 4);
  REQUIRE(mirror_index(6, 5) == 3);
  REQUIRE(mirror_index(0, 1) == 0);
  REQUIRE(mirror_index(-7, 1) == 0);
  for (int i = 0; i < 5; ++i) REQUIRE(mirror_index(i, 5) == i);
}

TEST_CASE("smoothing preserves constants", "[filters]") {
  const Volume v({9, 8, 7}, {1, 1, 1}, 42.0f);
  for (double sigma : {0.8, 2.0}) {
    const Volume s = gaussian_smooth(v, {sigma, sigma, sigma});
    for (float x : s.data()) REQUIRE(x == Catch::Approx(42.0f).margin(1e-4));
  }
}

TEST_CASE("impulse response is the sampled normalized 3D gaussian", "[filters]") {
  const int n = 9, c = 4;
  Volume v({n, n, n});
  v(c, c, c) = 1.0f;
  const Volume s = gaussian_smooth(v, {1.0, 1.0, 1.0});
  const Kernel1D k = gaussian_kernel(1.0);
  const int r = k.radius();
  for (int z = 0; z < n; ++z)
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        double expected = 0.0;
        if (std::abs(x - c) <= r && std::abs(y - c) <= r && std::abs(z - c) <= r) {
          expected = k.taps[static_cast<std::size_t>(x - c + r)] *
                     k.taps[static_cast<std::size_t>(y - c + r)] *
                     k.taps[static_cast<std::size_t>(z - c + r)];
        }
        REQUIRE(s(x, y, z) == Catch::Approx(expected).margin(1e-6));
      }
}

TEST_CASE("fallback kernel puts (2/4)^3 on the impulse center", "[filters]") {
  Volume v({7, 7, 7});
  v(3, 3, 3) = 1.0f;
  const Volume s = binomial_smooth(v);
  REQUIRE(s(3, 3, 3) == Catch::Approx(0.125).margin(1e-7));
  REQUIRE(s(2, 3, 3) == Catch::Approx(0.0625).margin(1e-7));
  REQUIRE(s(2, 2, 3) == Catch::Approx(0.03125).margin(1e-7));
  REQUIRE(s(2, 2, 2) == Catch::Approx(0.015625).margin(1e-7));
  REQUIRE(s(0, 3, 3) == Catch::Approx(0.0).margin(1e-9));
}

TEST_CASE("separable smoothing equals dense 3D convolution", "[filters]") {
  const Volume v = oracle::random_volume({16, 16, 16}, 8);
  const Kernel1D k = gaussian_kernel(1.3);
  const Volume sep = gaussian_smooth(v, {1.3, 1.3, 1.3}, 2);
  const Volume dense = oracle::dense_convolve(v, k.taps, k.taps, k.taps);
  for (std::size_t i = 0; i < sep.size(); ++i)
    REQUIRE(sep[i] == Catch::Approx(dense[i]).margin(1e-5 * 255.0));
}

TEST_CASE("smoothing conserves the volume mean under mirror boundaries", "[filters]") {
  const Volume v = oracle::random_volume({10, 9, 8}, 44);
  const Volume s = gaussian_smooth(v, {2.0, 1.0, 3.0});
  double m0 = 0, m1 = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    m0 += v[i];
    m1 += s[i];
  }
  m0 /= static_cast<double>(v.size());
  m1 /= static_cast<double>(v.size());
  REQUIRE(std::abs(m1 - m0) <= 1e-5 * std::abs(m0));
}

TEST_CASE("negative sigma is rejected", "[filters]") {
  const Volume v({4, 4, 4});
  REQUIRE_THROWS_AS(gaussian_smooth(v, {1.0, -1.0, 1.0}), ArgumentError);
}

TEST_CASE("hessian of a linear ramp vanishes in the interior", "[filters]") {
  Volume v({8, 8, 8});
  for (int z = 0; z < 8; ++z)
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) v(x, y, z) = 0.5f * x + 0.25f * y + 1.0f * z;
  const TensorField h = hessian_field(v);
  for (int z = 1; z < 7; ++z)
    for (int y = 1; y < 7; ++y)
      for (int x = 1; x < 7; ++x)
        for (int c = 0; c < 6; ++c)
          REQUIRE(h(x, y, z)[static_cast<std::size_t>(c)] == 0.0f);
}

TEST_CASE("hessian of x^2 is exactly 2 on the xx component", "[filters]") {
  Volume v({8, 8, 8});
  for (int z = 0; z < 8; ++z)
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) v(x, y, z) = static_cast<float>(x * x);
  const TensorField h = hessian_field(v);
  for (int z = 1; z < 7; ++z)
    for (int y = 1; y < 7; ++y)
      for (int x = 1; x < 7; ++x) {
        REQUIRE(h(x, y, z)[0] == 2.0f);
        for (int c = 1; c < 6; ++c) REQUIRE(h(x, y, z)[static_cast<std::size_t>(c)] == 0.0f);
      }
}

TEST_CASE("hessian matches the analytic gaussian ridge curvature", "[filters]") {
  // Ridge along y: g = exp(-(x^2+z^2)/(2 sigma^2)); on the axis the analytic
  // Hessian is diag(-1/sigma^2, 0, -1/sigma^2) times g.
  const double sigma = 4.0;
  const int n = 33, c = 16;
  Volume v({n, n, n});
  for (int z = 0; z < n; ++z)
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        const double dx = x - c, dz = z - c;
        v(x, y, z) = static_cast<float>(std::exp(-(dx * dx + dz * dz) / (2.0 * sigma * sigma)));
      }
  const TensorField h = hessian_field(v);
  const double expected = -1.0 / (sigma * sigma);
  for (int y = 4; y < n - 4; ++y) {
    const auto hc = h(c, y, c);
    REQUIRE(hc[0] == Catch::Approx(expected).epsilon(0.02));
    REQUIRE(hc[2] == Catch::Approx(expected).epsilon(0.02));
    REQUIRE(std::abs(hc[1]) < 1e-3 * std::abs(expected));
    REQUIRE(hc[0] < 0.0f);
    REQUIRE(hc[2] < 0.0f);
  }
}

TEST_CASE("hessian scales mixed terms by the spacing product", "[filters]") {
  Volume v({8, 8, 8}, {2.0, 4.0, 1.0});
  for (int z = 0; z < 8; ++z)
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) v(x, y, z) = static_cast<float>(x * y);
  const TensorField h = hessian_field(v);
  // d2/dxdy in voxel units is 1; physical scaling divides by sx*sy = 8.
  REQUIRE(h(4, 4, 4)[3] == Catch::Approx(1.0 / 8.0));
}

TEST_CASE("axis transposition permutes hessian components", "[filters]") {
  const Volume v = oracle::random_volume({10, 10, 10}, 17);
  Volume t(v.dims(), v.spacing);
  for (int z = 0; z < 10; ++z)
    for (int y = 0; y < 10; ++y)
      for (int x = 0; x < 10; ++x) t(y, x, z) = v(x, y, z);

  const TensorField hv = hessian_field(v);
  const TensorField ht = hessian_field(t);
  for (int z = 0; z < 10; ++z)
    for (int y = 0; y < 10; ++y)
      for (int x = 0; x < 10; ++x) {
        const auto& a = hv(x, y, z);
        const auto& b = ht(y, x, z);
        REQUIRE(b[0] == Catch::Approx(a[1]).margin(1e-4));  // xx' = yy
        REQUIRE(b[1] == Catch::Approx(a[0]).margin(1e-4));  // yy' = xx
        REQUIRE(b[2] == Catch::Approx(a[2]).margin(1e-4));
        REQUIRE(b[3] == Catch::Approx(a[3]).margin(1e-4));  // xy symmetric under swap
        REQUIRE(b[4] == Catch::Approx(a[5]).margin(1e-4));  // xz' = yz
        REQUIRE(b[5] == Catch::Approx(a[4]).margin(1e-4));  // yz' = xz
      }
}

TEST_CASE("structure tensor of a constant volume is zero", "[filters]") {
  const Volume v({8, 8, 8}, {1, 1, 1}, 33.0f);
  const TensorField st = structure_tensor_field(v, 1.0, 1.0);
  for (std::size_t i = 0; i < st.size(); ++i)
    for (int c = 0; c < 6; ++c)
      REQUIRE(std::abs(st[i][static_cast<std::size_t>(c)]) < 1e-6);
}

TEST_CASE("structure tensor smallest eigenvector follows a cylinder axis", "[filters]") {
  // One straight fiber through the volume center along y.
  const int n = 24;
  Volume v({n, n, n});
  const double r = 3.0, cx = n / 2.0, cz = n / 2.0;
  for (int z = 0; z < n; ++z)
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        const double d2 = (x + 0.5 - cx) * (x + 0.5 - cx) + (z + 0.5 - cz) * (z + 0.5 - cz);
        v(x, y, z) = d2 <= r * r ? 200.0f : 80.0f;
      }
  const Volume s = gaussian_smooth(v, {1.0, 1.0, 1.0});
  const TensorField st = structure_tensor_field(s, 2.0, 3.0);

  for (int y = 6; y < n - 6; ++y) {
    const SymMat3 t = SymMat3::from_array(st(n / 2, y, n / 2));
    const EigenDecomposition e = eigen_sym3(t);
    const double ang = rad_to_deg(axis_angle(e.min_value_vector(), {0, 1, 0}));
    REQUIRE(ang < 5.0);
  }
}
