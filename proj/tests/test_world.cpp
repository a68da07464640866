#include <doctest.h>

#include <cmath>
#include <vector>

#include "travnav/world.hpp"

using namespace travnav;

TEST_CASE("traction_at composes base values and patches") {
  SUBCASE("no patches returns base values everywhere") {
    TractionField f;
    f.base_mu = 0.9;
    f.base_nu = 0.9;
    const auto p = f.traction_at(123.4, -56.7);
    CHECK(p.mu == 0.9);
    CHECK(p.nu == 0.9);
  }
  SUBCASE("inside a patch the patch mu wins") {
    TractionField f;
    f.patches.push_back({5, 0, 1, 0, 0});
    CHECK(f.traction_at(5, 0.5).mu == 0.0);
    CHECK(f.traction_at(5, 1.5).mu == f.base_mu);
  }
  SUBCASE("patch boundary is inside (closed disk)") {
    TractionField f;
    f.patches.push_back({5, 0, 1, 0.2, 0});
    CHECK(f.traction_at(6, 0).mu == 0.2);  // distance exactly = radius
  }
  SUBCASE("innermost (smallest radius) overlapping patch wins") {
    TractionField f;
    f.patches.push_back({0, 0, 2, 0.5, 0});
    f.patches.push_back({0, 0, 1, 0.1, 0});
    CHECK(f.traction_at(0.2, 0).mu == 0.1);
    CHECK(f.traction_at(1.5, 0).mu == 0.5);
  }
}

TEST_CASE("sim_step wraps integrate_step plus process noise") {
  TractionField f;
  f.base_mu = 0.7;
  f.base_nu = 0.8;

  SUBCASE("zero noise equals the deterministic integrator") {
    Rng rng(1);
    const State2D x0{0.1, 0.2, 0.3};
    const ControlInput u{1, 0.5};
    const State2D a = sim_step(x0, u, f, ProcessNoise{0, 0}, 0.05, rng);
    const State2D b = integrate_step(x0, u, TractionParams{0.7, 0.8}, 0.05);
    CHECK(a.px == b.px);
    CHECK(a.py == b.py);
    CHECK(a.theta == b.theta);
  }
  SUBCASE("inside a mu=0 patch position never moves (zero noise)") {
    TractionField g;
    g.patches.push_back({0, 0, 1, 0, 0});
    Rng rng(2);
    State2D x{0, 0, 0};
    for (int i = 0; i < 50; ++i) x = sim_step(x, {1, 0.3}, g, ProcessNoise{0, 0}, 0.05, rng);
    CHECK(x.px == 0.0);
    CHECK(x.py == 0.0);
  }
  SUBCASE("fixed seed gives a bit-identical trajectory") {
    auto run = [&] {
      Rng rng(99);
      std::vector<State2D> traj;
      State2D x{0, 0, 0};
      for (int i = 0; i < 100; ++i) {
        x = sim_step(x, {0.8, 0.4}, f, ProcessNoise{0.02, 0.01}, 0.05, rng);
        traj.push_back(x);
      }
      return traj;
    };
    const auto a = run(), b = run();
    for (size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].px == b[i].px);
      CHECK(a[i].py == b[i].py);
      CHECK(a[i].theta == b[i].theta);
    }
  }
}

TEST_CASE("sample_sensors models GNSS, compass offset, and gyro") {
  SUBCASE("zero noise, zero offset reproduces the truth") {
    Rng rng(1);
    const auto [z, gyro] =
        sample_sensors({1.5, -2.5, 0.8}, 0.3, SensorNoise{0, 0, 0, 0}, 1.0, rng);
    CHECK(z.z_x == 1.5);
    CHECK(z.z_y == -2.5);
    CHECK(z.z_theta == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(gyro == 0.3);
    CHECK(z.timestamp == 1.0);
  }
  SUBCASE("compass reads heading minus the true offset") {
    Rng rng(1);
    const auto [z, gyro] =
        sample_sensors({0, 0, 1.0}, 0, SensorNoise{0, 0, 0, 0.3}, 0.0, rng);
    (void)gyro;
    CHECK(z.z_theta == doctest::Approx(0.7).epsilon(1e-12));
  }
  SUBCASE("gnss noise std matches the configured sigma") {
    Rng rng(7);
    SensorNoise n;
    n.gnss_sigma = 0.1;
    double sum = 0, sum2 = 0;
    const int trials = 10000;
    for (int i = 0; i < trials; ++i) {
      const auto [z, gyro] = sample_sensors({0, 0, 0}, 0, n, i, rng);
      (void)gyro;
      sum += z.z_x;
      sum2 += z.z_x * z.z_x;
    }
    const double mean = sum / trials;
    const double std = std::sqrt(sum2 / trials - mean * mean);
    CHECK(std > 0.095);
    CHECK(std < 0.105);
  }
}

TEST_CASE("Rng is deterministic and well-behaved") {
  SUBCASE("same seed gives identical streams") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  }
  SUBCASE("derived streams differ") {
    Rng a = Rng::stream(42, 0), b = Rng::stream(42, 1);
    int same = 0;
    for (int i = 0; i < 64; ++i) same += (a.next_u64() == b.next_u64());
    CHECK(same == 0);
  }
  SUBCASE("uniform_disk stays inside the radius") {
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
      double dx, dy;
      rng.uniform_disk(0.3, dx, dy);
      CHECK(std::hypot(dx, dy) <= 0.3);
    }
  }
  SUBCASE("normal draws have roughly unit variance") {
    Rng rng(6);
    double sum = 0, sum2 = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
      const double x = rng.normal();
      sum += x;
      sum2 += x * x;
    }
    CHECK(std::abs(sum / n) < 0.03);
    CHECK(std::abs(sum2 / n - 1.0) < 0.05);
  }
}
