#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "spinpim/power.hpp"

using namespace spinpim;

TEST_CASE("square wave on-window") {
  const auto w = PowerTrace::square_wave(16e3, 0.25);
  CHECK(w.is_on(0.0));
  CHECK(w.is_on(10e-6));
  CHECK_FALSE(w.is_on(20e-6));
  CHECK_FALSE(w.is_on(15.625e-6));
  CHECK(w.is_on(62.5e-6));
  CHECK(w.next_edge(0.0) == doctest::Approx(15.625e-6));
  CHECK(w.next_edge(20e-6) == doctest::Approx(62.5e-6));
  CHECK(w.next_on(20e-6) == doctest::Approx(62.5e-6));
  CHECK(w.next_on(10e-6) == 10e-6);
}

TEST_CASE("edges are consistent with is_on") {
  std::mt19937_64 rng(1);
  for (double duty : {0.01, 0.25, 0.5, 0.99}) {
    const auto w = PowerTrace::square_wave(16e3, duty);
    double t = 0.0;
    for (int i = 0; i < 500; ++i) {
      const double e = w.next_edge(t);
      REQUIRE(e > t);
      // State is constant on [t, e) and flips at e.
      CHECK(w.is_on(t) == w.is_on(std::nextafter(e, 0.0)));
      CHECK(w.is_on(e) != w.is_on(std::nextafter(e, 0.0)));
      t = e;
    }
  }
}

TEST_CASE("duty 1 is always on") {
  const PowerTrace w;
  CHECK(w.always_on());
  for (double t : {0.0, 1e-9, 1.0, 1e3}) CHECK(w.is_on(t));
  CHECK(w.next_edge(0.5) == kNever);
  CHECK(w.on_time(0.0, 2.0) == doctest::Approx(2.0));
}

TEST_CASE("on-time over whole periods is duty times elapsed") {
  for (double duty : {0.01, 0.25, 0.6}) {
    const auto w = PowerTrace::square_wave(16e3, duty);
    const double p = 1.0 / 16e3;
    for (int k : {1, 7, 100}) CHECK(w.on_time(0.0, k * p) == doctest::Approx(duty * k * p));
    CHECK(w.on_time(3 * p, 5 * p) == doctest::Approx(2 * duty * p));
  }
}

TEST_CASE("invalid traces are rejected") {
  CHECK_THROWS_AS(PowerTrace::square_wave(16e3, 0.0), PowerError);
  CHECK_THROWS_AS(PowerTrace::square_wave(16e3, 1.5), PowerError);
  CHECK_THROWS_AS(PowerTrace::square_wave(0.0, 0.5), PowerError);
  CHECK_THROWS_AS(PowerTrace::explicit_intervals({{2, 3}, {1, 1.5}}), PowerError);
  CHECK_THROWS_AS(PowerTrace::explicit_intervals({{1, 3}, {2, 4}}), PowerError);
  CHECK_THROWS_AS(PowerTrace::explicit_intervals({{1, 1}}), PowerError);
}

TEST_CASE("explicit intervals and the CSV loader") {
  const auto path = std::filesystem::temp_directory_path() / "spinpim_trace.csv";
  std::ofstream(path) << "on_start,on_end\n0,1e-6\n2e-6,5e-6\n";
  const auto w = PowerTrace::load_intervals_csv(path);
  std::filesystem::remove(path);
  REQUIRE(w.intervals().size() == 2);
  CHECK(w.is_on(0.5e-6));
  CHECK_FALSE(w.is_on(1.5e-6));
  CHECK(w.next_on(1.5e-6) == 2e-6);
  CHECK(w.next_edge(3e-6) == 5e-6);
  CHECK(w.next_on(6e-6) == kNever);
  CHECK(w.on_time(0.0, 10e-6) == doctest::Approx(4e-6));
}

TEST_CASE("issue period is max(base, E / budget)") {
  ThrottlePolicy p;
  CHECK(issue_period(0.2e-12, p, 10e-9) == doctest::Approx(10e-9));
  CHECK(issue_period(10e-12, p, 1e-9) >= 50e-9 * (1 - 1e-12));
  p.enabled = false;
  CHECK(issue_period(10e-12, p, 1e-9) == 1e-9);
  p.budget_w = 0;
  CHECK_THROWS_AS(p.validate(), PowerError);
}
