#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "spinlab/ising.hpp"

using namespace spinlab;
using Catch::Approx;

namespace {

// Independent oracle: plain 0..2^N-1 loop, energy recomputed from scratch
// per configuration. No Gray code, no incremental updates.
struct NaiveIsing {
  const IsingInstance& inst;

  double energy(std::uint64_t config) const {
    double e = 0.0;
    for (const auto& [mask, j] : inst.couplings) {
      int prod = 1;
      for (int x : subset_sites(mask)) prod *= (config >> x) & 1 ? -1 : 1;
      e -= j * prod;
    }
    return e;
  }

  double partition() const {
    double z = 0.0;
    for (std::uint64_t c = 0; c < (1ull << inst.sites.count); ++c)
      z += std::exp(-inst.beta * energy(c));
    return z;
  }

  double expectation(Subset x) const {
    double z = 0.0, acc = 0.0;
    for (std::uint64_t c = 0; c < (1ull << inst.sites.count); ++c) {
      const double w = std::exp(-inst.beta * energy(c));
      int prod = 1;
      for (int s : subset_sites(x)) prod *= (c >> s) & 1 ? -1 : 1;
      z += w;
      acc += w * prod;
    }
    return acc / z;
  }

  double truncated(Subset x, Subset y) const {
    return expectation(x ^ y) - expectation(x) * expectation(y);
  }
};

IsingInstance pair_instance(double j, double beta) {
  return IsingInstance(SiteSet(2), {{0b11, j}}, beta);
}

IsingInstance random_ferromagnetic(std::uint64_t seed, int n) {
  Rng rng(seed);
  std::map<Subset, double> j;
  const int entries = static_cast<int>(rng.uniform_int(1, 2 * n));
  for (int e = 0; e < entries; ++e)
    j[1 + static_cast<Subset>(rng.uniform_int(0, (1 << n) - 2))] = rng.uniform(0.0, 2.0);
  return IsingInstance(SiteSet(n), std::move(j), rng.uniform(0.1, 2.0));
}

}  // namespace

TEST_CASE("configuration energies") {
  const IsingInstance pair = pair_instance(1.0, 1.0);
  REQUIRE(ising_energy(pair, 0b00) == -1.0);  // (+,+)
  REQUIRE(ising_energy(pair, 0b10) == +1.0);  // (+,-)

  // triangle, unit couplings, spins (+,+,-): edges contribute +1, -1, -1
  const IsingInstance triangle(SiteSet(3), {{0b011, 1.0}, {0b110, 1.0}, {0b101, 1.0}},
                               1.0);
  REQUIRE(ising_energy(triangle, 0b100) == +1.0);

  REQUIRE_THROWS_AS(ising_energy(pair, 0b100), validation_error);
}

TEST_CASE("partition function") {
  SECTION("free spins") {
    const IsingInstance free1(SiteSet(1), {}, 1.0);
    REQUIRE(ising_partition(free1) == Approx(2.0).epsilon(1e-14));
  }

  SECTION("two-site closed form 2e + 2/e") {
    const double z = ising_partition(pair_instance(1.0, 1.0));
    REQUIRE(z == Approx(2.0 * std::exp(1.0) + 2.0 * std::exp(-1.0)).epsilon(1e-13));
  }

  SECTION("lower bound 2^N exp(-beta max|H|)") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
      const IsingInstance inst = random_ferromagnetic(seed, 4);
      const double bound =
          std::exp(4 * std::log(2.0) - inst.beta * inst.abs_sum());
      REQUIRE(ising_partition(inst) >= bound);
    }
  }

  SECTION("log-domain at large beta*J") {
    // beta sum|J| = 1000 forces the shifted two-pass path
    const IsingInstance hot = pair_instance(100.0, 10.0);
    const double expected = 1000.0 + std::log(2.0) + std::log1p(std::exp(-2000.0));
    REQUIRE(ising_log_partition(hot) == Approx(expected).epsilon(1e-13));
    // expectations stay finite ratios in that regime
    REQUIRE(ising_expectation(hot, 0b11) == Approx(1.0).margin(1e-13));
    REQUIRE(std::abs(ising_expectation(hot, 0b01)) < 1e-13);
  }

  SECTION("agrees with the naive enumerator") {
    Rng rng(11);
    std::map<Subset, double> j;
    for (int e = 0; e < 5; ++e)
      j[1 + static_cast<Subset>(rng.uniform_int(0, 14))] = rng.uniform(-2.0, 2.0);
    const IsingInstance inst(SiteSet(4), std::move(j), 0.8);
    REQUIRE(ising_partition(inst) == Approx(NaiveIsing{inst}.partition()).epsilon(1e-12));
  }
}

TEST_CASE("expectations") {
  SECTION("empty observable is the identity") {
    const IsingInstance inst = random_ferromagnetic(3, 3);
    REQUIRE(ising_expectation(inst, 0) == 1.0);
  }

  SECTION("two-site pair gives tanh(beta J)") {
    REQUIRE(ising_expectation(pair_instance(1.0, 1.0), 0b11) ==
            Approx(std::tanh(1.0)).epsilon(1e-13));
    REQUIRE(ising_expectation(pair_instance(0.7, 1.3), 0b11) ==
            Approx(std::tanh(0.7 * 1.3)).epsilon(1e-13));
  }

  SECTION("free spin has zero magnetisation") {
    const IsingInstance free1(SiteSet(1), {}, 1.0);
    REQUIRE(ising_expectation(free1, 0b1) == 0.0);
  }
}

TEST_CASE("truncated correlations") {
  SECTION("X = Y is a variance") {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      const IsingInstance inst = random_ferromagnetic(seed, 3);
      const double e = ising_expectation(inst, 0b1);
      REQUIRE(ising_truncated(inst, 0b1, 0b1) == Approx(1.0 - e * e).margin(1e-13));
      REQUIRE(ising_truncated(inst, 0b1, 0b1) >= 0.0);
    }
  }

  SECTION("two-site cross correlation") {
    REQUIRE(ising_truncated(pair_instance(1.0, 1.0), 0b01, 0b10) ==
            Approx(std::tanh(1.0)).epsilon(1e-13));
  }

  SECTION("random ferromagnetic instances: nonnegative, matches oracle") {
    for (std::uint64_t seed = 10; seed < 30; ++seed) {
      const IsingInstance inst = random_ferromagnetic(seed, 3);
      Rng rng(seed * 31);
      const Subset x = 1 + static_cast<Subset>(rng.uniform_int(0, 6));
      const Subset y = 1 + static_cast<Subset>(rng.uniform_int(0, 6));
      const double t = ising_truncated(inst, x, y);
      REQUIRE(t == Approx(NaiveIsing{inst}.truncated(x, y)).margin(1e-12));
      REQUIRE(t >= -1e-12);
    }
  }
}

TEST_CASE("spin-flip symmetry") {
  // couplings on even subsets only: every odd product has zero expectation
  Rng rng(5);
  std::map<Subset, double> j;
  j[0b0011] = rng.uniform(0.0, 2.0);
  j[0b0110] = rng.uniform(0.0, 2.0);
  j[0b1111] = rng.uniform(0.0, 2.0);
  const IsingInstance inst(SiteSet(4), std::move(j), 1.1);
  for (Subset x : {0b1ull, 0b100ull, 0b111ull, 0b1110ull})
    REQUIRE(std::abs(ising_expectation(inst, x)) < 1e-13);
}

TEST_CASE("coupling monotonicity by finite differences") {
  const double h = 1e-4;
  for (std::uint64_t seed = 40; seed < 46; ++seed) {
    IsingInstance inst = random_ferromagnetic(seed, 3);
    Rng rng(seed + 100);
    const Subset x = 1 + static_cast<Subset>(rng.uniform_int(0, 6));
    const Subset a = 1 + static_cast<Subset>(rng.uniform_int(0, 6));
    IsingInstance plus = inst, minus = inst;
    plus.couplings[a] += h;
    minus.couplings[a] -= h;
    const double derivative =
        (ising_expectation(plus, x) - ising_expectation(minus, x)) / (2 * h);
    REQUIRE(derivative >= -1e-9);
  }
}

TEST_CASE("open chains match the transfer-matrix product") {
  Rng rng(17);
  const int n = 5;
  std::map<Subset, double> j;
  std::vector<double> bond(n - 1);
  for (int k = 0; k < n - 1; ++k) {
    bond[static_cast<std::size_t>(k)] = rng.uniform(0.0, 2.0);
    j[(1ull << k) | (1ull << (k + 1))] = bond[static_cast<std::size_t>(k)];
  }
  const double beta = 0.9;
  const IsingInstance chain(SiteSet(n), std::move(j), beta);

  for (int i = 0; i < n; ++i) {
    REQUIRE(std::abs(ising_expectation(chain, 1ull << i)) < 1e-13);
    for (int k = i + 1; k < n; ++k) {
      double expected = 1.0;
      for (int b = i; b < k; ++b)
        expected *= std::tanh(beta * bond[static_cast<std::size_t>(b)]);
      const double got = ising_expectation(chain, (1ull << i) | (1ull << k));
      REQUIRE(got == Approx(expected).margin(1e-12));
    }
  }
}

TEST_CASE("enumeration budget") {
  REQUIRE_THROWS_AS(IsingInstance(SiteSet(25), {}, 1.0), budget_error);
  REQUIRE_THROWS_AS(IsingInstance(SiteSet(2), {{0b11, 1.0}}, 0.0), validation_error);
  REQUIRE_THROWS_AS(IsingInstance(SiteSet(2), {{0b100, 1.0}}, 1.0), validation_error);
}
