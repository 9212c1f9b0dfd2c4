#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include "spinlab/model.hpp"

using namespace spinlab;

TEST_CASE("nearest neighbour couplings on small lattices") {
  SECTION("single open edge") {
    const CouplingTable t = nearest_neighbour_couplings({2}, 1.0, 1.0, false);
    REQUIRE(t.size() == 1);
    const auto& [mask, c] = *t.entries().begin();
    REQUIRE(mask == 0b11ull);
    REQUIRE(c.j1 == 1.0);
    REQUIRE(c.j2 == 1.0);
  }

  SECTION("2x2 open plaquette has four edges") {
    const CouplingTable t = nearest_neighbour_couplings({2, 2}, 1.0, 0.5, false);
    REQUIRE(t.size() == 4);
    for (const auto& [mask, c] : t.entries()) {
      REQUIRE(subset_size(mask) == 2);
      REQUIRE(c.j2 == 0.5);
    }
  }

  SECTION("periodic 3-chain includes the wrap edge") {
    const CouplingTable t = nearest_neighbour_couplings({3}, 1.0, 0.0, true);
    REQUIRE(t.size() == 3);
    REQUIRE(t.contains(0b101ull));  // {0, 2}
  }

  SECTION("periodic side of length 2 does not duplicate the edge") {
    const CouplingTable t = nearest_neighbour_couplings({2}, 1.0, 0.0, true);
    REQUIRE(t.size() == 1);
  }
}

TEST_CASE("edge counts match the closed forms") {
  for (int d = 1; d <= 3; ++d) {
    for (int side = 2; side <= 4; ++side) {
      long n_sites = 1;
      for (int i = 0; i < d; ++i) n_sites *= side;
      if (n_sites > 64) continue;
      const std::vector<int> dims(static_cast<std::size_t>(d), side);

      long open_expected = 1;
      for (int i = 0; i < d - 1; ++i) open_expected *= side;
      open_expected *= d * (side - 1);
      REQUIRE(static_cast<long>(nearest_neighbour_couplings(dims, 1, 0, false).size()) ==
              open_expected);

      if (side >= 3) {
        long periodic_expected = d;
        for (int i = 0; i < d; ++i) periodic_expected *= side;
        REQUIRE(static_cast<long>(nearest_neighbour_couplings(dims, 1, 0, true).size()) ==
                periodic_expected);
      }
    }
  }
}

TEST_CASE("lattice size caps") {
  REQUIRE_THROWS_AS(nearest_neighbour_couplings({65}, 1, 0, false), validation_error);
  REQUIRE_THROWS_AS(nearest_neighbour_couplings({8, 9}, 1, 0, false), validation_error);
  REQUIRE_NOTHROW(nearest_neighbour_couplings({64}, 1, 0, false));
}

TEST_CASE("coupling table invariants") {
  CouplingTable t;
  REQUIRE_THROWS_AS(t.add(0, 1.0), validation_error);
  t.add(0b11, 1.0, 0.5);
  REQUIRE_THROWS_AS(t.add(0b11, 2.0), validation_error);

  SECTION("ascending iteration order") {
    t.add(0b1, 0.1);
    t.add(0b110, 0.2);
    Subset prev = 0;
    for (const auto& [mask, c] : t.entries()) {
      (void)c;
      REQUIRE(mask > prev);
      prev = mask;
    }
  }

  SECTION("ferromagnetic flag is monotone under nonnegative additions") {
    Rng rng(7);
    CouplingTable table;
    for (int k = 0; k < 20; ++k) {
      table.adjust(1 + static_cast<Subset>(rng.uniform_int(0, 14)), 1,
                   rng.uniform(0.0, 2.0));
      REQUIRE(table.ferromagnetic());
    }
    table.adjust(0b1, 2, -0.5);
    REQUIRE_FALSE(table.ferromagnetic());
  }
}

TEST_CASE("kitaev builder") {
  SECTION("1x1 plaquette: four vertex stars and one face") {
    const CouplingTable t = kitaev_couplings(1, 1, {1, 1, 1, 1}, {2.0});
    REQUIRE(t.axes() == AxisPair::one_three);
    int stars = 0, faces = 0;
    for (const auto& [mask, c] : t.entries()) {
      if (c.j2 != 0.0) {
        ++faces;
        REQUIRE(subset_size(mask) == 4);
        REQUIRE(c.j2 == 2.0);
      } else {
        ++stars;
        REQUIRE(subset_size(mask) == 2);  // corner vertices on 1x1
      }
    }
    REQUIRE(stars == 4);
    REQUIRE(faces == 1);
    REQUIRE(t.ferromagnetic());
  }

  SECTION("2x1 has two faces of size four") {
    const KitaevLattice lat{2, 1};
    REQUIRE(lat.edges() == 7);
    const CouplingTable t =
        kitaev_couplings(2, 1, std::vector<double>(6, 1.0), {1.0, 1.0});
    int faces = 0;
    for (const auto& [mask, c] : t.entries())
      if (c.j2 != 0.0) {
        ++faces;
        REQUIRE(subset_size(mask) == 4);
      }
    REQUIRE(faces == 2);
  }

  SECTION("edge budget") {
    REQUIRE_THROWS_AS(kitaev_couplings(10, 10, std::vector<double>(121, 1.0),
                                       std::vector<double>(100, 1.0)),
                      validation_error);
  }
}

namespace {

ModelSpec random_spec(std::uint64_t seed) {
  Rng rng(seed);
  ModelSpec spec;
  const int n = static_cast<int>(rng.uniform_int(1, 6));
  spec.sites = SiteSet(n);
  const bool quantum = rng.uniform() < 0.5;
  const AxisPair axes =
      quantum && rng.uniform() < 0.5 ? AxisPair::one_three : AxisPair::one_two;
  spec.couplings =
      CouplingTable(quantum ? ModelKind::quantum_xy : ModelKind::classical_xy, axes);
  spec.twice_spin = static_cast<int>(rng.uniform_int(1, 3));
  spec.beta = rng.uniform(0.1, 3.0);
  const int entries = static_cast<int>(rng.uniform_int(1, 2 * n));
  for (int e = 0; e < entries; ++e) {
    const Subset mask = 1 + static_cast<Subset>(rng.uniform_int(0, (1 << n) - 2));
    if (spec.couplings.contains(mask)) continue;
    spec.couplings.add(mask, rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
  }
  return spec;
}

}  // namespace

TEST_CASE("model json round trip") {
  const auto tmp = std::filesystem::temp_directory_path() / "spinlab_model_rt.json";
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const ModelSpec spec = random_spec(seed);
    save_model(spec, tmp.string());
    const ModelSpec back = load_model(tmp.string());
    REQUIRE(model_to_json(back) == model_to_json(spec));
  }
  std::filesystem::remove(tmp);
}

TEST_CASE("model json validation") {
  SECTION("minimal single-site file") {
    const ModelSpec spec = model_from_json(json::parse(
        R"({"model":"quantum-xy","sites":1,"spin":"1/2","beta":1.0,
            "couplings":[{"subset":[0],"j1":1.0}]})"));
    REQUIRE(spec.sites.count == 1);
    REQUIRE(spec.twice_spin == 1);
    REQUIRE(spec.kind() == ModelKind::quantum_xy);
  }

  SECTION("empty-subset coupling rejected") {
    REQUIRE_THROWS_MATCHES(
        model_from_json(json::parse(
            R"({"model":"ising","sites":2,"beta":1.0,
                "couplings":[{"subset":[],"j1":1.0}]})")),
        validation_error,
        Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("couplings[0]")));
  }

  SECTION("duplicate subsets rejected") {
    REQUIRE_THROWS_MATCHES(
        model_from_json(json::parse(
            R"({"model":"ising","sites":2,"beta":1.0,
                "couplings":[{"subset":[0,1],"j1":1.0},{"subset":[0,1],"j1":2.0}]})")),
        validation_error,
        Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("couplings[1]")));
  }

  SECTION("unsorted subset rejected") {
    REQUIRE_THROWS_AS(model_from_json(json::parse(
                          R"({"model":"ising","sites":3,"beta":1.0,
                              "couplings":[{"subset":[1,0],"j1":1.0}]})")),
                      validation_error);
  }

  SECTION("negative beta reported with field path") {
    REQUIRE_THROWS_MATCHES(
        model_from_json(json::parse(
            R"({"model":"ising","sites":2,"beta":-1.0,"couplings":[]})")),
        validation_error,
        Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("beta")));
  }

  SECTION("out-of-range site reported with field path") {
    REQUIRE_THROWS_MATCHES(
        model_from_json(json::parse(
            R"({"model":"ising","sites":2,"beta":1.0,
                "couplings":[{"subset":[0,5],"j1":1.0}]})")),
        validation_error,
        Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("couplings[0]")));
  }

  SECTION("oversize lattice rejected") {
    REQUIRE_THROWS_AS(model_from_json(json::parse(
                          R"({"model":"ising","sites":65,"beta":1.0,"couplings":[]})")),
                      validation_error);
  }

  SECTION("nonzero j2 rejected for ising") {
    REQUIRE_THROWS_AS(model_from_json(json::parse(
                          R"({"model":"ising","sites":2,"beta":1.0,
                              "couplings":[{"subset":[0,1],"j1":1.0,"j2":0.5}]})")),
                      validation_error);
  }

  SECTION("coupling values must be numbers") {
    REQUIRE_THROWS_MATCHES(
        model_from_json(json::parse(
            R"({"model":"ising","sites":2,"beta":1.0,
                "couplings":[{"subset":[0,1],"j1":"strong"}]})")),
        validation_error,
        Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("j1")));
  }
}
