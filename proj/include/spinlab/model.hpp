#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spinlab/common.hpp"

// Lattices, site subsets, coupling tables and model builders. Subsets of the
// site set are encoded as 64-bit masks, which caps lattices at 64 sites and
// makes subset products a popcount away.

namespace spinlab {

using json = nlohmann::ordered_json;

constexpr int kMaxSites = 64;
constexpr int kMaxIsingSites = 24;          // 2^24 states for full enumeration
constexpr long kMaxQuantumDim = 16384;      // (2S+1)^N cap for dense solves
constexpr int kMaxQuadratureSites = 5;

// ----- sites and subsets -----

enum class GeometryKind { chain, square, cubic, kitaev_edges };

struct Geometry {
  GeometryKind kind;
  std::vector<int> dims;
  bool periodic = false;
};

struct SiteSet {
  int count = 0;
  std::optional<Geometry> geometry;

  explicit SiteSet(int n = 1) : count(n) {
    if (n < 1 || n > kMaxSites)
      throw validation_error("sites: need 1 <= N <= 64, got " + std::to_string(n));
  }

  std::uint64_t full_mask() const {
    return count == 64 ? ~0ull : ((1ull << count) - 1);
  }
};

using Subset = std::uint64_t;

inline int subset_size(Subset s) { return std::popcount(s); }

inline std::vector<int> subset_sites(Subset s) {
  std::vector<int> out;
  while (s) {
    out.push_back(std::countr_zero(s));
    s &= s - 1;
  }
  return out;
}

inline Subset subset_from_sites(const std::vector<int>& sites, int n_sites) {
  Subset m = 0;
  for (int x : sites) {
    if (x < 0 || x >= n_sites)
      throw validation_error("subset: site " + std::to_string(x) + " out of range");
    m |= 1ull << x;
  }
  return m;
}

// ----- coupling tables -----

enum class ModelKind { classical_xy, quantum_xy, ising };
enum class AxisPair { one_two, one_three };

inline const char* model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::classical_xy: return "classical-xy";
    case ModelKind::quantum_xy:   return "quantum-xy";
    case ModelKind::ising:        return "ising";
  }
  return "?";
}

struct Coupling {
  double j1 = 0.0;
  double j2 = 0.0;
};

// Map subset -> coupling pair. Iteration is in ascending mask order, which
// keeps every downstream loop deterministic. Entries on the empty subset are
// rejected: they only shift the energy by a constant but would silently
// change partition-function values.
class CouplingTable {
 public:
  explicit CouplingTable(ModelKind kind = ModelKind::classical_xy,
                         AxisPair axes = AxisPair::one_two)
      : kind_(kind), axes_(axes) {}

  ModelKind kind() const { return kind_; }
  AxisPair axes() const { return axes_; }

  void add(Subset subset, double j1, double j2 = 0.0) {
    if (subset == 0) throw validation_error("couplings: empty subset not allowed");
    auto [it, inserted] = entries_.try_emplace(subset, Coupling{j1, j2});
    if (!inserted) throw validation_error("couplings: duplicate subset");
  }

  // Sums into an existing entry, creating it if absent. Used by the harness
  // for finite-difference perturbations.
  void adjust(Subset subset, int axis, double delta) {
    if (subset == 0) throw validation_error("couplings: empty subset not allowed");
    Coupling& c = entries_[subset];
    (axis == 1 ? c.j1 : c.j2) += delta;
  }

  bool contains(Subset s) const { return entries_.count(s) != 0; }
  std::size_t size() const { return entries_.size(); }
  const std::map<Subset, Coupling>& entries() const { return entries_; }

  // true iff every coupling on both axes is nonnegative
  bool ferromagnetic() const {
    for (const auto& [mask, c] : entries_)
      if (c.j1 < 0.0 || c.j2 < 0.0) return false;
    return true;
  }

  double abs_sum() const {
    double s = 0.0;
    for (const auto& [mask, c] : entries_) s += std::abs(c.j1) + std::abs(c.j2);
    return s;
  }

 private:
  std::map<Subset, Coupling> entries_;
  ModelKind kind_;
  AxisPair axes_;
};

// ----- model spec -----

struct ModelSpec {
  SiteSet sites{1};
  CouplingTable couplings;
  int twice_spin = 1;  // spin S as 2S; quantum models only
  double beta = 1.0;

  ModelKind kind() const { return couplings.kind(); }
  double spin() const { return 0.5 * twice_spin; }
  long site_dim() const { return twice_spin + 1; }

  long quantum_dim() const {
    long dim = 1;
    for (int i = 0; i < sites.count; ++i) {
      if (dim > kMaxQuantumDim / site_dim())
        throw budget_error("quantum dimension (2S+1)^N exceeds 16384");
      dim *= site_dim();
    }
    return dim;
  }
};

inline void validate(const ModelSpec& spec) {
  if (spec.beta <= 0.0) throw validation_error("beta: must be positive");
  if (spec.twice_spin < 1) throw validation_error("spin: must be at least 1/2");
  const Subset full = spec.sites.full_mask();
  for (const auto& [mask, c] : spec.couplings.entries()) {
    if (mask & ~full) throw validation_error("couplings: subset has out-of-range site");
    if (spec.kind() == ModelKind::ising && c.j2 != 0.0)
      throw validation_error("couplings: j2 must be 0 for ising models");
  }
}

// ----- builders -----

// Nearest-neighbour pair couplings on a d-dimensional box. Every edge gets
// the same (j1, j2). With periodic wrapping on a side of length 2 the wrap
// edge coincides with the open edge and is added once.
inline CouplingTable nearest_neighbour_couplings(const std::vector<int>& dims,
                                                 double j1, double j2,
                                                 bool periodic,
                                                 ModelKind kind = ModelKind::classical_xy) {
  if (dims.empty()) throw validation_error("dims: need at least one dimension");
  long n = 1;
  for (int d : dims) {
    if (d < 1) throw validation_error("dims: each dimension must be >= 1");
    n *= d;
    if (n > kMaxSites) throw validation_error("dims: site count exceeds 64");
  }

  const int nd = static_cast<int>(dims.size());
  std::vector<long> stride(dims.size(), 1);
  for (int d = nd - 2; d >= 0; --d) stride[d] = stride[d + 1] * dims[d + 1];

  CouplingTable table(kind);
  std::vector<int> idx(dims.size(), 0);
  for (long site = 0; site < n; ++site) {
    for (int d = 0; d < nd; ++d) {
      long nb = -1;
      if (idx[d] + 1 < dims[d]) {
        nb = site + stride[d];
      } else if (periodic && dims[d] > 1) {
        nb = site - static_cast<long>(idx[d]) * stride[d];
      }
      if (nb >= 0) {
        Subset pair = (1ull << site) | (1ull << nb);
        if (!table.contains(pair)) table.add(pair, j1, j2);
      }
    }
    for (int d = nd - 1; d >= 0; --d) {
      if (++idx[d] < dims[d]) break;
      idx[d] = 0;
    }
  }
  return table;
}

// Kitaev-style couplings on a width x height square lattice whose SITES are
// the lattice edges. Axis 1 holds one star term per vertex (all incident
// edges), axis 2 holds one term per complete unit square (its four boundary
// edges); the table is tagged with the 1-3 axis convention so the quantum
// engine assembles the second axis along the third spin direction. Partial
// boundary faces are not included.
struct KitaevLattice {
  int width, height;

  int vertices() const { return (width + 1) * (height + 1); }
  int faces() const { return width * height; }
  int edges() const { return width * (height + 1) + (width + 1) * height; }

  int horizontal_edge(int i, int j) const { return j * width + i; }
  int vertical_edge(int i, int j) const {
    return width * (height + 1) + j * (width + 1) + i;
  }
};

inline CouplingTable kitaev_couplings(int width, int height,
                                      const std::vector<double>& jx,
                                      const std::vector<double>& jf) {
  if (width < 1 || height < 1)
    throw validation_error("kitaev: width and height must be >= 1");
  KitaevLattice lat{width, height};
  if (lat.edges() > kMaxSites)
    throw validation_error("kitaev: edge count exceeds 64");
  if (static_cast<int>(jx.size()) != lat.vertices())
    throw validation_error("kitaev: need one vertex coupling per vertex");
  if (static_cast<int>(jf.size()) != lat.faces())
    throw validation_error("kitaev: need one face coupling per face");

  CouplingTable table(ModelKind::quantum_xy, AxisPair::one_three);
  for (int j = 0; j <= height; ++j)
    for (int i = 0; i <= width; ++i) {
      Subset star = 0;
      if (i > 0) star |= 1ull << lat.horizontal_edge(i - 1, j);
      if (i < width) star |= 1ull << lat.horizontal_edge(i, j);
      if (j > 0) star |= 1ull << lat.vertical_edge(i, j - 1);
      if (j < height) star |= 1ull << lat.vertical_edge(i, j);
      table.add(star, jx[static_cast<std::size_t>(j * (width + 1) + i)], 0.0);
    }
  for (int j = 0; j < height; ++j)
    for (int i = 0; i < width; ++i) {
      Subset face = (1ull << lat.horizontal_edge(i, j)) |
                    (1ull << lat.horizontal_edge(i, j + 1)) |
                    (1ull << lat.vertical_edge(i, j)) |
                    (1ull << lat.vertical_edge(i + 1, j));
      table.adjust(face, 2, jf[static_cast<std::size_t>(j * width + i)]);
    }
  return table;
}

// ----- JSON model files -----
//
// { "model": "classical-xy", "sites": 4, "spin": "1/2", "beta": 1.0,
//   "couplings": [ { "subset": [0,1], "j1": 1.0, "j2": 0.5 }, ... ] }
//
// Subset arrays must be sorted ascending; duplicate subsets are an error.

namespace detail {

inline ModelKind parse_model_kind(const std::string& s, const std::string& path) {
  if (s == "classical-xy") return ModelKind::classical_xy;
  if (s == "quantum-xy") return ModelKind::quantum_xy;
  if (s == "ising") return ModelKind::ising;
  throw validation_error(path + ": unknown model '" + s + "'");
}

inline int parse_twice_spin(const json& v, const std::string& path) {
  if (v.is_number_integer()) {
    const long s = v.get<long>();
    if (s < 1) throw validation_error(path + ": spin must be >= 1/2");
    return static_cast<int>(2 * s);
  }
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    const auto slash = s.find('/');
    try {
      if (slash == std::string::npos) {
        const int whole = std::stoi(s);
        if (whole < 1) throw validation_error("");
        return 2 * whole;
      }
      const int num = std::stoi(s.substr(0, slash));
      const int den = std::stoi(s.substr(slash + 1));
      if (den != 2 || num < 1) throw validation_error("");
      return num;
    } catch (const std::exception&) {
      throw validation_error(path + ": spin must look like \"1/2\", \"1\", \"3/2\"");
    }
  }
  throw validation_error(path + ": spin must be an integer or a string");
}

inline std::string format_twice_spin(int twice_spin) {
  if (twice_spin % 2 == 0) return std::to_string(twice_spin / 2);
  return std::to_string(twice_spin) + "/2";
}

inline const char* geometry_kind_name(GeometryKind k) {
  switch (k) {
    case GeometryKind::chain:        return "chain";
    case GeometryKind::square:       return "square";
    case GeometryKind::cubic:        return "cubic";
    case GeometryKind::kitaev_edges: return "kitaev-edges";
  }
  return "?";
}

inline GeometryKind parse_geometry_kind(const std::string& s, const std::string& path) {
  if (s == "chain") return GeometryKind::chain;
  if (s == "square") return GeometryKind::square;
  if (s == "cubic") return GeometryKind::cubic;
  if (s == "kitaev-edges") return GeometryKind::kitaev_edges;
  throw validation_error(path + ": unknown geometry '" + s + "'");
}

}  // namespace detail

inline ModelSpec model_from_json(const json& j) {
  if (!j.is_object()) throw validation_error("$: model file must be a JSON object");

  auto require = [&](const char* key) -> const json& {
    auto it = j.find(key);
    if (it == j.end())
      throw validation_error(std::string(key) + ": missing required field");
    return *it;
  };

  const json& model_v = require("model");
  if (!model_v.is_string()) throw validation_error("model: must be a string");
  const ModelKind kind = detail::parse_model_kind(model_v.get<std::string>(), "model");

  const json& sites_v = require("sites");
  if (!sites_v.is_number_integer()) throw validation_error("sites: must be an integer");
  const long n_sites = sites_v.get<long>();
  if (n_sites < 1 || n_sites > kMaxSites)
    throw validation_error("sites: need 1 <= N <= 64");

  const json& beta_v = require("beta");
  if (!beta_v.is_number()) throw validation_error("beta: must be a number");
  const double beta = beta_v.get<double>();
  if (!(beta > 0.0)) throw validation_error("beta: must be positive");

  int twice_spin = 1;
  if (auto it = j.find("spin"); it != j.end())
    twice_spin = detail::parse_twice_spin(*it, "spin");

  AxisPair axes = AxisPair::one_two;
  if (auto it = j.find("axes"); it != j.end()) {
    const std::string a = it->get<std::string>();
    if (a == "1-2") axes = AxisPair::one_two;
    else if (a == "1-3") axes = AxisPair::one_three;
    else throw validation_error("axes: must be \"1-2\" or \"1-3\"");
  }

  ModelSpec spec;
  spec.sites = SiteSet(static_cast<int>(n_sites));
  spec.couplings = CouplingTable(kind, axes);
  spec.twice_spin = twice_spin;
  spec.beta = beta;

  if (auto it = j.find("geometry"); it != j.end()) {
    const json& g = *it;
    if (!g.is_object()) throw validation_error("geometry: must be an object");
    Geometry geom;
    geom.kind = detail::parse_geometry_kind(g.value("kind", std::string()), "geometry.kind");
    if (auto d = g.find("dims"); d != g.end())
      geom.dims = d->get<std::vector<int>>();
    geom.periodic = g.value("periodic", false);
    spec.sites.geometry = geom;
  }

  const json& cpl = require("couplings");
  if (!cpl.is_array()) throw validation_error("couplings: must be an array");
  for (std::size_t i = 0; i < cpl.size(); ++i) {
    const std::string path = "couplings[" + std::to_string(i) + "]";
    const json& e = cpl[i];
    if (!e.is_object()) throw validation_error(path + ": must be an object");
    auto sub_it = e.find("subset");
    if (sub_it == e.end() || !sub_it->is_array())
      throw validation_error(path + ".subset: must be an array of site indices");
    std::vector<int> sites;
    for (const json& v : *sub_it) {
      if (!v.is_number_integer())
        throw validation_error(path + ".subset: must contain integers");
      sites.push_back(v.get<int>());
    }
    if (sites.empty())
      throw validation_error(path + ".subset: empty subset not allowed");
    if (!std::is_sorted(sites.begin(), sites.end()) ||
        std::adjacent_find(sites.begin(), sites.end()) != sites.end())
      throw validation_error(path + ".subset: sites must be strictly ascending");
    Subset mask;
    try {
      mask = subset_from_sites(sites, spec.sites.count);
    } catch (const validation_error& err) {
      throw validation_error(path + ".subset: " + err.what());
    }
    auto number_field = [&](const char* key) {
      auto f = e.find(key);
      if (f == e.end()) return 0.0;
      if (!f->is_number())
        throw validation_error(path + "." + key + ": must be a number");
      return f->get<double>();
    };
    const double j1 = number_field("j1");
    const double j2 = number_field("j2");
    if (kind == ModelKind::ising && j2 != 0.0)
      throw validation_error(path + ".j2: must be 0 for ising models");
    try {
      spec.couplings.add(mask, j1, j2);
    } catch (const validation_error&) {
      throw validation_error(path + ".subset: duplicate subset");
    }
  }

  validate(spec);
  return spec;
}

inline json model_to_json(const ModelSpec& spec) {
  json j;
  j["model"] = model_kind_name(spec.kind());
  j["sites"] = spec.sites.count;
  if (spec.kind() == ModelKind::quantum_xy)
    j["spin"] = detail::format_twice_spin(spec.twice_spin);
  j["beta"] = spec.beta;
  if (spec.couplings.axes() == AxisPair::one_three) j["axes"] = "1-3";
  if (spec.sites.geometry) {
    const Geometry& g = *spec.sites.geometry;
    json gj;
    gj["kind"] = detail::geometry_kind_name(g.kind);
    gj["dims"] = g.dims;
    gj["periodic"] = g.periodic;
    j["geometry"] = gj;
  }
  json cpl = json::array();
  for (const auto& [mask, c] : spec.couplings.entries()) {
    json e;
    e["subset"] = subset_sites(mask);
    e["j1"] = c.j1;
    if (spec.kind() != ModelKind::ising) e["j2"] = c.j2;
    cpl.push_back(std::move(e));
  }
  j["couplings"] = std::move(cpl);
  return j;
}

inline ModelSpec load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open model file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw validation_error("parse error in " + path + ": " + e.what());
  }
  return model_from_json(j);
}

inline void save_model(const ModelSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw validation_error("cannot write model file: " + path);
  out << model_to_json(spec).dump(2) << '\n';
}

}  // namespace spinlab
