#pragma once

// JSON serialization with deterministic key order: spectra list coefficients
// sorted by (level, index, orientation), and reports round-trip so every
// published witness can be re-evaluated.

#include <json.hpp>

#include "paraprod/atom.hpp"
#include "paraprod/fourier.hpp"
#include "paraprod/norms.hpp"
#include "paraprod/opnorm.hpp"
#include "paraprod/sparse.hpp"

namespace paraprod {

using ordered_json = nlohmann::ordered_json;

inline ordered_json to_json(const DyadicCube& q) {
  return ordered_json{{"level", q.level}, {"index", q.index}};
}

inline DyadicCube cube_from_json(const ordered_json& j) {
  DyadicCube q;
  q.level = j.at("level").get<int>();
  q.index = j.at("index").get<std::vector<int>>();
  validate(q);
  return q;
}

inline ordered_json to_json(const Signal& f) {
  return ordered_json{
      {"dim", f.dim}, {"resolution", f.resolution}, {"values", f.values}};
}

inline Signal signal_from_json(const ordered_json& j) {
  Signal f;
  f.dim = j.at("dim").get<int>();
  f.resolution = j.at("resolution").get<int>();
  f.values = j.at("values").get<std::vector<double>>();
  require(f.values.size() == cell_count(f.dim, f.resolution),
          "signal value count does not match the grid");
  return f;
}

inline ordered_json to_json(const HaarSpectrum& s) {
  ordered_json coeffs = ordered_json::array();
  for (const auto& [key, c] : s.coeffs)
    coeffs.push_back(ordered_json{{"level", key.cube.level},
                                  {"index", key.cube.index},
                                  {"orientation", key.orient.bits},
                                  {"value", c}});
  return ordered_json{{"dim", s.dim},
                      {"max_level", s.max_level},
                      {"mean", s.mean},
                      {"coeffs", coeffs}};
}

inline HaarSpectrum spectrum_from_json(const ordered_json& j) {
  HaarSpectrum s;
  s.dim = j.at("dim").get<int>();
  s.max_level = j.at("max_level").get<int>();
  s.mean = j.at("mean").get<double>();
  for (const auto& e : j.at("coeffs")) {
    DyadicCube q{e.at("level").get<int>(),
                 e.at("index").get<std::vector<int>>()};
    Orientation i{e.at("orientation").get<std::vector<int>>()};
    validate(q);
    validate(i);
    s.set(q, i, e.at("value").get<double>());
  }
  return s;
}

inline ordered_json to_json(const NormReport& r) {
  ordered_json j{{"kind", to_string(r.kind)},
                 {"exponents", ordered_json{{"p", r.p}, {"alpha", r.alpha}}},
                 {"value", r.value}};
  j["witness"] = r.witness ? to_json(*r.witness) : ordered_json(nullptr);
  return j;
}

inline ordered_json to_json(const SparseFamily& fam) {
  ordered_json entries = ordered_json::array();
  for (const auto& e : fam.entries) {
    ordered_json entry{{"cube", to_json(e.cube)}};
    entry["lambda"] = e.lambda ? ordered_json(*e.lambda) : ordered_json("-inf");
    entry["witness_cells"] = e.witness_cells;
    entries.push_back(std::move(entry));
  }
  return ordered_json{{"eta", fam.eta},
                      {"dim", fam.dim},
                      {"resolution", fam.resolution},
                      {"entries", entries}};
}

inline ordered_json to_json(const LLOCertificate& c) {
  ordered_json checks = ordered_json::array();
  for (const auto& chk : c.checks)
    checks.push_back(ordered_json{
        {"name", chk.name}, {"pass", chk.pass}, {"value", chk.value}});
  return ordered_json{{"pass", c.pass},
                      {"domination_constant", c.domination_constant},
                      {"checks", checks}};
}

inline ordered_json to_json(const LPFamily& fam) {
  ordered_json j{{"log2_n", fam.log2_n},
                 {"a", fam.a},
                 {"b", fam.b},
                 {"a_prime", fam.a_prime},
                 {"plateau_c", fam.plateau_c},
                 {"j_min", fam.j_min},
                 {"j_max", fam.j_max},
                 {"m", fam.m},
                 {"covered_band",
                  ordered_json{{"lo", fam.certificate.band_lo},
                               {"hi", fam.certificate.band_hi}}},
                 {"partition_residual", fam.certificate.residual}};
  j["psi"] = fam.psi;
  ordered_json phi = ordered_json::array();
  const size_t n = fam.samples();
  for (int jj = fam.j_min; jj <= fam.j_max; ++jj) {
    std::vector<double> row(n);
    for (size_t idx = 0; idx < n; ++idx)
      row[idx] = fam.phi_hat_at_scale(jj, physical_frequency(idx, n));
    phi.push_back(row);
  }
  j["phi"] = std::move(phi);
  return j;
}

inline ordered_json to_json(const Atom& a) {
  return ordered_json{{"dim", a.dim},
                      {"big_radius", a.big_radius},
                      {"far_center_distance", a.far_center_distance},
                      {"poly_degree", a.poly_degree},
                      {"poly", ordered_json{{"exponents", a.poly.exponents},
                                            {"coeffs", a.poly.coeffs}}}};
}

inline ordered_json to_json(const OperatorNormEstimate& e) {
  return ordered_json{{"lower_bound", e.lower_bound},
                      {"method", to_string(e.method)},
                      {"candidates_tried", e.candidates_tried},
                      {"witness", to_json(e.witness)}};
}

}  // namespace paraprod
