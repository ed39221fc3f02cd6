#pragma once

// Versioned binary files for spectral data and bound-state branches: an
// 8-byte magic, a JSON header with its length, then raw field records.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <string>

#include "json.hpp"
#include "nlscm/error.hpp"
#include "nlscm/ground_state_manifold.hpp"
#include "nlscm/linear_hamiltonian.hpp"

namespace nlscm {

inline nlohmann::json to_json(const GridSpec& g) { return {{"dimension", g.dim()}, {"r_max", g.r_max()}, {"points", g.size()}}; }

inline nlohmann::json to_json(const PotentialSpec& v) {
  return {{"form", to_string(v.form)}, {"depth", v.depth}, {"width", v.width}};
}

inline nlohmann::json to_json(const NonlinearitySpec& g) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : g.terms()) terms.push_back({{"lambda", t.lambda}, {"alpha", t.alpha}});
  return terms;
}

namespace detail {
inline constexpr char kSpectrumMagic[8] = {'N', 'L', 'S', 'S', 'P', '0', '0', '1'};
inline constexpr char kBranchMagic[8] = {'N', 'L', 'S', 'B', 'R', '0', '0', '1'};
inline constexpr int kFileVersion = 1;

inline void write_header(std::ostream& os, const char (&magic)[8], const nlohmann::json& header) {
  os.write(magic, 8);
  const std::string text = header.dump();
  const std::uint64_t len = text.size();
  os.write(reinterpret_cast<const char*>(&len), sizeof len);
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
}

inline nlohmann::json read_header(std::istream& is, const char (&magic)[8], const std::string& path) {
  char got[8];
  is.read(got, 8);
  if (!is || !std::equal(got, got + 8, magic)) throw FormatError(path + ": wrong file type");
  std::uint64_t len = 0;
  is.read(reinterpret_cast<char*>(&len), sizeof len);
  if (!is || len > (1u << 24)) throw FormatError(path + ": corrupt header length");
  std::string text(len, '\0');
  is.read(text.data(), static_cast<std::streamsize>(len));
  if (!is) throw FormatError(path + ": truncated header");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": header is not valid JSON: " + e.what());
  }
  if (h.value("version", 0) != kFileVersion)
    throw FormatError(path + ": unsupported version " + std::to_string(h.value("version", 0)));
  return h;
}

inline PotentialSpec potential_from_json(const nlohmann::json& j) {
  PotentialSpec v;
  v.form = potential_form_from_string(j.at("form").get<std::string>());
  v.depth = j.at("depth").get<double>();
  v.width = j.at("width").get<double>();
  return v;
}

inline GridSpec grid_from_json(const nlohmann::json& j) {
  return GridSpec(j.at("dimension").get<int>(), j.at("r_max").get<double>(), j.at("points").get<std::int64_t>());
}

inline SpectralData spectrum_from_parts(const PotentialSpec& v, RadialField psi0, const nlohmann::json& h,
                                        const std::string& path) {
  SpectralData sd;
  sd.potential = v;
  sd.hamiltonian = Hamiltonian(psi0.grid(), v);
  sd.psi0 = std::move(psi0);
  sd.E0 = h.at("E0").get<double>();
  sd.second_eigenvalue = h.at("second_eigenvalue").get<double>();
  sd.residual = h.at("residual").get<double>();
  RadialField res = sd.hamiltonian.apply(sd.psi0);
  res.axpy(-sd.E0, sd.psi0);
  if (std::abs(lp_norm(sd.psi0, 2.0) - 1.0) > 1e-12) throw FormatError(path + ": psi0 is not normalized");
  if (lp_norm(res, 2.0) > std::max(1e-8, 10 * sd.residual)) throw FormatError(path + ": psi0 is not an eigenvector");
  return sd;
}

inline nlohmann::json spectrum_header(const SpectralData& sd) {
  return {{"version", kFileVersion},         {"grid", to_json(sd.grid())}, {"potential", to_json(sd.potential)},
          {"E0", sd.E0},                     {"residual", sd.residual},    {"second_eigenvalue", sd.second_eigenvalue}};
}
}  // namespace detail

inline void save_spectrum(const std::string& path, const SpectralData& sd) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path + " for writing");
  detail::write_header(os, detail::kSpectrumMagic, detail::spectrum_header(sd));
  write_binary(os, sd.psi0);
  if (!os) throw FormatError("failed writing " + path);
}

inline SpectralData load_spectrum(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path);
  const auto h = detail::read_header(is, detail::kSpectrumMagic, path);
  RadialField psi0 = read_binary(is);
  if (!(psi0.grid() == detail::grid_from_json(h.at("grid")))) throw FormatError(path + ": grid mismatch");
  return detail::spectrum_from_parts(detail::potential_from_json(h.at("potential")), std::move(psi0), h, path);
}

inline void save_branch(const std::string& path, const BoundStateBranch& b) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path + " for writing");
  nlohmann::json h = detail::spectrum_header(b.spectrum());
  h["nonlinearity"] = to_json(b.nonlinearity());
  h["tolerances"] = {{"residual", b.options().residual_tolerance},
                     {"max_newton_iterations", b.options().max_newton_iterations},
                     {"polish_passes", b.options().polish_passes}};
  h["nodes"] = b.nodes().size();
  detail::write_header(os, detail::kBranchMagic, h);
  write_binary(os, b.spectrum().psi0);
  for (const auto& n : b.nodes()) {
    const double rec[3] = {n.a, n.E, n.newton_residual};
    os.write(reinterpret_cast<const char*>(rec), sizeof rec);
    write_binary(os, n.psi);
  }
  if (!os) throw FormatError("failed writing " + path);
}

/// Loads a branch and re-checks its invariants: anchor at a = 0, uniform
/// spacing, orthogonality of h, <psi0, psi> = a, positivity, residuals.
inline BoundStateBranch load_branch(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path);
  const auto h = detail::read_header(is, detail::kBranchMagic, path);
  RadialField psi0 = read_binary(is);
  const GridSpec grid = detail::grid_from_json(h.at("grid"));
  if (!(psi0.grid() == grid)) throw FormatError(path + ": grid mismatch");
  auto sd = std::make_shared<SpectralData>(
      detail::spectrum_from_parts(detail::potential_from_json(h.at("potential")), std::move(psi0), h, path));
  std::vector<PowerTerm> terms;
  for (const auto& t : h.at("nonlinearity")) terms.push_back({t.at("lambda").get<double>(), t.at("alpha").get<double>()});
  const NonlinearitySpec g(grid.dim(), terms);
  ContinuationOptions opt;
  opt.residual_tolerance = h.at("tolerances").at("residual").get<double>();
  opt.max_newton_iterations = h.at("tolerances").at("max_newton_iterations").get<int>();
  opt.polish_passes = h.at("tolerances").at("polish_passes").get<int>();
  const std::size_t count = h.at("nodes").get<std::size_t>();
  if (count < 3) throw FormatError(path + ": branch has fewer than 3 nodes");

  std::vector<BranchPoint> nodes(count);
  for (std::size_t k = 0; k < count; ++k) {
    double rec[3];
    is.read(reinterpret_cast<char*>(rec), sizeof rec);
    if (!is) throw FormatError(path + ": truncated node record");
    auto& n = nodes[k];
    n.a = rec[0];
    n.E = rec[1];
    n.newton_residual = rec[2];
    n.psi = read_binary(is);
    if (!(n.psi.grid() == grid)) throw FormatError(path + ": node grid mismatch");
    n.h = n.psi;
    n.h.axpy(-n.a, sd->psi0);
  }
  const double da = nodes[1].a;
  if (nodes[0].a != 0.0 || nodes[0].E != sd->E0 || lp_norm(nodes[0].psi, kInf) != 0.0)
    throw FormatError(path + ": first node is not the bifurcation anchor");
  for (std::size_t k = 1; k < count; ++k) {
    const auto& n = nodes[k];
    const std::string at = path + ": node " + std::to_string(k) + " ";
    if (std::abs(n.a - nodes[k - 1].a - da) > 1e-9 * da) throw FormatError(at + "breaks uniform spacing");
    if (std::abs(inner_product(sd->psi0, n.h)) > 1e-10) throw FormatError(at + "h not orthogonal to psi0");
    if (std::abs(inner_product(sd->psi0, n.psi).real() - n.a) > 1e-10) throw FormatError(at + "<psi0, psi> != a");
    for (std::size_t j = 0; j < n.psi.size(); ++j)
      if (!(n.psi[j].real() > 0) || n.psi[j].imag() != 0) throw FormatError(at + "psi not strictly positive");
    if (!(n.newton_residual < opt.residual_tolerance)) throw FormatError(at + "residual above tolerance");
  }
  return BoundStateBranch(std::move(sd), g, std::move(nodes), opt);
}

}  // namespace nlscm
