#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ndspec/driver.hpp"
#include "ndspec/errors.hpp"
#include "ndspec/harmonic.hpp"
#include "ndspec/laurent.hpp"
#include "ndspec/matrix_function.hpp"
#include "ndspec/version.hpp"

namespace ndspec {

using Json = nlohmann::ordered_json;

// A matrix spectrum (or factor) as stored on disk: coefficient tables, raw
// grid samples, or coefficient tables of an analytic factor B with the
// spectrum meaning B B^*.
struct SpectrumDocument {
  int n = 0;  // torus dimension
  int d = 0;  // matrix dimension
  std::string representation;  // "laurent" | "grid" | "factor_laurent"
  std::vector<std::vector<LaurentTable>> entries;
  std::vector<int> grid_sizes;
  std::vector<Complex> samples;  // entry-major, row-major grid per entry
  Json metadata = Json::object();
};

struct LoadedSpectrum {
  SpectrumDocument doc;
  MatrixFunction matrix;
  std::vector<int> default_orders;
  std::string digest;
};

namespace detail {

inline std::string ReadFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string Fnv1a64Hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf);
}

inline LaurentTable ParseEntryTerms(const Json& terms, int n) {
  LaurentTable t(n);
  if (!terms.is_array()) throw ParseError("entry term list must be an array");
  for (const auto& term : terms) {
    if (!term.is_object() || !term.contains("k"))
      throw ParseError("coefficient term must be an object with a k index");
    MultiIndex k = term.at("k").get<MultiIndex>();
    if (static_cast<int>(k.size()) != n)
      throw ParseError("coefficient index length does not match n");
    const double re = term.value("re", 0.0);
    const double im = term.value("im", 0.0);
    t.Add(k, Complex(re, im));
  }
  return t;
}

inline Json DumpTable(const LaurentTable& t) {
  Json terms = Json::array();
  for (const auto& [k, c] : t.terms) {
    if (c == Complex(0.0, 0.0)) continue;
    Json term;
    term["k"] = k;
    term["re"] = c.real();
    term["im"] = c.imag();
    terms.push_back(std::move(term));
  }
  return terms;
}

// Coefficient-level conjugate-flip symmetry: c_ij(k) == conj(c_ji(-k)).
inline void ValidateHermitianTables(const SpectrumDocument& doc) {
  double cmax = 0.0;
  for (const auto& row : doc.entries)
    for (const auto& t : row)
      for (const auto& [k, c] : t.terms) cmax = std::max(cmax, std::abs(c));
  const double tol = 1e-12 * (cmax > 0.0 ? cmax : 1.0);
  MultiIndex neg;
  for (int i = 0; i < doc.d; ++i)
    for (int j = 0; j < doc.d; ++j)
      for (const auto& [k, c] : doc.entries[i][j].terms) {
        neg = k;
        for (auto& v : neg) v = -v;
        const auto& other = doc.entries[j][i].terms;
        auto it = other.find(neg);
        const Complex mirror =
            it == other.end() ? Complex(0.0, 0.0) : it->second;
        if (std::abs(c - std::conj(mirror)) > tol)
          throw SymmetryError("coefficient table is not Hermitian at entry (" +
                              std::to_string(i) + "," + std::to_string(j) +
                              ")");
      }
}

inline void ValidateHermitianSamples(const MatrixFunction& s) {
  double smax = 0.0;
  const std::size_t total = s.total();
  for (int i = 0; i < s.rows; ++i)
    for (int j = 0; j < s.cols; ++j) {
      const Complex* e = s.Entry(i, j);
      for (std::size_t g = 0; g < total; ++g)
        smax = std::max(smax, std::abs(e[g]));
    }
  const double tol = 1e-12 * (smax > 0.0 ? smax : 1.0);
  for (int i = 0; i < s.rows; ++i)
    for (int j = i; j < s.cols; ++j) {
      const Complex* a = s.Entry(i, j);
      const Complex* b = s.Entry(j, i);
      for (std::size_t g = 0; g < total; ++g)
        if (std::abs(a[g] - std::conj(b[g])) > tol)
          throw SymmetryError("grid samples are not pointwise Hermitian");
    }
}

inline int Pow2CeilIo(int v) {
  int p = 1;
  while (p < v) p <<= 1;
  return p;
}

}  // namespace detail

inline SpectrumDocument ParseSpectrumJson(const Json& j) {
  SpectrumDocument doc;
  try {
    doc.n = j.at("n").get<int>();
    doc.d = j.at("d").get<int>();
    doc.representation = j.at("representation").get<std::string>();
    if (j.contains("metadata")) doc.metadata = j.at("metadata");
    if (doc.n < 1 || doc.n > 8) throw ParseError("n out of range");
    if (doc.d < 1 || doc.d > 64) throw ParseError("d out of range");
    if (doc.representation == "laurent" ||
        doc.representation == "factor_laurent") {
      const Json& rows = j.at("entries");
      if (!rows.is_array() || static_cast<int>(rows.size()) != doc.d)
        throw ParseError("entries must be a d x d array");
      doc.entries.resize(doc.d);
      for (int i = 0; i < doc.d; ++i) {
        if (!rows[i].is_array() || static_cast<int>(rows[i].size()) != doc.d)
          throw ParseError("entries must be a d x d array");
        for (int jj = 0; jj < doc.d; ++jj)
          doc.entries[i].push_back(detail::ParseEntryTerms(rows[i][jj], doc.n));
      }
    } else if (doc.representation == "grid") {
      doc.grid_sizes = j.at("grid_sizes").get<std::vector<int>>();
      if (static_cast<int>(doc.grid_sizes.size()) != doc.n)
        throw ParseError("grid_sizes length does not match n");
      std::size_t total = 1;
      for (int g : doc.grid_sizes) {
        if (!IsPowerOfTwo(g)) throw ParseError("grid sizes must be powers of two");
        total *= static_cast<std::size_t>(g);
      }
      const std::vector<double> flat =
          j.at("samples").get<std::vector<double>>();
      const std::size_t want = 2 * total * doc.d * doc.d;
      if (flat.size() != want)
        throw ParseError("samples length mismatch: expected " +
                         std::to_string(want));
      doc.samples.resize(flat.size() / 2);
      for (std::size_t i = 0; i < doc.samples.size(); ++i)
        doc.samples[i] = Complex(flat[2 * i], flat[2 * i + 1]);
    } else {
      throw ParseError("unknown representation " + doc.representation);
    }
  } catch (const Json::exception& e) {
    throw ParseError(std::string("malformed spectrum document: ") + e.what());
  }
  return doc;
}

// Per-axis Laurent degree of the spectrum the document denotes.
inline std::vector<int> SpectrumDegrees(const SpectrumDocument& doc) {
  std::vector<int> deg(doc.n, 0);
  if (doc.representation == "grid") {
    for (int i = 0; i < doc.n; ++i) deg[i] = doc.grid_sizes[i] / 2;
    return deg;
  }
  for (const auto& row : doc.entries)
    for (const auto& t : row) {
      std::vector<int> d = t.Degrees();
      for (int i = 0; i < doc.n; ++i) deg[i] = std::max(deg[i], d[i]);
    }
  if (doc.representation == "factor_laurent")
    for (auto& v : deg) v *= 2;  // spectrum degree is twice the factor degree
  return deg;
}

// Builds the matrix samples of the document on a grid. Empty override picks
// the smallest power-of-two grid with G_i >= 2*deg_i + 2 (at least 8).
inline MatrixFunction BuildMatrix(const SpectrumDocument& doc,
                                  std::vector<int> grid_sizes = {}) {
  if (doc.representation == "grid") {
    GridPtr g = MakeGrid(doc.grid_sizes);
    MatrixFunction out(doc.d, doc.d, g);
    const std::size_t total = g->total();
    for (int i = 0; i < doc.d; ++i)
      for (int j = 0; j < doc.d; ++j) {
        const std::size_t base =
            (static_cast<std::size_t>(i) * doc.d + j) * total;
        std::copy(doc.samples.begin() + base, doc.samples.begin() + base + total,
                  out.Entry(i, j));
      }
    if (!grid_sizes.empty() && grid_sizes != doc.grid_sizes)
      out = ResampleMatrix(out, grid_sizes);
    return out;
  }
  if (grid_sizes.empty()) {
    std::vector<int> deg = SpectrumDegrees(doc);
    grid_sizes.resize(doc.n);
    for (int i = 0; i < doc.n; ++i)
      grid_sizes[i] = std::max(8, detail::Pow2CeilIo(2 * deg[i] + 2));
  }
  GridPtr g = MakeGrid(grid_sizes);
  MatrixFunction out(doc.d, doc.d, g);
  for (int i = 0; i < doc.d; ++i)
    for (int j = 0; j < doc.d; ++j)
      out.SetEntry(i, j, Evaluate(doc.entries[i][j], g));
  if (doc.representation == "factor_laurent") {
    out = MultiplyAdjointRight(out);
    Hermitize(out);
  }
  return out;
}

// Loads a spectrum document, validates its Hermitian symmetry (skipped for
// factor_laurent, where the product form is Hermitian by construction), and
// realizes it on a grid.
inline LoadedSpectrum LoadSpectrum(const std::string& path,
                                   std::vector<int> grid_sizes = {},
                                   bool validate = true) {
  const std::string bytes = detail::ReadFileBytes(path);
  Json j;
  try {
    j = Json::parse(bytes);
  } catch (const Json::exception& e) {
    throw ParseError(std::string("invalid JSON in ") + path + ": " + e.what());
  }
  LoadedSpectrum out;
  out.doc = ParseSpectrumJson(j);
  out.digest = detail::Fnv1a64Hex(bytes);
  if (validate && out.doc.representation == "laurent")
    detail::ValidateHermitianTables(out.doc);
  out.matrix = BuildMatrix(out.doc, std::move(grid_sizes));
  if (validate && out.doc.representation == "grid")
    detail::ValidateHermitianSamples(out.matrix);
  std::vector<int> deg = SpectrumDegrees(out.doc);
  out.default_orders.resize(out.doc.n);
  for (int i = 0; i < out.doc.n; ++i)
    out.default_orders[i] = std::max(1, deg[i] + 2);
  return out;
}

// Coefficient tables of a sampled matrix function (exact zeros dropped).
inline std::vector<std::vector<LaurentTable>> TablesOf(
    const MatrixFunction& a) {
  std::vector<std::vector<LaurentTable>> out(
      a.rows, std::vector<LaurentTable>(a.cols, LaurentTable(a.grid->dims())));
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) {
      Coefficients c = CoefficientsOf(a.EntryCopy(i, j));
      for (std::size_t g = 0; g < c.size(); ++g)
        if (c.c[g] != Complex(0.0, 0.0))
          out[i][j].Add(c.grid->FreqOfFlat(g), c.c[g]);
    }
  return out;
}

inline Json FactorPayload(const MatrixFunction& splus) {
  Json factor;
  factor["n"] = splus.grid->dims();
  factor["d"] = splus.rows;
  factor["representation"] = "factor_laurent";
  factor["grid_sizes"] = splus.grid->sizes();
  Json rows = Json::array();
  auto tables = TablesOf(splus);
  for (int i = 0; i < splus.rows; ++i) {
    Json row = Json::array();
    for (int j = 0; j < splus.cols; ++j)
      row.push_back(detail::DumpTable(tables[i][j]));
    rows.push_back(std::move(row));
  }
  factor["entries"] = std::move(rows);
  return factor;
}

inline Json ReportJson(const FactorizationReport& r) {
  Json out;
  out["residual"] = r.residual;
  out["residual_rel"] = r.residual_rel;
  out["mask_energy"] = r.mask_energy;
  out["outer_gap"] = r.outer_gap;
  out["logdet_gap"] = r.logdet_gap;
  out["det_drift"] = r.det_drift;
  out["unitarity_dev"] = r.unitarity_dev;
  out["det_dev"] = r.det_dev;
  out["gram_dev"] = r.gram_dev;
  out["hat_unitarity"] = r.hat_unitarity;
  out["min_f0_ratio"] = r.min_f0_ratio;
  out["flagged_slices"] = r.flagged_slices;
  out["kernel_fallbacks"] = r.kernel_fallbacks;
  out["stage_orders"] = r.stage_orders;
  out["work_sizes"] = r.work_sizes;
  out["io_sizes"] = r.io_sizes;
  out["axis_order"] = r.axis_order;
  return out;
}

// Full result document: factor coefficients, diagnostics, provenance, and
// (separately, so determinism checks can ignore it) wall-clock timings.
inline Json ResultJson(const MatrixFunction& splus,
                       const FactorizationReport& rep,
                       const std::string& input_digest) {
  Json out;
  out["schema_version"] = "1";
  out["kind"] = "factor_result";
  out["factor"] = FactorPayload(splus);
  out["report"] = ReportJson(rep);
  Json prov;
  prov["input_digest"] = "fnv1a64:" + input_digest;
  prov["orders"] = rep.stage_orders;
  prov["grid"] = rep.io_sizes;
  prov["tool_version"] = kVersion;
  out["provenance"] = std::move(prov);
  Json tim;
  tim["total_ms"] = rep.total_ms;
  tim["stage_ms"] = rep.stage_ms;
  out["timings"] = std::move(tim);
  return out;
}

inline void WriteJsonFile(const std::string& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  out << j.dump(2) << "\n";
}

// Loads a factor from either a result document (its "factor" object) or a
// bare spectrum document. Factor entries are evaluated as-is: no Hermitian
// validation and no product with the adjoint.
inline MatrixFunction LoadFactor(const std::string& path,
                                 std::vector<int> grid_sizes = {}) {
  const std::string bytes = detail::ReadFileBytes(path);
  Json j;
  try {
    j = Json::parse(bytes);
  } catch (const Json::exception& e) {
    throw ParseError(std::string("invalid JSON in ") + path + ": " + e.what());
  }
  const Json& body = j.contains("factor") ? j.at("factor") : j;
  SpectrumDocument doc = ParseSpectrumJson(body);
  if (grid_sizes.empty() && body.contains("grid_sizes"))
    grid_sizes = body.at("grid_sizes").get<std::vector<int>>();
  if (doc.representation == "grid") return BuildMatrix(doc, grid_sizes);
  if (grid_sizes.empty()) {
    std::vector<int> deg(doc.n, 0);
    for (const auto& row : doc.entries)
      for (const auto& t : row) {
        std::vector<int> d = t.Degrees();
        for (int i = 0; i < doc.n; ++i) deg[i] = std::max(deg[i], d[i]);
      }
    grid_sizes.resize(doc.n);
    for (int i = 0; i < doc.n; ++i)
      grid_sizes[i] = std::max(8, detail::Pow2CeilIo(2 * deg[i] + 2));
  }
  GridPtr g = MakeGrid(grid_sizes);
  MatrixFunction out(doc.d, doc.d, g);
  for (int i = 0; i < doc.d; ++i)
    for (int jj = 0; jj < doc.d; ++jj)
      out.SetEntry(i, jj, Evaluate(doc.entries[i][jj], g));
  return out;
}

// ---- binary matrix container ----
// Fixed 8-field header (little-endian): magic "NDSPECB1", version, n, d,
// sizes[4] (unused axes = 1), then d*d*total complex doubles entry-major.

inline void SaveMatrixBinary(const std::string& path,
                             const MatrixFunction& a) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  const char magic[8] = {'N', 'D', 'S', 'P', 'E', 'C', 'B', '1'};
  out.write(magic, 8);
  auto put_u32 = [&](std::uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff),
                 static_cast<char>((v >> 24) & 0xff)};
    out.write(b, 4);
  };
  const int nd = a.grid->dims();
  if (nd > 4) throw ParseError("binary container supports at most 4 axes");
  put_u32(1);
  put_u32(static_cast<std::uint32_t>(nd));
  put_u32(static_cast<std::uint32_t>(a.rows));
  for (int i = 0; i < 4; ++i)
    put_u32(i < nd ? static_cast<std::uint32_t>(a.grid->size(i)) : 1u);
  out.write(reinterpret_cast<const char*>(a.v.data()),
            static_cast<std::streamsize>(a.v.size() * sizeof(Complex)));
  if (!out) throw ParseError("short write to " + path);
}

inline MatrixFunction LoadMatrixBinary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::string(magic, 8) != "NDSPECB1")
    throw ParseError("bad magic in " + path);
  auto get_u32 = [&]() {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
  };
  const std::uint32_t version = get_u32();
  if (version != 1) throw ParseError("unsupported binary version");
  const int nd = static_cast<int>(get_u32());
  const int d = static_cast<int>(get_u32());
  if (nd < 1 || nd > 4 || d < 1 || d > 64)
    throw ParseError("bad binary header dimensions");
  std::vector<int> sizes;
  for (int i = 0; i < 4; ++i) {
    const int g = static_cast<int>(get_u32());
    if (i < nd) sizes.push_back(g);
  }
  if (!in) throw ParseError("truncated binary header in " + path);
  MatrixFunction out(d, d, MakeGrid(sizes));
  in.read(reinterpret_cast<char*>(out.v.data()),
          static_cast<std::streamsize>(out.v.size() * sizeof(Complex)));
  if (!in) throw ParseError("truncated binary payload in " + path);
  return out;
}

inline std::string FileDigest(const std::string& path) {
  return detail::Fnv1a64Hex(detail::ReadFileBytes(path));
}

}  // namespace ndspec
