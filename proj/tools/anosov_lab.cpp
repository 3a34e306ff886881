// anosov-lab: batch driver for orbit enumeration, critical exponents, limit
// set sampling, dimension estimates, and the verification property suite.
// Every command reads a JSON config, reuses serialized artifacts from the
// output directory when present, and emits deterministic tables and plots.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "anosov/density.hpp"
#include "anosov/hausdorff.hpp"
#include "anosov/io.hpp"
#include "anosov/orbit_engine.hpp"
#include "anosov/presets.hpp"
#include "anosov/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace anosov;

namespace {

struct Config {
  std::string model;   // "sl" or "product"
  std::string preset;  // optional, or explicit generators
  std::vector<Matrix> sl_generators;
  std::vector<Eigen::Matrix2d> product_generators_1, product_generators_2;
  std::optional<Vector> type_vector;
  int max_word_length = 0;
  double eps = 1.0;
  double window_fraction = 0.5;
  std::uint64_t seed = 1;
  int threads = 1;
  std::optional<double> radius_cap;
  std::string raw_text;  // for the config hash
};

[[noreturn]] void usage_error(const std::string& msg) {
  std::cerr << "config error: " << msg << "\n";
  std::exit(2);
}

Matrix parse_square(const json& row, const std::string& key) {
  if (!row.is_array()) usage_error(key + ": each generator must be a flat row-major array");
  const int n2 = static_cast<int>(row.size());
  const int n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n2))));
  if (n < 2 || n * n != n2) usage_error(key + ": generator length is not a square of dim >= 2");
  Matrix m(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      const auto& v = row[r * n + c];
      if (!v.is_number()) usage_error(key + ": non-numeric entry");
      m(r, c) = v.get<double>();
    }
  return m;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) usage_error("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  Config cfg;
  cfg.raw_text = buf.str();
  json j;
  try {
    j = json::parse(cfg.raw_text);
  } catch (const json::parse_error& e) {
    usage_error(std::string("invalid JSON: ") + e.what());
  }
  const std::set<std::string> allowed{"model",          "preset",     "generators",
                                      "type_vector",    "max_word_length", "eps",
                                      "window_fraction", "seed",      "threads",
                                      "radius_cap"};
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) usage_error("unknown key \"" + key + "\"");

  if (!j.contains("model") || !j["model"].is_string()) usage_error("\"model\" (sl|product) is required");
  cfg.model = j["model"].get<std::string>();
  if (cfg.model != "sl" && cfg.model != "product") usage_error("model must be \"sl\" or \"product\"");

  if (j.contains("preset")) cfg.preset = j["preset"].get<std::string>();

  if (cfg.preset.empty()) {
    if (!j.contains("generators")) usage_error("either \"preset\" or \"generators\" is required");
    const auto& g = j["generators"];
    if (cfg.model == "sl") {
      if (!g.is_array() || g.empty()) usage_error("generators: need a nonempty array");
      for (const auto& row : g) cfg.sl_generators.push_back(parse_square(row, "generators"));
    } else {
      if (!g.is_object() || !g.contains("first") || !g.contains("second"))
        usage_error("product generators need \"first\" and \"second\" arrays");
      for (const auto& row : g["first"]) {
        const Matrix m = parse_square(row, "generators.first");
        if (m.rows() != 2) usage_error("product generators must be 2x2");
        cfg.product_generators_1.push_back(m);
      }
      for (const auto& row : g["second"]) {
        const Matrix m = parse_square(row, "generators.second");
        if (m.rows() != 2) usage_error("product generators must be 2x2");
        cfg.product_generators_2.push_back(m);
      }
      if (cfg.product_generators_1.empty() ||
          cfg.product_generators_1.size() != cfg.product_generators_2.size())
        usage_error("product generators: factor lists must be nonempty and equal length");
    }
  } else {
    const std::set<std::string> sl_presets{"cyclic", "schottky-sym2"};
    const std::set<std::string> product_presets{"diagonal-surface", "bent-surface"};
    if (cfg.model == "sl" && !sl_presets.count(cfg.preset))
      usage_error("preset \"" + cfg.preset + "\" is not an sl preset");
    if (cfg.model == "product" && !product_presets.count(cfg.preset))
      usage_error("preset \"" + cfg.preset + "\" is not a product preset");
  }

  if (!j.contains("max_word_length") || !j["max_word_length"].is_number_integer())
    usage_error("\"max_word_length\" (integer) is required");
  cfg.max_word_length = j["max_word_length"].get<int>();
  if (cfg.max_word_length < 1) usage_error("max_word_length must be >= 1");

  if (j.contains("eps")) cfg.eps = j["eps"].get<double>();
  if (!(cfg.eps > 0.0)) usage_error("eps must be positive");
  if (j.contains("window_fraction")) cfg.window_fraction = j["window_fraction"].get<double>();
  if (!(cfg.window_fraction > 0.0 && cfg.window_fraction < 1.0))
    usage_error("window_fraction must lie in (0,1)");
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
  if (cfg.threads < 1) usage_error("threads must be >= 1");
  if (j.contains("radius_cap")) cfg.radius_cap = j["radius_cap"].get<double>();

  if (j.contains("type_vector")) {
    const auto& tv = j["type_vector"];
    if (!tv.is_array()) usage_error("type_vector must be an array");
    Vector v(tv.size());
    for (std::size_t i = 0; i < tv.size(); ++i) v[i] = tv[i].get<double>();
    cfg.type_vector = v;
  }
  return cfg;
}

SlOrbitModel make_sl_model(const Config& cfg) {
  std::vector<Matrix> gens = cfg.sl_generators;
  if (cfg.preset == "cyclic") gens = presets::cyclic_generators();
  if (cfg.preset == "schottky-sym2") gens = presets::schottky_sym2_generators();
  SlPresentation pres(gens);
  const int dim = pres.dim();
  TypeVector theta = cfg.type_vector
                         ? TypeVector(*cfg.type_vector, {1, dim - 1})
                         : TypeVector::line_hyperplane(dim);
  if (theta.size() != dim) usage_error("type_vector dimension mismatch");
  return {std::move(pres), BasePoint::identity(dim), std::move(theta)};
}

ProductOrbitModel make_product_model(const Config& cfg) {
  if (cfg.preset == "diagonal-surface")
    return ProductOrbitModel{ProductPresentation(presets::diagonal_surface_pair())};
  if (cfg.preset == "bent-surface")
    return ProductOrbitModel{ProductPresentation(presets::bent_surface_pair())};
  return ProductOrbitModel{
      ProductPresentation(RepresentationPair(cfg.product_generators_1, cfg.product_generators_2))};
}

EnumerationOptions make_options(const Config& cfg) {
  EnumerationOptions opts;
  opts.radius_cap = cfg.radius_cap;
  opts.threads = cfg.threads;
  return opts;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::cerr << "cannot write " << path << "\n";
    std::exit(1);
  }
  out << content;
}

void write_manifest(const fs::path& dir, const std::string& command, const Config& cfg,
                    std::chrono::steady_clock::time_point start) {
  json m;
  m["command"] = command;
  m["config_hash"] = fnv1a(cfg.raw_text);
  m["seed"] = cfg.seed;
  m["orbit_format_version"] = kOrbitFormatVersion;
  m["wall_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                     std::chrono::steady_clock::now() - start)
                     .count();
  write_file(dir / ("manifest_" + command + ".json"), m.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// orbit

template <class Model>
std::string orbit_summary_csv(const OrbitBall<Model>& ball) {
  std::ostringstream os;
  csv_row(os, {"r", "N_F", "N_R"});
  const double rf = completeness_radius(ball, MetricTag::F);
  const double rr = completeness_radius(ball, MetricTag::R);
  for (int i = 1; i <= 16; ++i) {
    const double qf = rf * i / 16.0;
    const double qr = rr * i / 16.0;
    csv_row(os, {fmt_double(qf), std::to_string(counting_function(ball, qf, MetricTag::F)),
                 std::to_string(counting_function(ball, qr, MetricTag::R))});
  }
  csv_row(os, {"completeness_F", fmt_double(rf), ""});
  csv_row(os, {"completeness_R", fmt_double(rr), ""});
  csv_row(os, {"elements", std::to_string(ball.elements.size()),
               std::to_string(ball.dedup_count)});
  return os.str();
}

template <class Model>
OrbitBall<Model> load_or_build(const Config& cfg, const fs::path& dir, Model model) {
  const fs::path orbit_path = dir / "orbit.txt";
  if (fs::exists(orbit_path)) {
    std::ifstream in(orbit_path, std::ios::binary);
    return read_orbit(in, std::move(model));
  }
  auto ball = enumerate_ball(std::move(model), cfg.max_word_length, make_options(cfg));
  std::ostringstream os;
  write_orbit(os, ball);
  write_file(orbit_path, os.str());
  return ball;
}

template <class Model>
int run_orbit(const Config& cfg, const fs::path& dir, Model model) {
  const auto ball = load_or_build(cfg, dir, std::move(model));
  const std::string table = orbit_summary_csv(ball);
  write_file(dir / "orbit_summary.csv", table);
  std::cout << table;
  std::cout << "elements " << ball.elements.size() << " depth " << ball.max_word_length
            << " completeness_F " << fmt_double(completeness_radius(ball, MetricTag::F))
            << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// exponents

void append_estimate(std::ostringstream& os, const std::string& name,
                     const ExponentEstimate& est) {
  csv_row(os, {name, fmt_double(est.value), fmt_double(est.window.first),
               fmt_double(est.window.second), fmt_double(est.fit_quality),
               std::to_string(est.sample_count)});
}

template <class Model>
std::optional<ExponentEstimate> conical_estimate(const OrbitBall<Model>& ball, int threads,
                                                 double window_fraction) {
  // outer supremum over the limit set approximated on the attracting flags of
  // the deepest flagged elements
  std::optional<ExponentEstimate> best;
  int used = 0;
  for (auto it = ball.elements.rbegin(); it != ball.elements.rend() && used < 3; ++it) {
    if (!it->flag) continue;
    ++used;
    for (double c : {2.0, 4.0, 8.0, 16.0}) {
      try {
        const auto est = conical_exponent_estimate(ball, *it->flag, c, threads,
                                                   window_fraction);
        if (!best || est.value > best->value) best = est;
        break;
      } catch (const std::domain_error&) {
      }
    }
  }
  return best;
}

template <class Model>
int run_exponents(const Config& cfg, const fs::path& dir, Model model) {
  const auto ball = load_or_build(cfg, dir, std::move(model));
  std::ostringstream os;
  csv_row(os, {"exponent", "value", "window_lo", "window_hi", "fit_quality", "samples"});
  try {
    const auto dF = critical_exponent(ball, MetricTag::F, cfg.window_fraction);
    const auto dR = critical_exponent(ball, MetricTag::R, cfg.window_fraction);
    append_estimate(os, "delta_F", dF);
    append_estimate(os, "delta_R", dR);
    csv_row(os, {"check_dR_le_dF", dR.value <= dF.value + 0.02 ? "pass" : "fail",
                 fmt_double(dR.value - dF.value), "", "", ""});
    if constexpr (std::is_same_v<Model, SlOrbitModel>) {
      const auto roots = root_exponents(ball, cfg.window_fraction);
      append_estimate(os, "delta_1_kplus1", roots.delta_1_kplus1);
      append_estimate(os, "delta_1_2", roots.delta_1_2);
      const double root = std::sqrt(static_cast<double>(ball.model.pres.dim()));
      csv_row(os, {"check_finsler_hilbert_identity",
                   std::abs(dF.value * root - roots.delta_1_kplus1.value) <= 1e-9 ? "pass"
                                                                                 : "fail",
                   fmt_double(dF.value * root - roots.delta_1_kplus1.value), "", "", ""});
      csv_row(os, {"check_half_ratio",
                   roots.delta_1_kplus1.value <= roots.delta_1_2.value / 2.0 + 0.02 ? "pass"
                                                                                    : "fail",
                   fmt_double(roots.delta_1_2.value > 0.0
                                  ? roots.delta_1_kplus1.value / roots.delta_1_2.value
                                  : 0.0),
                   "", "", ""});
    }
    if (const auto con = conical_estimate(ball, cfg.threads, cfg.window_fraction))
      append_estimate(os, "delta_F_conical", *con);
    else
      csv_row(os, {"delta_F_conical", "unavailable", "", "", "", ""});
  } catch (const std::domain_error& e) {
    std::cerr << "exponent fit failed: " << e.what()
              << "; enumerate a deeper orbit (increase max_word_length)\n";
    return 1;
  }
  const std::string table = os.str();
  write_file(dir / "exponents.csv", table);
  std::cout << table;
  return 0;
}

// ---------------------------------------------------------------------------
// limitset

// even-stride subsample keeping the first element; pairwise clouds are
// quadratic in the sample size, so cap it deterministically
template <class T>
std::vector<T> subsample(const std::vector<T>& v, std::size_t cap) {
  if (v.size() <= cap) return v;
  std::vector<T> out;
  out.reserve(cap);
  for (std::size_t i = 0; i < cap; ++i) out.push_back(v[(i * v.size()) / cap]);
  return out;
}

std::vector<Flag> annulus_flags(const OrbitBall<SlOrbitModel>& ball) {
  const double rc = completeness_radius(ball, MetricTag::F);
  std::vector<Flag> flags;
  std::set<std::string> seen;
  for (const auto& e : ball.elements) {
    if (!e.flag || e.d_F < 2.0 * rc / 3.0) continue;
    std::string key;
    for (int i = 0; i < e.flag->dim(); ++i) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.9f|", e.flag->line()[i]);
      key += buf;
    }
    if (seen.insert(key).second) flags.push_back(*e.flag);
  }
  return flags;
}

std::vector<ProductFlag> annulus_flags(const OrbitBall<ProductOrbitModel>& ball) {
  const double rc = completeness_radius(ball, MetricTag::F);
  std::vector<ProductFlag> flags;
  std::set<std::string> seen;
  for (const auto& e : ball.elements) {
    if (!e.flag || e.d_F < 2.0 * rc / 3.0) continue;
    char buf[80];
    std::snprintf(buf, sizeof(buf), "%d|%.9f|%d|%.9f", e.flag->xi1.at_infinity ? 1 : 0,
                  e.flag->xi1.at_infinity ? 0.0 : e.flag->xi1.value,
                  e.flag->xi2.at_infinity ? 1 : 0,
                  e.flag->xi2.at_infinity ? 0.0 : e.flag->xi2.value);
    if (seen.insert(buf).second) flags.push_back(*e.flag);
  }
  return flags;
}

std::string flags_to_text(const std::vector<Flag>& flags) {
  std::ostringstream os;
  os << "anosov-flags 1 sl " << (flags.empty() ? 0 : flags[0].dim()) << ' ' << flags.size()
     << '\n';
  for (const auto& f : flags) {
    for (int i = 0; i < f.dim(); ++i) os << (i ? " " : "") << fmt_double_exact(f.line()[i]);
    for (int i = 0; i < f.dim(); ++i) os << ' ' << fmt_double_exact(f.normal()[i]);
    os << '\n';
  }
  return os.str();
}

std::string flags_to_text(const std::vector<ProductFlag>& flags) {
  std::ostringstream os;
  os << "anosov-flags 1 product 2 " << flags.size() << '\n';
  const auto bp = [](const BoundaryPoint& p) {
    return p.at_infinity ? std::string("inf") : fmt_double_exact(p.value);
  };
  for (const auto& f : flags) os << bp(f.xi1) << ' ' << bp(f.xi2) << '\n';
  return os.str();
}

std::vector<Flag> flags_from_text_sl(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("flag file: empty input");
  const auto head = detail::split_fields(line);
  if (head.size() != 5 || head[0] != "anosov-flags" || head[2] != "sl")
    throw std::runtime_error("flag file: bad header");
  const int dim = std::stoi(head[3]);
  std::vector<Flag> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_fields(line);
    if (static_cast<int>(f.size()) != 2 * dim) throw std::runtime_error("flag file: bad row");
    Vector l(dim), n(dim);
    for (int i = 0; i < dim; ++i) l[i] = detail::parse_double(f[i]);
    for (int i = 0; i < dim; ++i) n[i] = detail::parse_double(f[dim + i]);
    out.emplace_back(l, n);
  }
  return out;
}

std::vector<ProductFlag> flags_from_text_product(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("flag file: empty input");
  const auto head = detail::split_fields(line);
  if (head.size() != 5 || head[0] != "anosov-flags" || head[2] != "product")
    throw std::runtime_error("flag file: bad header");
  std::vector<ProductFlag> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_fields(line);
    if (f.size() != 2) throw std::runtime_error("flag file: bad row");
    const auto bp = [](const std::string& tok) {
      return tok == "inf" ? BoundaryPoint::infinity()
                          : BoundaryPoint::finite(detail::parse_double(tok));
    };
    out.push_back({bp(f[0]), bp(f[1])});
  }
  return out;
}

std::string limitset_svg(const std::vector<Flag>& flags) {
  // projective disk chart: the unit line vector, sign fixed so the last
  // coordinate is nonnegative, plotted by its first two coordinates
  SvgPlot plot(-1.05, 1.05, -1.05, 1.05);
  plot.line(-1.0, 0.0, 1.0, 0.0);
  plot.line(0.0, -1.0, 0.0, 1.0);
  for (const auto& f : flags) {
    Vector v = f.line();
    if (v[v.size() - 1] < 0.0) v = -v;
    plot.point(v[0], v[1], 1.5);
  }
  return plot.str();
}

std::string limitset_svg(const std::vector<ProductFlag>& flags) {
  // torus square: each boundary circle unrolled by 2 atan
  const double pi = 3.14159265358979323846;
  SvgPlot plot(-pi - 0.1, pi + 0.1, -pi - 0.1, pi + 0.1);
  const auto angle = [&](const BoundaryPoint& p) {
    return p.at_infinity ? pi : 2.0 * std::atan(p.value);
  };
  plot.line(-pi, -pi, pi, pi);
  for (const auto& f : flags) plot.point(angle(f.xi1), angle(f.xi2), 1.5);
  return plot.str();
}

template <class Model>
int run_limitset(const Config& cfg, const fs::path& dir, Model model) {
  const auto ball = load_or_build(cfg, dir, std::move(model));
  const auto flags = annulus_flags(ball);
  if (flags.empty()) {
    std::cerr << "limitset: no regular elements in the deepest annulus\n";
    return 1;
  }
  write_file(dir / "limitset.txt", flags_to_text(flags));
  write_file(dir / "limitset.svg", limitset_svg(subsample(flags, 20'000)));
  std::cout << "limit flags " << flags.size() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// dimension

struct DimensionWindow {
  double s_min, s_max;
};

DimensionWindow pick_window(const PremetricCloud& cloud) {
  // premetric separations span many decades on deep word balls, so anchor the
  // lower end at the realized resolution floor rather than a fixed ratio
  const double hi = 0.5 * cloud.diameter();
  const double lo = std::max(2.0 * cloud.resolution_floor(), hi * 1e-14);
  if (!(lo < hi)) throw std::domain_error("dimension window collapsed; need more flags");
  return {lo, hi};
}

int run_dimension_sl(const Config& cfg, const fs::path& dir) {
  auto ball = load_or_build(cfg, dir, make_sl_model(cfg));
  std::vector<Flag> flags;
  const fs::path flag_path = dir / "limitset.txt";
  if (fs::exists(flag_path)) {
    std::ifstream in(flag_path, std::ios::binary);
    flags = flags_from_text_sl(in);
  } else {
    flags = annulus_flags(ball);
    write_file(flag_path, flags_to_text(flags));
  }
  if (flags.size() < 500) {
    std::cerr << "dimension: sample too small (" << flags.size()
              << " flags < 500); enumerate deeper\n";
    return 1;
  }
  flags = subsample(flags, 4000);
  std::ostringstream os;
  csv_row(os, {"estimate", "value", "window_lo", "window_hi", "fit_quality"});
  const auto dF = critical_exponent(ball, MetricTag::F, cfg.window_fraction);

  const auto cloud = gromov_cloud(flags, ball.model.x, cfg.eps, cfg.threads);
  const auto w = pick_window(cloud);
  const auto hd = dimension_estimate(cloud, w.s_min, w.s_max);
  csv_row(os, {"hd_dg", fmt_double(hd.value), fmt_double(w.s_min), fmt_double(w.s_max),
               fmt_double(hd.fit_quality)});

  const auto half = cloud.powered(0.5);  // same as evaluating dg at eps/2
  const auto wh = pick_window(half);
  const auto hd_half = dimension_estimate(half, wh.s_min, wh.s_max);
  csv_row(os, {"hd_dg_half_eps", fmt_double(hd_half.value), fmt_double(wh.s_min),
               fmt_double(wh.s_max), fmt_double(hd_half.fit_quality)});

  const auto chordal = line_chordal_cloud(flags, cfg.threads);
  const auto wc = pick_window(chordal);
  const auto hd_r = dimension_estimate(chordal, wc.s_min, wc.s_max);
  csv_row(os, {"hd_chordal_line", fmt_double(hd_r.value), fmt_double(wc.s_min),
               fmt_double(wc.s_max), fmt_double(hd_r.fit_quality)});

  csv_row(os, {"delta_F_reference", fmt_double(dF.value), fmt_double(dF.window.first),
               fmt_double(dF.window.second), fmt_double(dF.fit_quality)});
  const std::string table = os.str();
  write_file(dir / "dimension.csv", table);
  std::cout << table;
  return 0;
}

int run_dimension_product(const Config& cfg, const fs::path& dir) {
  auto ball = load_or_build(cfg, dir, make_product_model(cfg));
  std::vector<ProductFlag> flags;
  const fs::path flag_path = dir / "limitset.txt";
  if (fs::exists(flag_path)) {
    std::ifstream in(flag_path, std::ios::binary);
    flags = flags_from_text_product(in);
  } else {
    flags = annulus_flags(ball);
    write_file(flag_path, flags_to_text(flags));
  }
  if (flags.size() < 500) {
    std::cerr << "dimension: sample too small (" << flags.size()
              << " flags < 500); enumerate deeper\n";
    return 1;
  }
  flags = subsample(flags, 4000);
  std::ostringstream os;
  csv_row(os, {"estimate", "value", "window_lo", "window_hi", "fit_quality"});
  const auto dF = critical_exponent(ball, MetricTag::F, cfg.window_fraction);

  const auto cloud = gromov_cloud(flags, ProductPoint::base(), cfg.eps, cfg.threads);
  const auto w = pick_window(cloud);
  const auto hd = dimension_estimate(cloud, w.s_min, w.s_max);
  csv_row(os, {"hd_dg", fmt_double(hd.value), fmt_double(w.s_min), fmt_double(w.s_max),
               fmt_double(hd.fit_quality)});

  const auto half = cloud.powered(0.5);
  const auto wh = pick_window(half);
  const auto hd_half = dimension_estimate(half, wh.s_min, wh.s_max);
  csv_row(os, {"hd_dg_half_eps", fmt_double(hd_half.value), fmt_double(wh.s_min),
               fmt_double(wh.s_max), fmt_double(hd_half.fit_quality)});

  csv_row(os, {"delta_F_reference", fmt_double(dF.value), fmt_double(dF.window.first),
               fmt_double(dF.window.second), fmt_double(dF.fit_quality)});
  const std::string table = os.str();
  write_file(dir / "dimension.csv", table);
  std::cout << table;
  return 0;
}

// ---------------------------------------------------------------------------
// verify

int run_verify_sl(const Config& cfg, const fs::path& dir) {
  auto ball = load_or_build(cfg, dir, make_sl_model(cfg));
  const auto& model = ball.model;
  std::vector<Flag> flags = subsample(annulus_flags(ball), 5000);
  {
    // drop flags the antipodality sentinel cannot separate from a kept one,
    // so a premetric of zero always means the same sampled boundary point
    std::vector<FlagFrame> frames;
    std::vector<Flag> kept;
    for (const auto& f : flags) {
      const FlagFrame fr = flag_in_frame(f, model.x);
      bool dup = false;
      for (const auto& kf : frames)
        if (std::abs(fr.line.dot(kf.normal)) <= tol::kAntipodality ||
            std::abs(kf.line.dot(fr.normal)) <= tol::kAntipodality) {
          dup = true;
          break;
        }
      if (!dup) {
        frames.push_back(fr);
        kept.push_back(f);
      }
    }
    flags = std::move(kept);
  }
  if (flags.size() < 3) {
    std::cerr << "verify: not enough limit flags\n";
    return 1;
  }
  std::ostringstream os;
  csv_row(os, {"property", "value", "status"});
  Rng rng(cfg.seed);

  // cocycle defect b(x,y) + b(y,w) - b(x,w) over random basepoint triples
  double cocycle_max = 0.0;
  const int dim = model.pres.dim();
  const auto random_point = [&] {
    Matrix s(dim, dim);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c <= r; ++c) s(r, c) = s(c, r) = 0.3 * rng.normal();
    Eigen::SelfAdjointEigenSolver<Matrix> es(s);
    const Matrix p = es.eigenvectors() *
                     es.eigenvalues().array().exp().matrix().asDiagonal() *
                     es.eigenvectors().transpose();
    return BasePoint(p);
  };
  for (int t = 0; t < 40; ++t) {
    const BasePoint x = random_point(), y = random_point(), w = random_point();
    const Flag& tau = flags[rng.below(flags.size())];
    const double defect = busemann_cocycle(x, y, tau, model.theta) +
                          busemann_cocycle(y, w, tau, model.theta) -
                          busemann_cocycle(x, w, tau, model.theta);
    cocycle_max = std::max(cocycle_max, std::abs(defect));
  }
  csv_row(os, {"cocycle_defect_max", fmt_double(cocycle_max),
               cocycle_max < tol::kCocycle ? "pass" : "fail"});

  // premetric triangle inequality: largest eps with no violations on a probe
  // sample, then the full check at half that eps
  const auto triangle_violations = [&](double eps, int triples) {
    int bad = 0;
    for (int t = 0; t < triples; ++t) {
      const Flag& a = flags[rng.below(flags.size())];
      const Flag& b = flags[rng.below(flags.size())];
      const Flag& c = flags[rng.below(flags.size())];
      const double ab = gromov_premetric(a, b, model.x, eps);
      const double bc = gromov_premetric(b, c, model.x, eps);
      const double ac = gromov_premetric(a, c, model.x, eps);
      if (ac > ab + bc + 1e-12) ++bad;
    }
    return bad;
  };
  double eps0 = 0.0;
  for (double eps : {8.0, 4.0, 2.0, 1.0, 0.5, 0.25, 0.125})
    if (triangle_violations(eps, 10'000) == 0) {
      eps0 = eps;
      break;
    }
  csv_row(os, {"eps0_empirical", fmt_double(eps0), eps0 > 0.0 ? "pass" : "fail"});
  const int bad_half = eps0 > 0.0 ? triangle_violations(eps0 / 2.0, 100'000) : -1;
  csv_row(os, {"triangle_violations_at_half_eps0", std::to_string(bad_half),
               bad_half == 0 ? "pass" : "fail"});

  // hyperbolicity constant and the ultrametric defect of the Gromov product
  const auto product_defect = [&](int triples) {
    double worst = 0.0;
    for (int t = 0; t < triples; ++t) {
      const Flag& a = flags[rng.below(flags.size())];
      const Flag& b = flags[rng.below(flags.size())];
      const Flag& c = flags[rng.below(flags.size())];
      const double ab = gromov_product(a, b, model.x);
      const double bc = gromov_product(b, c, model.x);
      const double ac = gromov_product(a, c, model.x);
      if (std::isinf(ab) || std::isinf(bc) || std::isinf(ac)) continue;
      worst = std::max(worst, std::min(ab, bc) - ac);
    }
    return worst;
  };
  const double delta_hat = product_defect(10'000);
  const double defect_check = product_defect(100'000);
  csv_row(os, {"hyperbolicity_delta", fmt_double(delta_hat), "info"});
  csv_row(os, {"ultrametric_defect_max", fmt_double(defect_check),
               defect_check <= 5.0 * std::max(delta_hat, 1e-9) ? "pass" : "fail"});

  // shadow lemma spread at s slightly above the fitted exponent
  const auto dF = critical_exponent(ball, MetricTag::F, cfg.window_fraction);
  const double s = std::max(dF.value, 0.05) * 1.05;
  const auto mu = ps_measure(ball, s, model.x);
  const auto shadow = shadow_lemma_report(mu, ball, 2.0 * tol::kShadowRadiusMin, s,
                                          cfg.threads);
  csv_row(os, {"shadow_ratio_min", fmt_double(shadow.min_ratio),
               shadow.min_ratio > 0.0 ? "pass" : "fail"});
  csv_row(os, {"shadow_ratio_max", fmt_double(shadow.max_ratio),
               std::isfinite(shadow.max_ratio) ? "pass" : "fail"});
  csv_row(os, {"shadow_empirical_C", fmt_double(shadow.empirical_c),
               std::isfinite(shadow.empirical_c) ? "pass" : "fail"});

  // conformality on one moved basepoint
  const Flag& tau = flags[flags.size() / 2];
  const BasePoint moved = flat_point_toward(model.x, tau, model.theta, 1.0);
  const auto mu_moved = ps_measure(ball, s, moved);
  double conf_dev = 0.0;
  bool conf_ok = false;
  for (double radius : {0.5, 0.7, 0.9}) {
    try {
      const auto rep = conformal_ratio_check(mu_moved, mu, tau, radius, cfg.eps, model.theta);
      conf_dev = rep.relative_deviation;
      conf_ok = true;
      break;
    } catch (const std::domain_error&) {
    }
  }
  csv_row(os, {"conformal_relative_deviation", conf_ok ? fmt_double(conf_dev) : "unavailable",
               conf_ok ? "info" : "fail"});

  const std::string table = os.str();
  write_file(dir / "verify.csv", table);
  std::cout << table;
  return table.find(",fail") == std::string::npos ? 0 : 1;
}

int run_verify_product(const Config& cfg, const fs::path& dir) {
  auto ball = load_or_build(cfg, dir, make_product_model(cfg));
  const auto flags = subsample(annulus_flags(ball), 5000);
  if (flags.size() < 3) {
    std::cerr << "verify: not enough limit flags\n";
    return 1;
  }
  std::ostringstream os;
  csv_row(os, {"property", "value", "status"});
  Rng rng(cfg.seed);
  const ProductPoint base = ProductPoint::base();

  // cocycle of the closed-form busemann over random point triples
  double cocycle_max = 0.0;
  const auto random_point = [&] {
    return ProductPoint(UpperHalfPlanePoint(rng.normal(), std::exp(0.5 * rng.normal())),
                        UpperHalfPlanePoint(rng.normal(), std::exp(0.5 * rng.normal())));
  };
  for (int t = 0; t < 200; ++t) {
    const ProductPoint x = random_point(), y = random_point(), w = random_point();
    const ProductFlag& tau = flags[rng.below(flags.size())];
    const double defect = product_busemann(x, y, tau) + product_busemann(y, w, tau) -
                          product_busemann(x, w, tau);
    cocycle_max = std::max(cocycle_max, std::abs(defect));
  }
  csv_row(os, {"cocycle_defect_max", fmt_double(cocycle_max),
               cocycle_max < tol::kCocycle ? "pass" : "fail"});

  const auto triangle_violations = [&](double eps, int triples) {
    int bad = 0;
    for (int t = 0; t < triples; ++t) {
      const ProductFlag& a = flags[rng.below(flags.size())];
      const ProductFlag& b = flags[rng.below(flags.size())];
      const ProductFlag& c = flags[rng.below(flags.size())];
      const double ab = product_gromov_premetric(a, b, base, eps);
      const double bc = product_gromov_premetric(b, c, base, eps);
      const double ac = product_gromov_premetric(a, c, base, eps);
      if (ac > ab + bc + 1e-12) ++bad;
    }
    return bad;
  };
  double eps0 = 0.0;
  for (double eps : {8.0, 4.0, 2.0, 1.0, 0.5, 0.25, 0.125})
    if (triangle_violations(eps, 10'000) == 0) {
      eps0 = eps;
      break;
    }
  csv_row(os, {"eps0_empirical", fmt_double(eps0), eps0 > 0.0 ? "pass" : "fail"});
  const int bad_half = eps0 > 0.0 ? triangle_violations(eps0 / 2.0, 100'000) : -1;
  csv_row(os, {"triangle_violations_at_half_eps0", std::to_string(bad_half),
               bad_half == 0 ? "pass" : "fail"});

  const auto dF = critical_exponent(ball, MetricTag::F, cfg.window_fraction);
  const double s = std::max(dF.value, 0.05) * 1.05;
  const auto mu = ps_measure(ball, s, base);
  const auto shadow = shadow_lemma_report(mu, ball, 2.0 * tol::kShadowRadiusMin, s,
                                          cfg.threads);
  csv_row(os, {"shadow_ratio_min", fmt_double(shadow.min_ratio),
               shadow.min_ratio > 0.0 ? "pass" : "fail"});
  csv_row(os, {"shadow_empirical_C", fmt_double(shadow.empirical_c),
               std::isfinite(shadow.empirical_c) ? "pass" : "fail"});

  const std::string table = os.str();
  write_file(dir / "verify.csv", table);
  std::cout << table;
  return table.find(",fail") == std::string::npos ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical toolkit for discrete subgroup orbit geometry"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir = "out";
  std::optional<int> depth_override;
  std::optional<double> eps_override;
  std::optional<std::uint64_t> seed_override;
  app.add_option("--config", config_path, "JSON config file")->required();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--depth", depth_override, "override max_word_length");
  app.add_option("--eps", eps_override, "override eps");
  app.add_option("--seed", seed_override, "override seed");

  auto* orbit = app.add_subcommand("orbit", "enumerate and serialize the word ball");
  auto* exponents = app.add_subcommand("exponents", "critical exponent table");
  auto* limitset = app.add_subcommand("limitset", "limit flag sample and plot");
  auto* dimension = app.add_subcommand("dimension", "dimension estimates");
  auto* verify = app.add_subcommand("verify", "property suite");

  CLI11_PARSE(app, argc, argv);

  Config cfg = load_config(config_path);
  if (depth_override) cfg.max_word_length = *depth_override;
  if (eps_override) cfg.eps = *eps_override;
  if (seed_override) cfg.seed = *seed_override;

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  const fs::path dir(out_dir);
  const auto start = std::chrono::steady_clock::now();
  const bool sl = cfg.model == "sl";

  int code = 1;
  std::string command;
  try {
    if (orbit->parsed()) {
      command = "orbit";
      code = sl ? run_orbit(cfg, dir, make_sl_model(cfg))
                : run_orbit(cfg, dir, make_product_model(cfg));
    } else if (exponents->parsed()) {
      command = "exponents";
      code = sl ? run_exponents(cfg, dir, make_sl_model(cfg))
                : run_exponents(cfg, dir, make_product_model(cfg));
    } else if (limitset->parsed()) {
      command = "limitset";
      code = sl ? run_limitset(cfg, dir, make_sl_model(cfg))
                : run_limitset(cfg, dir, make_product_model(cfg));
    } else if (dimension->parsed()) {
      command = "dimension";
      code = sl ? run_dimension_sl(cfg, dir) : run_dimension_product(cfg, dir);
    } else if (verify->parsed()) {
      command = "verify";
      code = sl ? run_verify_sl(cfg, dir) : run_verify_product(cfg, dir);
    }
  } catch (const std::exception& e) {
    std::cerr << command << " failed: " << e.what() << "\n";
    return 1;
  }
  write_manifest(dir, command, cfg, start);
  return code;
}
