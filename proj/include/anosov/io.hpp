#pragma once

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "anosov/orbit_engine.hpp"

// Deterministic text artifacts: fixed float formatting, RFC 4180 CSV rows,
// the versioned columnar orbit file, and a minimal SVG scatter plot. Orbit
// files use 17 significant digits so every double round-trips exactly;
// human-facing tables use 12.

namespace anosov {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline std::string fmt_double_exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// RFC 4180: fields holding comma, quote, or line breaks are quoted, with
// embedded quotes doubled.
inline std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline void csv_row(std::ostream& os, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) os << ',';
    os << csv_escape(fields[i]);
  }
  os << "\r\n";
}

namespace detail {

inline std::string word_token(const Word& w) {
  if (w.empty()) return "e";
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(static_cast<int>(w[i]));
  }
  return out;
}

inline Word parse_word(const std::string& tok) {
  Word w;
  if (tok == "e") return w;
  std::size_t pos = 0;
  while (pos < tok.size()) {
    std::size_t next = tok.find(',', pos);
    if (next == std::string::npos) next = tok.size();
    const int letter = std::stoi(tok.substr(pos, next - pos));
    if (letter == 0 || letter > 127 || letter < -127)
      throw std::runtime_error("orbit file: bad word letter");
    w.push_back(static_cast<std::int8_t>(letter));
    pos = next + 1;
  }
  return w;
}

inline double parse_double(const std::string& tok) {
  std::size_t used = 0;
  const double v = std::stod(tok, &used);
  if (used != tok.size()) throw std::runtime_error("orbit file: bad numeric field");
  return v;
}

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

}  // namespace detail

inline constexpr int kOrbitFormatVersion = 1;

// header: "anosov-orbit <version> <model> <dim> <count>", then metadata
// lines, then one row per element
inline void write_orbit(std::ostream& os, const OrbitBall<SlOrbitModel>& ball) {
  const int dim = ball.model.pres.dim();
  os << "anosov-orbit " << kOrbitFormatVersion << " sl " << dim << ' '
     << ball.elements.size() << '\n';
  os << "meta max_word_length " << ball.max_word_length << '\n';
  os << "meta dedup_count " << ball.dedup_count << '\n';
  os << "meta truncated_by_overflow " << (ball.truncated_by_overflow ? 1 : 0) << '\n';
  os << "meta frontier_min_dF " << fmt_double_exact(ball.frontier_min_dF) << '\n';
  os << "meta frontier_min_dR " << fmt_double_exact(ball.frontier_min_dR) << '\n';
  if (ball.radius_cap)
    os << "meta radius_cap " << fmt_double_exact(*ball.radius_cap) << '\n';
  for (const auto& e : ball.elements) {
    os << detail::word_token(e.word) << ' ' << e.word_length << ' '
       << fmt_double_exact(e.d_F) << ' ' << fmt_double_exact(e.d_R);
    for (int i = 0; i < dim; ++i) os << ' ' << fmt_double_exact(e.sigma.size() ? e.sigma[i] : 0.0);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) os << ' ' << fmt_double_exact(e.matrix.m(r, c));
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) os << ' ' << fmt_double_exact(e.matrix.minv(r, c));
    if (e.flag) {
      os << " f";
      for (int i = 0; i < dim; ++i) os << ' ' << fmt_double_exact(e.flag->line()[i]);
      for (int i = 0; i < dim; ++i) os << ' ' << fmt_double_exact(e.flag->normal()[i]);
    } else {
      os << " *";
    }
    os << '\n';
  }
}

inline void write_orbit(std::ostream& os, const OrbitBall<ProductOrbitModel>& ball) {
  os << "anosov-orbit " << kOrbitFormatVersion << " product 2 " << ball.elements.size()
     << '\n';
  os << "meta max_word_length " << ball.max_word_length << '\n';
  os << "meta dedup_count " << ball.dedup_count << '\n';
  os << "meta truncated_by_overflow " << (ball.truncated_by_overflow ? 1 : 0) << '\n';
  os << "meta frontier_min_dF " << fmt_double_exact(ball.frontier_min_dF) << '\n';
  os << "meta frontier_min_dR " << fmt_double_exact(ball.frontier_min_dR) << '\n';
  if (ball.radius_cap)
    os << "meta radius_cap " << fmt_double_exact(*ball.radius_cap) << '\n';
  const auto bp = [](const BoundaryPoint& p) {
    return p.at_infinity ? std::string("inf") : fmt_double_exact(p.value);
  };
  for (const auto& e : ball.elements) {
    os << detail::word_token(e.word) << ' ' << e.word_length << ' '
       << fmt_double_exact(e.d_F) << ' ' << fmt_double_exact(e.d_R) << ' '
       << fmt_double_exact(e.sigma.size() ? e.sigma[0] : 0.0) << ' '
       << fmt_double_exact(e.sigma.size() ? e.sigma[1] : 0.0);
    for (const auto* m : {&e.matrix.first, &e.matrix.second})
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) os << ' ' << fmt_double_exact((*m)(r, c));
    if (e.flag)
      os << " f " << bp(e.flag->xi1) << ' ' << bp(e.flag->xi2);
    else
      os << " *";
    os << '\n';
  }
}

namespace detail {

struct OrbitHeader {
  std::string model;
  int dim = 0;
  std::size_t count = 0;
};

template <class Ball>
OrbitHeader read_orbit_header(std::istream& is, Ball& ball) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("orbit file: empty input");
  const auto head = split_fields(line);
  if (head.size() != 5 || head[0] != "anosov-orbit")
    throw std::runtime_error("orbit file: bad header");
  if (std::stoi(head[1]) != kOrbitFormatVersion)
    throw std::runtime_error("orbit file: unsupported format version " + head[1]);
  OrbitHeader h{head[2], std::stoi(head[3]), static_cast<std::size_t>(std::stoul(head[4]))};
  while (is.peek() == 'm') {
    std::getline(is, line);
    const auto f = split_fields(line);
    if (f.size() != 3 || f[0] != "meta") throw std::runtime_error("orbit file: bad meta line");
    if (f[1] == "max_word_length") ball.max_word_length = std::stoi(f[2]);
    else if (f[1] == "dedup_count") ball.dedup_count = std::stoul(f[2]);
    else if (f[1] == "truncated_by_overflow") ball.truncated_by_overflow = f[2] == "1";
    else if (f[1] == "frontier_min_dF") ball.frontier_min_dF = parse_double(f[2]);
    else if (f[1] == "frontier_min_dR") ball.frontier_min_dR = parse_double(f[2]);
    else if (f[1] == "radius_cap") ball.radius_cap = parse_double(f[2]);
    else throw std::runtime_error("orbit file: unknown meta key " + f[1]);
  }
  return h;
}

}  // namespace detail

inline OrbitBall<SlOrbitModel> read_orbit(std::istream& is, SlOrbitModel model) {
  OrbitBall<SlOrbitModel> ball{std::move(model)};
  const auto h = detail::read_orbit_header(is, ball);
  if (h.model != "sl") throw std::runtime_error("orbit file: expected an sl orbit");
  const int dim = h.dim;
  if (dim != ball.model.pres.dim())
    throw std::runtime_error("orbit file: dimension mismatch with the presentation");
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_fields(line);
    const std::size_t base = 4 + dim + 2 * dim * dim;
    if (f.size() < base + 1) throw std::runtime_error("orbit file: short element row");
    OrbitElement<SlOrbitModel> e;
    e.word = detail::parse_word(f[0]);
    e.word_length = std::stoi(f[1]);
    e.d_F = detail::parse_double(f[2]);
    e.d_R = detail::parse_double(f[3]);
    e.sigma = Vector(dim);
    for (int i = 0; i < dim; ++i) e.sigma[i] = detail::parse_double(f[4 + i]);
    e.matrix.m = Matrix(dim, dim);
    e.matrix.minv = Matrix(dim, dim);
    std::size_t k = 4 + dim;
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) e.matrix.m(r, c) = detail::parse_double(f[k++]);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) e.matrix.minv(r, c) = detail::parse_double(f[k++]);
    if (f[k] == "f") {
      if (f.size() != base + 1 + 2 * dim)
        throw std::runtime_error("orbit file: bad flag columns");
      Vector l(dim), n(dim);
      for (int i = 0; i < dim; ++i) l[i] = detail::parse_double(f[k + 1 + i]);
      for (int i = 0; i < dim; ++i) n[i] = detail::parse_double(f[k + 1 + dim + i]);
      e.flag = Flag(l, n);
    } else if (f[k] != "*" || f.size() != base + 1) {
      throw std::runtime_error("orbit file: bad flag marker");
    }
    ball.elements.push_back(std::move(e));
  }
  if (ball.elements.size() != h.count)
    throw std::runtime_error("orbit file: element count mismatch");
  return ball;
}

inline OrbitBall<ProductOrbitModel> read_orbit(std::istream& is, ProductOrbitModel model) {
  OrbitBall<ProductOrbitModel> ball{std::move(model)};
  const auto h = detail::read_orbit_header(is, ball);
  if (h.model != "product") throw std::runtime_error("orbit file: expected a product orbit");
  const auto bp = [](const std::string& tok) {
    return tok == "inf" ? BoundaryPoint::infinity()
                        : BoundaryPoint::finite(detail::parse_double(tok));
  };
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_fields(line);
    if (f.size() < 15) throw std::runtime_error("orbit file: short element row");
    OrbitElement<ProductOrbitModel> e;
    e.word = detail::parse_word(f[0]);
    e.word_length = std::stoi(f[1]);
    e.d_F = detail::parse_double(f[2]);
    e.d_R = detail::parse_double(f[3]);
    e.sigma = Vector(2);
    e.sigma[0] = detail::parse_double(f[4]);
    e.sigma[1] = detail::parse_double(f[5]);
    std::size_t k = 6;
    for (auto* m : {&e.matrix.first, &e.matrix.second})
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) (*m)(r, c) = detail::parse_double(f[k++]);
    if (f[k] == "f") {
      if (f.size() != 17) throw std::runtime_error("orbit file: bad flag columns");
      e.flag = ProductFlag{bp(f[k + 1]), bp(f[k + 2])};
    } else if (f[k] != "*" || f.size() != 15) {
      throw std::runtime_error("orbit file: bad flag marker");
    }
    ball.elements.push_back(std::move(e));
  }
  if (ball.elements.size() != h.count)
    throw std::runtime_error("orbit file: element count mismatch");
  return ball;
}

// Minimal deterministic scatter plot; coordinates map the given data window
// onto a fixed 800x800 viewport.
class SvgPlot {
 public:
  SvgPlot(double xmin, double xmax, double ymin, double ymax)
      : xmin_(xmin), xmax_(xmax), ymin_(ymin), ymax_(ymax) {
    if (!(xmin < xmax) || !(ymin < ymax))
      throw std::invalid_argument("SvgPlot: empty data window");
    body_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"800\" "
             "viewBox=\"0 0 800 800\">\n"
          << "<rect width=\"800\" height=\"800\" fill=\"white\"/>\n";
  }

  void point(double x, double y, double r = 2.0, const std::string& color = "#1f77b4") {
    body_ << "<circle cx=\"" << fmt_double(px(x)) << "\" cy=\"" << fmt_double(py(y))
          << "\" r=\"" << fmt_double(r) << "\" fill=\"" << color << "\"/>\n";
  }

  void line(double x1, double y1, double x2, double y2,
            const std::string& color = "#888888") {
    body_ << "<line x1=\"" << fmt_double(px(x1)) << "\" y1=\"" << fmt_double(py(y1))
          << "\" x2=\"" << fmt_double(px(x2)) << "\" y2=\"" << fmt_double(py(y2))
          << "\" stroke=\"" << color << "\" stroke-width=\"1\"/>\n";
  }

  void text(double x, double y, const std::string& s) {
    body_ << "<text x=\"" << fmt_double(px(x)) << "\" y=\"" << fmt_double(py(y))
          << "\" font-family=\"monospace\" font-size=\"14\">" << s << "</text>\n";
  }

  std::string str() const { return body_.str() + "</svg>\n"; }

 private:
  double px(double x) const { return 20.0 + 760.0 * (x - xmin_) / (xmax_ - xmin_); }
  double py(double y) const { return 780.0 - 760.0 * (y - ymin_) / (ymax_ - ymin_); }

  double xmin_, xmax_, ymin_, ymax_;
  std::ostringstream body_;
};

}  // namespace anosov
