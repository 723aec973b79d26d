#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <avgemb/avgemb.h>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// ---------- error plumbing ----------

struct cli_error : std::runtime_error {
  int code;
  cli_error(int code_, const std::string& msg) : std::runtime_error(msg), code(code_) {}
};

int exit_for(avgemb_status st) {
  switch (st) {
    case AVGEMB_OK: return 0;
    case AVGEMB_ERR_ARGUMENT:
    case AVGEMB_ERR_DOMAIN:
    case AVGEMB_ERR_DEGENERATE:
    case AVGEMB_ERR_IO: return 2;
    case AVGEMB_ERR_CONVERGENCE: return 3;
    default: return 1;
  }
}

void check(avgemb_status st) {
  if (st != AVGEMB_OK) throw cli_error(exit_for(st), avgemb_last_error());
}

// ---------- handle wrappers ----------

template <typename T, void (*Free)(T*)>
class handle {
 public:
  handle() = default;
  ~handle() { Free(p_); }
  handle(const handle&) = delete;
  handle& operator=(const handle&) = delete;
  handle(handle&& o) noexcept : p_(o.p_) { o.p_ = nullptr; }
  handle& operator=(handle&& o) noexcept {
    if (this != &o) {
      Free(p_);
      p_ = o.p_;
      o.p_ = nullptr;
    }
    return *this;
  }
  T* get() const { return p_; }
  T** out() { return &p_; }

 private:
  T* p_ = nullptr;
};

using dist_handle = handle<avgemb_dist, avgemb_dist_free>;
using matrix_handle = handle<avgemb_matrix, avgemb_matrix_free>;
using curve_handle = handle<avgemb_curve, avgemb_curve_free>;
using diag_handle = handle<avgemb_diag, avgemb_diag_free>;

// ---------- small utilities ----------

std::string fmt17(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.17g", v);
  return b;
}

std::string fmt_coord(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.2f", v);
  return b;
}

std::string fmt_short(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.4g", v);
  return b;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t at = text.find(sep, start);
    if (at == std::string::npos) {
      out.push_back(text.substr(start));
      return out;
    }
    out.push_back(text.substr(start, at - start));
    start = at + 1;
  }
}

std::uint64_t parse_u64(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    unsigned long long v = std::stoull(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw cli_error(2, "cannot parse " + what + " value '" + text + "'");
  }
}

double parse_double(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw cli_error(2, "cannot parse " + what + " value '" + text + "'");
  }
}

// "2..50" (inclusive) or "2,5,10"
std::vector<std::uint32_t> parse_k_range(const std::string& text) {
  std::vector<std::uint32_t> ks;
  std::size_t dots = text.find("..");
  if (dots != std::string::npos) {
    std::uint64_t lo = parse_u64(text.substr(0, dots), "--k");
    std::uint64_t hi = parse_u64(text.substr(dots + 2), "--k");
    if (lo < 1 || hi < lo) throw cli_error(2, "--k range must satisfy 1 <= lo <= hi");
    if (hi - lo >= 100000) throw cli_error(2, "--k range is unreasonably large");
    for (std::uint64_t k = lo; k <= hi; ++k) ks.push_back(static_cast<std::uint32_t>(k));
    return ks;
  }
  for (const std::string& part : split(text, ',')) {
    std::uint64_t k = parse_u64(part, "--k");
    if (k < 1 || k > 0xffffffffull) throw cli_error(2, "--k values must be in [1, 2^32)");
    ks.push_back(static_cast<std::uint32_t>(k));
  }
  if (ks.empty()) throw cli_error(2, "--k must list at least one value");
  return ks;
}

struct stopwatch {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

// ---------- global options and file emission ----------

struct global_options {
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out = ".";
  std::vector<std::string> formats = {"json", "csv", "svg"};

  bool want(const std::string& f) const {
    return std::find(formats.begin(), formats.end(), f) != formats.end();
  }
};

void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw cli_error(2, "cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw cli_error(2, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw cli_error(2, "cannot move " + tmp.string() + " into place: " + ec.message());
}

std::string csv_quote(const std::string& s) {
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += "\"\"";
    q += c;
  }
  q += "\"";
  return q;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// ---------- curve snapshots ----------

struct curve_data {
  std::string label;
  std::string provenance;
  std::uint64_t trials = 0;
  std::vector<std::uint32_t> k;
  std::vector<double> score;
  std::vector<double> se;
};

curve_data snapshot(const avgemb_curve* c) {
  curve_data out;
  out.provenance = avgemb_curve_provenance(c);
  out.trials = avgemb_curve_trials(c);
  std::size_t n = avgemb_curve_len(c);
  for (std::size_t i = 0; i < n; ++i) {
    out.k.push_back(avgemb_curve_k(c, i));
    out.score.push_back(avgemb_curve_score(c, i));
    out.se.push_back(avgemb_curve_stderr(c, i));
  }
  return out;
}

json curve_json(const curve_data& c) {
  return json{{"label", c.label},
              {"provenance", c.provenance},
              {"trials", c.trials},
              {"k", c.k},
              {"score", c.score},
              {"stderr", c.se}};
}

std::string curves_csv(const std::vector<curve_data>& curves) {
  std::string out = "label,provenance,k,score,stderr,trials\n";
  for (const curve_data& c : curves) {
    for (std::size_t i = 0; i < c.k.size(); ++i) {
      out += csv_quote(c.label);
      out += ',';
      out += c.provenance;
      out += ',';
      out += std::to_string(c.k[i]);
      out += ',';
      out += fmt17(c.score[i]);
      out += ',';
      out += fmt17(c.se[i]);
      out += ',';
      out += std::to_string(c.trials);
      out += '\n';
    }
  }
  return out;
}

// ---------- svg rendering (pure view, no numeric side effects) ----------

const char* const palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                               "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
constexpr int palette_size = 8;

std::string svg_line_chart(const std::vector<curve_data>& curves, const std::string& title) {
  const double x0 = 70, x1 = 620, y0 = 460, y1 = 50;  // y grows upward on screen

  double kmin = 1e300, kmax = -1e300;
  for (const curve_data& c : curves)
    for (std::uint32_t k : c.k) {
      kmin = std::min(kmin, static_cast<double>(k));
      kmax = std::max(kmax, static_cast<double>(k));
    }
  if (!(kmax > kmin)) {
    kmin -= 1.0;
    kmax += 1.0;
  }
  auto px = [&](double k) { return x0 + (k - kmin) / (kmax - kmin) * (x1 - x0); };
  auto py = [&](double s) { return y0 + s * (y1 - y0); };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 860 520\" "
                    "width=\"860\" height=\"520\">\n";
  svg += "<rect width=\"860\" height=\"520\" fill=\"white\"/>\n";
  svg += "<text x=\"70\" y=\"28\" font-family=\"sans-serif\" font-size=\"16\">" +
         xml_escape(title) + "</text>\n";

  // horizontal grid with score labels
  for (int t = 0; t <= 5; ++t) {
    double s = t / 5.0;
    std::string y = fmt_coord(py(s));
    svg += "<line x1=\"" + fmt_coord(x0) + "\" y1=\"" + y + "\" x2=\"" + fmt_coord(x1) +
           "\" y2=\"" + y + "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + fmt_coord(x0 - 10) + "\" y=\"" + fmt_coord(py(s) + 4) +
           "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">" + fmt_short(s) +
           "</text>\n";
  }

  // x ticks from the first curve's grid, thinned to at most 10
  if (!curves.empty()) {
    const std::vector<std::uint32_t>& ks = curves.front().k;
    std::size_t stride = std::max<std::size_t>(1, ks.size() / 10);
    for (std::size_t i = 0; i < ks.size(); i += stride) {
      double x = px(ks[i]);
      svg += "<line x1=\"" + fmt_coord(x) + "\" y1=\"" + fmt_coord(y0) + "\" x2=\"" +
             fmt_coord(x) + "\" y2=\"" + fmt_coord(y0 + 5) + "\" stroke=\"black\"/>\n";
      svg += "<text x=\"" + fmt_coord(x) + "\" y=\"" + fmt_coord(y0 + 20) +
             "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" +
             std::to_string(ks[i]) + "</text>\n";
    }
  }

  svg += "<line x1=\"" + fmt_coord(x0) + "\" y1=\"" + fmt_coord(y0) + "\" x2=\"" + fmt_coord(x1) +
         "\" y2=\"" + fmt_coord(y0) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + fmt_coord(x0) + "\" y1=\"" + fmt_coord(y0) + "\" x2=\"" + fmt_coord(x0) +
         "\" y2=\"" + fmt_coord(y1) + "\" stroke=\"black\"/>\n";
  svg += "<text x=\"" + fmt_coord((x0 + x1) / 2) + "\" y=\"" + fmt_coord(y0 + 40) +
         "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">k</text>\n";

  for (std::size_t ci = 0; ci < curves.size(); ++ci) {
    const curve_data& c = curves[ci];
    const char* color = palette[ci % palette_size];

    // +-1.96 se whiskers where a standard error exists
    for (std::size_t i = 0; i < c.k.size(); ++i) {
      if (c.se[i] <= 0.0) continue;
      double x = px(c.k[i]);
      double lo = std::max(0.0, c.score[i] - 1.96 * c.se[i]);
      double hi = std::min(1.0, c.score[i] + 1.96 * c.se[i]);
      svg += "<line x1=\"" + fmt_coord(x) + "\" y1=\"" + fmt_coord(py(lo)) + "\" x2=\"" +
             fmt_coord(x) + "\" y2=\"" + fmt_coord(py(hi)) + "\" stroke=\"" + color +
             "\" stroke-width=\"1\"/>\n";
    }

    std::string points;
    for (std::size_t i = 0; i < c.k.size(); ++i) {
      points += fmt_coord(px(c.k[i]));
      points += ',';
      points += fmt_coord(py(c.score[i]));
      points += ' ';
    }
    svg += "<polyline points=\"" + points + "\" fill=\"none\" stroke=\"" + color +
           "\" stroke-width=\"2\"/>\n";
    for (std::size_t i = 0; i < c.k.size(); ++i) {
      svg += "<circle cx=\"" + fmt_coord(px(c.k[i])) + "\" cy=\"" + fmt_coord(py(c.score[i])) +
             "\" r=\"2.5\" fill=\"" + color + "\"/>\n";
    }

    // legend
    double ly = 60.0 + 22.0 * static_cast<double>(ci);
    std::string label = c.label + " (" + c.provenance + ")";
    if (label.size() > 34) label = label.substr(0, 33) + "…";
    svg += "<line x1=\"640\" y1=\"" + fmt_coord(ly) + "\" x2=\"664\" y2=\"" + fmt_coord(ly) +
           "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"670\" y=\"" + fmt_coord(ly + 4) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + xml_escape(label) + "</text>\n";
  }

  svg += "</svg>\n";
  return svg;
}

struct histogram_panel {
  std::string dist;
  std::uint64_t d = 0;
  double overlay_mean = 0.0;
  double overlay_variance = 0.0;
  double sample_mean = 0.0;
  double sample_variance = 0.0;
  std::uint64_t samples = 0;
  std::vector<double> edges;  // bins+1 ascending
  std::vector<std::uint64_t> counts;
};

std::string svg_histogram_chart(const std::vector<histogram_panel>& panels,
                                const std::string& title) {
  const int cols = std::min<int>(3, static_cast<int>(panels.size()));
  const int rows = (static_cast<int>(panels.size()) + cols - 1) / cols;
  const double pw = 260, ph = 190, gap = 20, top = 50, left = 20;
  const double w = left * 2 + cols * pw + (cols - 1) * gap;
  const double h = top + rows * (ph + gap) + 10;

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " + fmt_coord(w) +
                    " " + fmt_coord(h) + "\" width=\"" + fmt_coord(w) + "\" height=\"" +
                    fmt_coord(h) + "\">\n";
  svg += "<rect width=\"" + fmt_coord(w) + "\" height=\"" + fmt_coord(h) +
         "\" fill=\"white\"/>\n";
  svg += "<text x=\"20\" y=\"28\" font-family=\"sans-serif\" font-size=\"16\">" +
         xml_escape(title) + "</text>\n";

  for (std::size_t pi = 0; pi < panels.size(); ++pi) {
    const histogram_panel& p = panels[pi];
    double ox = left + (pi % cols) * (pw + gap);
    double oy = top + (pi / cols) * (ph + gap);
    double base = oy + ph - 24;  // baseline above the x labels
    double lo = p.edges.front(), hi = p.edges.back();
    if (!(hi > lo)) hi = lo + 1.0;
    auto px = [&](double x) { return ox + (x - lo) / (hi - lo) * pw; };

    double total = 0.0;
    for (std::uint64_t c : p.counts) total += static_cast<double>(c);
    double sd = std::sqrt(std::max(p.overlay_variance, 0.0));
    double max_density = 1e-300;
    for (std::size_t b = 0; b < p.counts.size(); ++b) {
      double width = p.edges[b + 1] - p.edges[b];
      if (width > 0.0 && total > 0.0)
        max_density = std::max(max_density, p.counts[b] / (total * width));
    }
    if (sd > 0.0) {
      double peak = 0.0;
      avgemb_normal_pdf(p.overlay_mean, p.overlay_mean, sd, &peak);
      max_density = std::max(max_density, peak);
    }
    double yscale = (ph - 48) / max_density;

    for (std::size_t b = 0; b < p.counts.size(); ++b) {
      double width = p.edges[b + 1] - p.edges[b];
      if (width <= 0.0 || total <= 0.0) continue;
      double density = p.counts[b] / (total * width);
      double bh = density * yscale;
      svg += "<rect x=\"" + fmt_coord(px(p.edges[b])) + "\" y=\"" + fmt_coord(base - bh) +
             "\" width=\"" + fmt_coord(px(p.edges[b + 1]) - px(p.edges[b])) + "\" height=\"" +
             fmt_coord(bh) + "\" fill=\"#9ecae1\" stroke=\"none\"/>\n";
    }

    if (sd > 0.0) {
      std::string points;
      for (int t = 0; t <= 120; ++t) {
        double x = lo + (hi - lo) * t / 120.0;
        double f = 0.0;
        avgemb_normal_pdf(x, p.overlay_mean, sd, &f);
        points += fmt_coord(px(x));
        points += ',';
        points += fmt_coord(base - f * yscale);
        points += ' ';
      }
      svg += "<polyline points=\"" + points +
             "\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\"/>\n";
    }

    svg += "<line x1=\"" + fmt_coord(ox) + "\" y1=\"" + fmt_coord(base) + "\" x2=\"" +
           fmt_coord(ox + pw) + "\" y2=\"" + fmt_coord(base) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + fmt_coord(ox) + "\" y=\"" + fmt_coord(oy + 12) +
           "\" font-family=\"sans-serif\" font-size=\"12\">d = " + std::to_string(p.d) +
           "</text>\n";
    svg += "<text x=\"" + fmt_coord(ox) + "\" y=\"" + fmt_coord(base + 14) +
           "\" font-family=\"sans-serif\" font-size=\"10\">" + fmt_short(lo) + "</text>\n";
    svg += "<text x=\"" + fmt_coord(ox + pw) + "\" y=\"" + fmt_coord(base + 14) +
           "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">" + fmt_short(hi) +
           "</text>\n";
  }

  svg += "</svg>\n";
  return svg;
}

// ---------- distribution flags ----------

struct dist_options {
  std::string kind = "normal";
  double mean = 0.0;
  double sd = 1.0;
  double lo = -1.0;
  double hi = 1.0;
  double alpha = 2.0;
  double beta = 2.0;
  std::string moments_text;  // "mean,variance,skewness,kurtosis" bypasses --dist

  void add_flags(CLI::App* cmd, bool allow_moments) {
    cmd->add_option("--dist", kind, "marginal distribution")
        ->check(CLI::IsMember({"normal", "shifted-normal", "uniform", "rademacher", "beta"}));
    cmd->add_option("--mean", mean, "normal mean");
    cmd->add_option("--sd", sd, "normal standard deviation");
    cmd->add_option("--lo", lo, "uniform lower bound");
    cmd->add_option("--hi", hi, "uniform upper bound");
    cmd->add_option("--alpha", alpha, "beta shape alpha");
    cmd->add_option("--beta", beta, "beta shape beta");
    if (allow_moments)
      cmd->add_option("--moments", moments_text,
                      "mean,variance,skewness,kurtosis instead of --dist");
  }
};

struct marginal {
  dist_handle dist;  // empty when built from raw moments
  avgemb_moments moments{};
  std::string name;
};

marginal resolve_marginal(const dist_options& o) {
  marginal out;
  if (!o.moments_text.empty()) {
    std::vector<std::string> parts = split(o.moments_text, ',');
    if (parts.size() != 4)
      throw cli_error(2, "--moments needs four values: mean,variance,skewness,kurtosis");
    out.moments = {parse_double(parts[0], "--moments"), parse_double(parts[1], "--moments"),
                   parse_double(parts[2], "--moments"), parse_double(parts[3], "--moments")};
    check(avgemb_moments_check(&out.moments));
    char buf[160];
    std::snprintf(buf, sizeof buf, "moments(%g,%g,%g,%g)", out.moments.mean,
                  out.moments.variance, out.moments.skewness, out.moments.kurtosis);
    out.name = buf;
    return out;
  }
  if (o.kind == "normal")
    check(avgemb_dist_normal(o.mean, o.sd, out.dist.out()));
  else if (o.kind == "shifted-normal")
    check(avgemb_dist_shifted_normal(o.mean, o.sd, out.dist.out()));
  else if (o.kind == "uniform")
    check(avgemb_dist_uniform(o.lo, o.hi, out.dist.out()));
  else if (o.kind == "rademacher")
    check(avgemb_dist_rademacher(out.dist.out()));
  else if (o.kind == "beta")
    check(avgemb_dist_beta(o.alpha, o.beta, out.dist.out()));
  else
    throw cli_error(2, "unknown distribution '" + o.kind + "'");
  avgemb_dist_moments(out.dist.get(), &out.moments);
  out.name = avgemb_dist_name(out.dist.get());
  return out;
}

// ---------- report emission ----------

json moments_json(const avgemb_moments& m) {
  return json{{"mean", m.mean},
              {"variance", m.variance},
              {"skewness", m.skewness},
              {"kurtosis", m.kurtosis}};
}

void emit_report(const global_options& g, json& report, const std::vector<curve_data>& curves,
                 const std::string& chart_svg, const std::string& extra_csv_name = "",
                 const std::string& extra_csv = "") {
  fs::create_directories(g.out);
  std::vector<std::string> written;
  if (g.want("json")) {
    write_file_atomic(fs::path(g.out) / "report.json", report.dump(2) + "\n");
    written.push_back("report.json");
  }
  if (g.want("csv")) {
    if (!curves.empty()) {
      write_file_atomic(fs::path(g.out) / "curves.csv", curves_csv(curves));
      written.push_back("curves.csv");
    }
    if (!extra_csv_name.empty()) {
      write_file_atomic(fs::path(g.out) / extra_csv_name, extra_csv);
      written.push_back(extra_csv_name);
    }
  }
  if (g.want("svg") && !chart_svg.empty()) {
    write_file_atomic(fs::path(g.out) / "chart.svg", chart_svg);
    written.push_back("chart.svg");
  }
  std::string joined;
  for (const std::string& f : written) {
    if (!joined.empty()) joined += ", ";
    joined += f;
  }
  std::cout << "wrote " << joined << " under " << g.out << "\n";
}

json global_params_json(const global_options& g) {
  return json{{"seed", g.seed}, {"threads", g.threads}, {"formats", g.formats}};
}

// ---------- subcommands ----------

struct analytic_options {
  dist_options dist;
  std::uint64_t d = 128;
  std::uint64_t n_catalog = 1000;
  std::string k_text = "2..50";
  double quad_tol = 1e-8;
  int quad_depth = 48;
};

int run_analytic(const global_options& g, const analytic_options& o) {
  stopwatch total;
  marginal mg = resolve_marginal(o.dist);
  std::vector<std::uint32_t> ks = parse_k_range(o.k_text);
  avgemb_quad_options quad{o.quad_tol, o.quad_depth};

  curve_data curve;
  curve.label = "analytic";
  curve.provenance = "analytic";
  json breakdown = json::array();
  std::string breakdown_csv = "k,i,p_plus\n";

  stopwatch compute;
  for (std::uint32_t k : ks) {
    std::vector<double> p_plus(k, 0.0);
    double score = 0.0;
    check(avgemb_consistency_analytic(&mg.moments, k, o.n_catalog, o.d, &quad, &score,
                                      p_plus.data()));
    curve.k.push_back(k);
    curve.score.push_back(score);
    curve.se.push_back(0.0);
    breakdown.push_back(json{{"k", k}, {"p_plus", p_plus}});
    for (std::uint32_t i = 0; i < k; ++i)
      breakdown_csv += std::to_string(k) + "," + std::to_string(i + 1) + "," +
                       fmt17(p_plus[i]) + "\n";
  }
  double compute_s = compute.seconds();

  json report;
  report["report_version"] = 1;
  report["command"] = "analytic";
  report["parameters"] = global_params_json(g);
  report["parameters"]["dist"] = mg.name;
  report["parameters"]["moments"] = moments_json(mg.moments);
  report["parameters"]["d"] = o.d;
  report["parameters"]["N"] = o.n_catalog;
  report["parameters"]["k"] = ks;
  report["parameters"]["quad_rel_tol"] = o.quad_tol;
  report["parameters"]["quad_max_depth"] = o.quad_depth;
  report["curves"] = json::array({curve_json(curve)});
  report["breakdown"] = breakdown;
  report["timing"] = json{{"compute_seconds", compute_s}, {"total_seconds", total.seconds()}};

  emit_report(g, report, {curve},
              svg_line_chart({curve}, "consistency of average embeddings — " + mg.name),
              "breakdown.csv", breakdown_csv);
  return 0;
}

struct simulate_options {
  dist_options dist;
  std::uint64_t d = 128;
  std::uint64_t n_catalog = 1000;
  std::string k_text = "2..50";
  std::uint64_t trials = 1000;
  bool with_analytic = false;
  double quad_tol = 1e-8;
  int quad_depth = 48;
};

int run_simulate(const global_options& g, const simulate_options& o) {
  stopwatch total;
  if (!o.dist.moments_text.empty())
    throw cli_error(2, "simulate draws samples and needs --dist, not --moments");
  marginal mg = resolve_marginal(o.dist);
  std::vector<std::uint32_t> ks = parse_k_range(o.k_text);
  if (o.trials == 1)
    std::cerr << "warning: trials=1 cannot estimate a spread; stderr is reported as 0\n";

  stopwatch synth_t;
  matrix_handle m;
  check(avgemb_matrix_synth(mg.dist.get(), o.n_catalog, o.d, {g.seed, 0}, g.threads, m.out()));
  double synth_s = synth_t.seconds();

  stopwatch mc_t;
  curve_handle mc;
  check(avgemb_curve_mc(m.get(), ks.data(), ks.size(), o.trials, {g.seed, 1}, g.threads,
                        mc.out()));
  double mc_s = mc_t.seconds();
  curve_data sim = snapshot(mc.get());
  sim.label = avgemb_matrix_label(m.get());

  std::vector<curve_data> curves = {sim};
  json deltas;
  double analytic_s = 0.0;
  if (o.with_analytic) {
    stopwatch ana_t;
    avgemb_quad_options quad{o.quad_tol, o.quad_depth};
    curve_handle ana;
    check(avgemb_curve_analytic(&mg.moments, ks.data(), ks.size(), o.n_catalog, o.d, &quad,
                                ana.out()));
    analytic_s = ana_t.seconds();
    curve_data ac = snapshot(ana.get());
    ac.label = "analytic";
    curves.push_back(ac);

    std::vector<double> diff(ks.size());
    double max_abs = 0.0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
      diff[i] = sim.score[i] - ac.score[i];
      max_abs = std::max(max_abs, std::fabs(diff[i]));
    }
    deltas = json::array({json{{"label", sim.label},
                               {"vs", "analytic"},
                               {"delta", diff},
                               {"max_abs_delta", max_abs}}});
  }

  json report;
  report["report_version"] = 1;
  report["command"] = "simulate";
  report["parameters"] = global_params_json(g);
  report["parameters"]["dist"] = mg.name;
  report["parameters"]["moments"] = moments_json(mg.moments);
  report["parameters"]["d"] = o.d;
  report["parameters"]["N"] = o.n_catalog;
  report["parameters"]["k"] = ks;
  report["parameters"]["trials"] = o.trials;
  report["parameters"]["with_analytic"] = o.with_analytic;
  report["curves"] = json::array();
  for (const curve_data& c : curves) report["curves"].push_back(curve_json(c));
  if (!deltas.is_null()) report["deltas"] = deltas;
  report["timing"] = json{{"synth_seconds", synth_s},
                          {"mc_seconds", mc_s},
                          {"analytic_seconds", analytic_s},
                          {"total_seconds", total.seconds()}};

  emit_report(g, report, curves,
              svg_line_chart(curves, "simulated consistency — " + mg.name));
  return 0;
}

struct empirical_options {
  std::string input;
  std::string input_format = "auto";
  bool csv_header = false;
  bool center = true;
  bool baseline_normal = false;
  std::string k_text = "2..50";
  std::uint64_t trials = 1000;
  std::uint64_t correlation_sample = 10000;
};

json diagnostics_json(const avgemb_diag* diag) {
  json out;
  out["dim"] = avgemb_diag_dim(diag);
  avgemb_moments mm;
  int degenerate = 0;
  avgemb_diag_pooled_moments(diag, &mm, &degenerate);
  out["pooled"] = json{{"moments", moments_json(mm)}, {"degenerate", degenerate != 0}};
  json dims = json::array();
  for (std::uint64_t j = 0; j < avgemb_diag_dim(diag); ++j) {
    avgemb_diag_dimension_moments(diag, j, &mm, &degenerate);
    dims.push_back(json{{"moments", moments_json(mm)}, {"degenerate", degenerate != 0}});
  }
  out["per_dimension"] = dims;
  out["max_abs_offdiag_correlation"] = avgemb_diag_max_abs_correlation(diag);
  out["correlation_pairs_used"] = avgemb_diag_correlation_pairs(diag);
  out["mean_vector_norm"] = avgemb_diag_mean_vector_norm(diag);
  out["centered"] = avgemb_diag_centered(diag) != 0;
  return out;
}

int run_empirical(const global_options& g, const empirical_options& o) {
  stopwatch total;
  std::vector<std::uint32_t> ks = parse_k_range(o.k_text);

  avgemb_file_format fmt;
  if (o.input_format == "binary")
    fmt = AVGEMB_FORMAT_BINARY;
  else if (o.input_format == "csv")
    fmt = AVGEMB_FORMAT_CSV;
  else
    fmt = fs::path(o.input).extension() == ".csv" ? AVGEMB_FORMAT_CSV : AVGEMB_FORMAT_BINARY;

  stopwatch load_t;
  matrix_handle loaded;
  check(avgemb_matrix_load(o.input.c_str(), fmt, o.csv_header ? 1 : 0, loaded.out()));
  matrix_handle centered;
  const avgemb_matrix* used = loaded.get();
  if (o.center) {
    check(avgemb_matrix_center(loaded.get(), g.threads, centered.out()));
    used = centered.get();
  }
  double load_s = load_t.seconds();
  std::uint64_t n = avgemb_matrix_n_items(used);
  std::uint64_t d = avgemb_matrix_dim(used);

  stopwatch diag_t;
  diag_handle diag;
  check(avgemb_diagnostics(used, o.correlation_sample, {g.seed, 4}, g.threads, diag.out()));
  double diag_s = diag_t.seconds();

  stopwatch mc_t;
  curve_handle mc;
  check(avgemb_curve_mc(used, ks.data(), ks.size(), o.trials, {g.seed, 1}, g.threads, mc.out()));
  double mc_s = mc_t.seconds();
  curve_data emp = snapshot(mc.get());
  emp.label = avgemb_matrix_label(used);
  if (o.center) emp.label += " (centered)";

  std::vector<curve_data> curves = {emp};
  double baseline_sd = 0.0, baseline_s = 0.0;
  if (o.baseline_normal) {
    avgemb_moments pooled;
    int degenerate = 0;
    avgemb_diag_pooled_moments(diag.get(), &pooled, &degenerate);
    if (degenerate) throw cli_error(2, "input embeddings are constant; no normal baseline");
    baseline_sd = std::sqrt(pooled.variance);

    stopwatch base_t;
    dist_handle nd;
    check(avgemb_dist_normal(0.0, baseline_sd, nd.out()));
    matrix_handle bm;
    check(avgemb_matrix_synth(nd.get(), n, d, {g.seed, 2}, g.threads, bm.out()));
    curve_handle bc;
    check(avgemb_curve_mc(bm.get(), ks.data(), ks.size(), o.trials, {g.seed, 3}, g.threads,
                          bc.out()));
    baseline_s = base_t.seconds();
    curve_data base = snapshot(bc.get());
    base.label = avgemb_matrix_label(bm.get());
    curves.push_back(base);
  }

  json report;
  report["report_version"] = 1;
  report["command"] = "empirical";
  report["parameters"] = global_params_json(g);
  report["parameters"]["input"] = o.input;
  report["parameters"]["input_format"] = fmt == AVGEMB_FORMAT_CSV ? "csv" : "binary";
  report["parameters"]["csv_header"] = o.csv_header;
  report["parameters"]["center"] = o.center;
  report["parameters"]["baseline_normal"] = o.baseline_normal;
  if (o.baseline_normal) report["parameters"]["baseline_sd"] = baseline_sd;
  report["parameters"]["n_items"] = n;
  report["parameters"]["d"] = d;
  report["parameters"]["k"] = ks;
  report["parameters"]["trials"] = o.trials;
  report["parameters"]["correlation_sample"] = o.correlation_sample;
  report["curves"] = json::array();
  for (const curve_data& c : curves) report["curves"].push_back(curve_json(c));
  report["diagnostics"] = diagnostics_json(diag.get());
  report["timing"] = json{{"load_seconds", load_s},
                          {"diagnostics_seconds", diag_s},
                          {"mc_seconds", mc_s},
                          {"baseline_seconds", baseline_s},
                          {"total_seconds", total.seconds()}};

  emit_report(g, report, curves,
              svg_line_chart(curves, "empirical consistency — " + fs::path(o.input)
                                                                      .filename()
                                                                      .string()));
  return 0;
}

struct histogram_options {
  dist_options dist;
  std::string d_list_text = "2,10,32,64,128";
  std::uint64_t vectors = 1000;
  std::uint64_t pairs = 100000;
  std::uint64_t bins = 60;
};

int run_histogram(const global_options& g, const histogram_options& o) {
  stopwatch total;
  if (!o.dist.moments_text.empty())
    throw cli_error(2, "histogram draws samples and needs --dist, not --moments");
  marginal mg = resolve_marginal(o.dist);
  if (o.vectors < 2) throw cli_error(2, "--vectors must be at least 2");
  if (o.pairs < 2) throw cli_error(2, "--pairs must be at least 2");
  if (o.bins < 1) throw cli_error(2, "--bins must be at least 1");

  std::vector<std::uint64_t> d_list;
  for (const std::string& part : split(o.d_list_text, ','))
    d_list.push_back(parse_u64(part, "--d-list"));
  if (d_list.empty()) throw cli_error(2, "--d-list must list at least one dimension");

  std::vector<histogram_panel> panels;
  std::string hist_csv = "dist,d,bin_lo,bin_hi,count\n";
  stopwatch compute;
  for (std::size_t di = 0; di < d_list.size(); ++di) {
    std::uint64_t d = d_list[di];
    matrix_handle m;
    check(avgemb_matrix_synth(mg.dist.get(), o.vectors, d, {g.seed, 10 + di}, g.threads,
                              m.out()));
    std::vector<double> sims(o.pairs, 0.0);
    check(avgemb_similarity_sample(m.get(), o.pairs, {g.seed, 1000 + di}, sims.data()));

    avgemb_normal_approx overlay;
    check(avgemb_inner_product_moments(&mg.moments, &mg.moments, d, &overlay));

    histogram_panel p;
    p.dist = mg.name;
    p.d = d;
    p.overlay_mean = overlay.mean;
    p.overlay_variance = overlay.variance;
    p.samples = o.pairs;

    double mean = 0.0;
    for (double v : sims) mean += v;
    mean /= static_cast<double>(sims.size());
    double var = 0.0;
    for (double v : sims) var += (v - mean) * (v - mean);
    var /= static_cast<double>(sims.size());
    p.sample_mean = mean;
    p.sample_variance = var;

    double lo = *std::min_element(sims.begin(), sims.end());
    double hi = *std::max_element(sims.begin(), sims.end());
    if (!(hi > lo)) hi = lo + 1.0;
    p.edges.resize(o.bins + 1);
    for (std::uint64_t b = 0; b <= o.bins; ++b)
      p.edges[b] = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(o.bins);
    p.counts.assign(o.bins, 0);
    for (double v : sims) {
      std::uint64_t b = static_cast<std::uint64_t>((v - lo) / (hi - lo) *
                                                   static_cast<double>(o.bins));
      if (b >= o.bins) b = o.bins - 1;  // right edge lands in the last bin
      p.counts[b] += 1;
    }

    for (std::uint64_t b = 0; b < o.bins; ++b)
      hist_csv += csv_quote(p.dist) + "," + std::to_string(d) + "," + fmt17(p.edges[b]) + "," +
                  fmt17(p.edges[b + 1]) + "," + std::to_string(p.counts[b]) + "\n";
    panels.push_back(std::move(p));
  }
  double compute_s = compute.seconds();

  json report;
  report["report_version"] = 1;
  report["command"] = "histogram";
  report["parameters"] = global_params_json(g);
  report["parameters"]["dist"] = mg.name;
  report["parameters"]["moments"] = moments_json(mg.moments);
  report["parameters"]["d_list"] = d_list;
  report["parameters"]["vectors"] = o.vectors;
  report["parameters"]["pairs"] = o.pairs;
  report["parameters"]["bins"] = o.bins;
  report["histograms"] = json::array();
  for (const histogram_panel& p : panels) {
    report["histograms"].push_back(
        json{{"dist", p.dist},
             {"d", p.d},
             {"overlay", json{{"mean", p.overlay_mean}, {"variance", p.overlay_variance}}},
             {"sample",
              json{{"mean", p.sample_mean}, {"variance", p.sample_variance},
                   {"count", p.samples}}},
             {"bin_edges", p.edges},
             {"counts", p.counts}});
  }
  report["timing"] = json{{"compute_seconds", compute_s}, {"total_seconds", total.seconds()}};

  emit_report(g, report, {},
              svg_histogram_chart(panels, "pairwise similarity — " + mg.name),
              "histogram.csv", hist_csv);
  return 0;
}

struct compare_options {
  std::vector<std::string> reports;
};

std::string grid_text(const std::vector<std::uint32_t>& ks) {
  std::string out = "[";
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(ks[i]);
  }
  out += "]";
  return out;
}

int run_compare(const global_options& g, const compare_options& o) {
  stopwatch total;
  if (o.reports.size() < 2) throw cli_error(2, "compare needs at least two report.json files");

  std::vector<curve_data> curves;
  for (const std::string& path : o.reports) {
    std::ifstream in(path);
    if (!in) throw cli_error(2, "cannot open " + path);
    json r;
    try {
      r = json::parse(in);
    } catch (const std::exception& e) {
      throw cli_error(2, "cannot parse " + path + ": " + e.what());
    }
    if (!r.contains("curves") || !r["curves"].is_array() || r["curves"].empty())
      throw cli_error(2, path + " contains no curves");
    try {
      for (const json& c : r["curves"]) {
        curve_data cd;
        cd.label = c.at("label").get<std::string>();
        cd.provenance = c.at("provenance").get<std::string>();
        cd.trials = c.at("trials").get<std::uint64_t>();
        cd.k = c.at("k").get<std::vector<std::uint32_t>>();
        cd.score = c.at("score").get<std::vector<double>>();
        cd.se = c.at("stderr").get<std::vector<double>>();
        if (cd.score.size() != cd.k.size() || cd.se.size() != cd.k.size())
          throw cli_error(2, path + ": curve arrays have mismatched lengths");
        curves.push_back(std::move(cd));
      }
    } catch (const json::exception& e) {
      throw cli_error(2, path + ": malformed curve entry: " + e.what());
    }
  }

  for (const curve_data& c : curves) {
    if (c.k != curves.front().k)
      throw cli_error(2, "k grids differ: '" + curves.front().label + "' has " +
                             grid_text(curves.front().k) + " but '" + c.label + "' has " +
                             grid_text(c.k));
  }

  json deltas = json::array();
  for (std::size_t ci = 1; ci < curves.size(); ++ci) {
    std::vector<double> diff(curves[ci].k.size());
    double max_abs = 0.0;
    for (std::size_t i = 0; i < diff.size(); ++i) {
      diff[i] = curves[ci].score[i] - curves.front().score[i];
      max_abs = std::max(max_abs, std::fabs(diff[i]));
    }
    deltas.push_back(json{{"label", curves[ci].label},
                          {"vs", curves.front().label},
                          {"delta", diff},
                          {"max_abs_delta", max_abs}});
  }

  json report;
  report["report_version"] = 1;
  report["command"] = "compare";
  report["parameters"] = global_params_json(g);
  report["parameters"]["inputs"] = o.reports;
  report["curves"] = json::array();
  for (const curve_data& c : curves) report["curves"].push_back(curve_json(c));
  report["deltas"] = deltas;
  report["timing"] = json{{"total_seconds", total.seconds()}};

  emit_report(g, report, curves, svg_line_chart(curves, "consistency curves compared"));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"consistency of average embeddings: closed forms, simulation, measurement"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(avgemb_version()));

  global_options g;
  app.add_option("--seed", g.seed, "master seed; all randomness derives from it");
  app.add_option("--threads", g.threads, "worker threads (0 = all cores)")
      ->envname("AVGEMB_THREADS");
  app.add_option("--out", g.out, "output directory")->capture_default_str();
  app.add_option("--format", g.formats, "outputs to write: json, csv, svg")
      ->delimiter(',')
      ->check(CLI::IsMember({"json", "csv", "svg"}));

  analytic_options ao;
  CLI::App* cmd_analytic = app.add_subcommand("analytic", "closed-form consistency curve");
  cmd_analytic->fallthrough();
  ao.dist.add_flags(cmd_analytic, true);
  cmd_analytic->add_option("--d", ao.d, "embedding dimension")->capture_default_str();
  cmd_analytic->add_option("--N", ao.n_catalog, "catalog size")->capture_default_str();
  cmd_analytic->add_option("--k", ao.k_text, "subset sizes, e.g. 2..50 or 2,5,10")
      ->capture_default_str();
  cmd_analytic->add_option("--quad-tol", ao.quad_tol, "quadrature relative tolerance")
      ->capture_default_str();
  cmd_analytic->add_option("--quad-depth", ao.quad_depth, "quadrature max refinement depth")
      ->capture_default_str();

  simulate_options so;
  CLI::App* cmd_simulate = app.add_subcommand("simulate", "monte carlo consistency curve on "
                                                          "synthetic embeddings");
  cmd_simulate->fallthrough();
  so.dist.add_flags(cmd_simulate, false);
  cmd_simulate->add_option("--d", so.d, "embedding dimension")->capture_default_str();
  cmd_simulate->add_option("--N", so.n_catalog, "catalog size")->capture_default_str();
  cmd_simulate->add_option("--k", so.k_text, "subset sizes")->capture_default_str();
  cmd_simulate->add_option("--trials", so.trials, "subsets per k")->capture_default_str();
  cmd_simulate->add_flag("--with-analytic", so.with_analytic,
                         "add the closed-form curve and per-k deltas");
  cmd_simulate->add_option("--quad-tol", so.quad_tol, "quadrature relative tolerance");
  cmd_simulate->add_option("--quad-depth", so.quad_depth, "quadrature max refinement depth");

  empirical_options eo;
  CLI::App* cmd_empirical = app.add_subcommand("empirical", "consistency curve of an embedding "
                                                            "file");
  cmd_empirical->fallthrough();
  cmd_empirical->add_option("--input", eo.input, "embedding matrix file")->required();
  cmd_empirical->add_option("--input-format", eo.input_format, "auto, binary or csv")
      ->check(CLI::IsMember({"auto", "binary", "csv"}))
      ->capture_default_str();
  cmd_empirical->add_flag("--csv-header", eo.csv_header, "skip the first csv line");
  cmd_empirical->add_flag("--center,!--no-center", eo.center,
                          "subtract per-dimension means first (default on)");
  cmd_empirical->add_flag("--baseline-normal", eo.baseline_normal,
                          "add a matched synthetic normal baseline curve");
  cmd_empirical->add_option("--k", eo.k_text, "subset sizes")->capture_default_str();
  cmd_empirical->add_option("--trials", eo.trials, "subsets per k")->capture_default_str();
  cmd_empirical->add_option("--correlation-sample", eo.correlation_sample,
                            "max dimension pairs examined by diagnostics")
      ->capture_default_str();

  histogram_options ho;
  CLI::App* cmd_histogram = app.add_subcommand("histogram", "pairwise similarity histograms "
                                                            "with a normal overlay");
  cmd_histogram->fallthrough();
  ho.dist.add_flags(cmd_histogram, false);
  cmd_histogram->add_option("--d-list", ho.d_list_text, "dimensions, comma separated")
      ->capture_default_str();
  cmd_histogram->add_option("--vectors", ho.vectors, "vectors per dimension")
      ->capture_default_str();
  cmd_histogram->add_option("--pairs", ho.pairs, "sampled pairs per dimension")
      ->capture_default_str();
  cmd_histogram->add_option("--bins", ho.bins, "histogram bins")->capture_default_str();

  compare_options co;
  CLI::App* cmd_compare = app.add_subcommand("compare", "merge curves from prior reports");
  cmd_compare->fallthrough();
  cmd_compare->add_option("reports", co.reports, "report.json files")->expected(-1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (cmd_analytic->parsed()) return run_analytic(g, ao);
    if (cmd_simulate->parsed()) return run_simulate(g, so);
    if (cmd_empirical->parsed()) return run_empirical(g, eo);
    if (cmd_histogram->parsed()) return run_histogram(g, ho);
    if (cmd_compare->parsed()) return run_compare(g, co);
  } catch (const cli_error& e) {
    std::cerr << "avgemb: " << e.what() << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "avgemb: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
