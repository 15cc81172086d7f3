#include "resilient_mfac/charts.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

namespace rmfac {

namespace {

constexpr std::array<const char*, 8> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                              "#9467bd", "#8c564b", "#e377c2", "#17becf"};

struct Series {
  std::string label;
  std::string color;
  std::vector<std::pair<double, double>> points;  // NaN y breaks the line
  bool dashed = false;
};

struct Band {
  double x0, x1;  // shaded x range
  double row;     // lane index, used by lane panels
};

struct Panel {
  std::string title;
  std::string y_label;
  std::vector<Series> series;
  // Lane panels draw one horizontal lane per label and shade bands in it.
  std::vector<std::string> lanes;
  std::vector<Band> bands;
};

class SvgFigure {
 public:
  SvgFigure(std::string title, double x_min, double x_max) : title_(std::move(title)), x_min_(x_min), x_max_(x_max) {
    if (!(x_max_ > x_min_)) x_max_ = x_min_ + 1.0;
  }

  void add(Panel p) { panels_.push_back(std::move(p)); }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write chart '" + path.string() + "'");
    out << render();
    if (!out) throw Error("error writing chart '" + path.string() + "'");
  }

 private:
  static constexpr double kWidth = 960.0;
  static constexpr double kPanelHeight = 260.0;
  static constexpr double kLeft = 70.0, kRight = 150.0, kTop = 40.0, kGap = 50.0;

  std::string render() const {
    std::ostringstream os;
    os.precision(6);
    const double height = kTop + static_cast<double>(panels_.size()) * (kPanelHeight + kGap);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << height
       << "\" viewBox=\"0 0 " << kWidth << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"16\">" << escape(title_)
       << "</text>\n";
    for (std::size_t p = 0; p < panels_.size(); ++p) {
      render_panel(os, panels_[p], kTop + static_cast<double>(p) * (kPanelHeight + kGap) + 20.0);
    }
    os << "</svg>\n";
    return os.str();
  }

  void render_panel(std::ostringstream& os, const Panel& panel, double top) const {
    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kPanelHeight - 30.0;
    auto sx = [&](double x) { return kLeft + (x - x_min_) / (x_max_ - x_min_) * plot_w; };

    os << "<text x=\"" << kLeft << "\" y=\"" << top - 6 << "\" font-size=\"13\">" << escape(panel.title) << "</text>\n";
    os << "<rect x=\"" << kLeft << "\" y=\"" << top << "\" width=\"" << plot_w << "\" height=\"" << plot_h
       << "\" fill=\"none\" stroke=\"#444\"/>\n";
    axis_x(os, sx, top + plot_h);

    if (!panel.lanes.empty()) {
      const double lane_h = plot_h / static_cast<double>(panel.lanes.size());
      for (std::size_t l = 0; l < panel.lanes.size(); ++l) {
        const double y = top + lane_h * static_cast<double>(l);
        os << "<text x=\"" << kLeft - 6 << "\" y=\"" << y + lane_h / 2 + 4 << "\" text-anchor=\"end\" font-size=\"10\">"
           << escape(panel.lanes[l]) << "</text>\n";
        if (l > 0) {
          os << "<line x1=\"" << kLeft << "\" y1=\"" << y << "\" x2=\"" << kLeft + plot_w << "\" y2=\"" << y
             << "\" stroke=\"#ddd\"/>\n";
        }
      }
      for (const auto& b : panel.bands) {
        os << "<rect x=\"" << sx(b.x0) << "\" y=\"" << top + lane_h * b.row + 1 << "\" width=\""
           << std::max(1.0, sx(b.x1) - sx(b.x0)) << "\" height=\"" << lane_h - 2
           << "\" fill=\"#d62728\" fill-opacity=\"0.55\"/>\n";
      }
      return;
    }

    double lo = 0.0, hi = 0.0;
    bool first = true;
    for (const auto& s : panel.series) {
      for (const auto& [x, y] : s.points) {
        if (!std::isfinite(y)) continue;
        lo = first ? y : std::min(lo, y);
        hi = first ? y : std::max(hi, y);
        first = false;
      }
    }
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
    auto sy = [&](double y) { return top + plot_h - (y - lo) / (hi - lo) * plot_h; };

    for (int t = 0; t <= 4; ++t) {
      const double v = lo + (hi - lo) * t / 4.0;
      os << "<text x=\"" << kLeft - 6 << "\" y=\"" << sy(v) + 4 << "\" text-anchor=\"end\" font-size=\"10\">" << v
         << "</text>\n";
    }
    os << "<text transform=\"translate(16," << top + plot_h / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
       << escape(panel.y_label) << "</text>\n";

    double legend_y = top + 12;
    for (const auto& s : panel.series) {
      std::string d;
      bool pen_down = false;
      std::ostringstream seg;
      seg.precision(6);
      for (const auto& [x, y] : s.points) {
        if (!std::isfinite(y)) {
          pen_down = false;
          continue;
        }
        seg << (pen_down ? 'L' : 'M') << sx(x) << ',' << sy(y) << ' ';
        pen_down = true;
      }
      os << "<path d=\"" << seg.str() << "\" fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.2\""
         << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n";
      os << "<line x1=\"" << kWidth - kRight + 12 << "\" y1=\"" << legend_y - 4 << "\" x2=\"" << kWidth - kRight + 32
         << "\" y2=\"" << legend_y - 4 << "\" stroke=\"" << s.color << "\" stroke-width=\"2\""
         << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n";
      os << "<text x=\"" << kWidth - kRight + 38 << "\" y=\"" << legend_y << "\">" << escape(s.label) << "</text>\n";
      legend_y += 16;
    }
  }

  template <class Scale>
  void axis_x(std::ostringstream& os, Scale sx, double baseline) const {
    for (int t = 0; t <= 5; ++t) {
      const double v = x_min_ + (x_max_ - x_min_) * t / 5.0;
      os << "<text x=\"" << sx(v) << "\" y=\"" << baseline + 14 << "\" text-anchor=\"middle\" font-size=\"10\">"
         << std::llround(v) << "</text>\n";
    }
  }

  static std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
      switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        default: out += c;
      }
    }
    return out;
  }

  std::string title_;
  double x_min_, x_max_;
  std::vector<Panel> panels_;
};

std::string color(std::size_t i) { return kPalette[i % kPalette.size()]; }

}  // namespace

std::vector<std::filesystem::path> render_charts(const TraceTable& trace,
                                                 const std::vector<std::pair<Step, Vec>>& leader,
                                                 const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::size_t n = trace.n_agents;
  const Eigen::Index ny = trace.output_dim;
  double k_max = 1.0;
  for (const auto& r : trace.rows) k_max = std::max(k_max, static_cast<double>(r.k));

  std::vector<std::filesystem::path> written;

  // (a) outputs per channel with the leader overlay
  {
    SvgFigure fig("Agent outputs", 0.0, k_max);
    for (Eigen::Index m = 0; m < ny; ++m) {
      Panel p;
      p.title = "channel " + std::to_string(m + 1);
      p.y_label = "y_" + std::to_string(m + 1);
      for (std::size_t i = 0; i < n; ++i) p.series.push_back({"agent " + std::to_string(i + 1), color(i), {}, false});
      for (const auto& r : trace.rows) {
        if (r.agent >= 1 && r.agent <= n) p.series[r.agent - 1].points.emplace_back(static_cast<double>(r.k), r.y(m));
      }
      if (!leader.empty()) {
        Series s{"leader", "#000000", {}, true};
        for (const auto& [k, v] : leader) s.points.emplace_back(static_cast<double>(k), v(m));
        p.series.push_back(std::move(s));
      }
      fig.add(std::move(p));
    }
    written.push_back(out_dir / "outputs.svg");
    fig.save(written.back());
  }

  // (b) observer estimation error norms
  {
    SvgFigure fig("Estimation error", 0.0, k_max);
    Panel p;
    p.title = "||chi_tilde|| per agent";
    p.y_label = "||chi_tilde||";
    for (std::size_t i = 0; i < n; ++i) p.series.push_back({"agent " + std::to_string(i + 1), color(i), {}, false});
    for (const auto& r : trace.rows) {
      if (r.agent >= 1 && r.agent <= n) {
        p.series[r.agent - 1].points.emplace_back(static_cast<double>(r.k), r.chi_tilde.norm());
      }
    }
    fig.add(std::move(p));
    written.push_back(out_dir / "estimation_error.svg");
    fig.save(written.back());
  }

  // (c) attack timeline
  {
    SvgFigure fig("Attack timeline", 0.0, k_max);
    Panel fdi;
    fdi.title = "FDI magnitude ||ya - y|| over delivered channels";
    fdi.y_label = "|delta|";
    for (std::size_t i = 0; i < n; ++i) fdi.series.push_back({"agent " + std::to_string(i + 1), color(i), {}, false});

    Panel dos;
    dos.title = "DoS denial intervals";
    for (std::size_t i = 0; i < n; ++i) {
      for (Eigen::Index m = 0; m < ny; ++m) dos.lanes.push_back("a" + std::to_string(i + 1) + " ch" + std::to_string(m + 1));
    }
    // open[lane] = start step of the running denial, or -1
    std::vector<double> open(dos.lanes.size(), -1.0);
    for (const auto& r : trace.rows) {
      if (r.agent < 1 || r.agent > n) continue;
      double sq = 0.0;
      for (Eigen::Index m = 0; m < ny; ++m) {
        if (r.h(m) != 0 && std::isfinite(r.ya(m))) sq += (r.ya(m) - r.y(m)) * (r.ya(m) - r.y(m));
        const std::size_t lane = (r.agent - 1) * static_cast<std::size_t>(ny) + static_cast<std::size_t>(m);
        const double k = static_cast<double>(r.k);
        if (r.h(m) == 0 && open[lane] < 0) open[lane] = k;
        if (r.h(m) != 0 && open[lane] >= 0) {
          dos.bands.push_back({open[lane], k, static_cast<double>(lane)});
          open[lane] = -1.0;
        }
      }
      fdi.series[r.agent - 1].points.emplace_back(static_cast<double>(r.k), std::sqrt(sq));
    }
    for (std::size_t lane = 0; lane < open.size(); ++lane) {
      if (open[lane] >= 0) dos.bands.push_back({open[lane], k_max + 1.0, static_cast<double>(lane)});
    }
    fig.add(std::move(fdi));
    fig.add(std::move(dos));
    written.push_back(out_dir / "attack_timeline.svg");
    fig.save(written.back());
  }
  return written;
}

}  // namespace rmfac
