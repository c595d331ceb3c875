#include "halcurve/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "halcurve/errors.hpp"

namespace halcurve {

namespace {

struct Frame {
    int width, height;
    int left = 64, right = 24, top = 40, bottom = 52;
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;

    double plot_w() const { return width - left - right; }
    double plot_h() const { return height - top - bottom; }
    double px(double x) const {
        return left + (x - xmin) / (xmax - xmin) * plot_w();
    }
    double py(double y) const {
        return top + plot_h() - (y - ymin) / (ymax - ymin) * plot_h();
    }
};

std::string fmt(double v, int prec) {
    std::ostringstream oss;
    oss.setf(std::ios::fixed);
    oss.precision(prec);
    oss << v;
    return oss.str();
}

// Largest "nice" step (1, 2 or 5 times a power of ten) giving <= max_ticks
// intervals across the span.
double nice_step(double span, int max_ticks) {
    if (!(span > 0)) return 1.0;
    const double raw = span / max_ticks;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (m * mag >= raw) return m * mag;
    }
    return 10.0 * mag;
}

int step_precision(double step) {
    int prec = 0;
    while (prec < 6 && step < 0.99999) {
        step *= 10.0;
        ++prec;
    }
    return prec;
}

std::string escape_xml(const std::string& s) {
    std::string out;
    out.reserve(s.size());
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

void expand_range(std::span<const double> v, double& lo, double& hi) {
    for (double x : v) {
        if (!std::isfinite(x)) continue;
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
}

void draw_axes(std::ostringstream& out, const Frame& f,
               const ChartOptions& options) {
    out << "<style>\n"
        << "  .axis { stroke:#333; stroke-width:1; fill:none; }\n"
        << "  .grid { stroke:#e3e3e3; stroke-width:1; }\n"
        << "  .label { font-family:Helvetica,Arial,sans-serif; font-size:12px;"
           " fill:#333; }\n"
        << "  .title { font-family:Helvetica,Arial,sans-serif; font-size:14px;"
           " font-weight:bold; fill:#111; }\n"
        << "</style>\n";
    if (!options.title.empty()) {
        out << "<text class=\"title\" x=\"" << f.width / 2
            << "\" y=\"22\" text-anchor=\"middle\">"
            << escape_xml(options.title) << "</text>\n";
    }

    const double xstep = nice_step(f.xmax - f.xmin, 8);
    const int xprec = step_precision(xstep);
    for (double t = std::ceil(f.xmin / xstep) * xstep; t <= f.xmax + 1e-9 * xstep;
         t += xstep) {
        const double p = f.px(t);
        out << "<line class=\"grid\" x1=\"" << fmt(p, 1) << "\" y1=\"" << f.top
            << "\" x2=\"" << fmt(p, 1) << "\" y2=\"" << fmt(f.top + f.plot_h(), 1)
            << "\"/>\n";
        out << "<text class=\"label\" x=\"" << fmt(p, 1) << "\" y=\""
            << fmt(f.top + f.plot_h() + 18, 1) << "\" text-anchor=\"middle\">"
            << fmt(t + 0.0, xprec) << "</text>\n";
    }
    const double ystep = nice_step(f.ymax - f.ymin, 6);
    const int yprec = step_precision(ystep);
    for (double t = std::ceil(f.ymin / ystep) * ystep; t <= f.ymax + 1e-9 * ystep;
         t += ystep) {
        const double p = f.py(t);
        out << "<line class=\"grid\" x1=\"" << f.left << "\" y1=\"" << fmt(p, 1)
            << "\" x2=\"" << fmt(f.left + f.plot_w(), 1) << "\" y2=\""
            << fmt(p, 1) << "\"/>\n";
        out << "<text class=\"label\" x=\"" << f.left - 8 << "\" y=\""
            << fmt(p + 4, 1) << "\" text-anchor=\"end\">" << fmt(t + 0.0, yprec)
            << "</text>\n";
    }
    out << "<rect class=\"axis\" x=\"" << f.left << "\" y=\"" << f.top
        << "\" width=\"" << fmt(f.plot_w(), 1) << "\" height=\""
        << fmt(f.plot_h(), 1) << "\"/>\n";
    out << "<text class=\"label\" x=\"" << f.left + f.plot_w() / 2 << "\" y=\""
        << f.height - 12 << "\" text-anchor=\"middle\">"
        << escape_xml(options.x_label) << "</text>\n";
    out << "<text class=\"label\" x=\"16\" y=\"" << f.top + f.plot_h() / 2
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
        << f.top + f.plot_h() / 2 << ")\">" << escape_xml(options.y_label)
        << "</text>\n";
}

}  // namespace

std::string render_chart(const ChartOptions& options,
                         std::span<const SvgRibbon> ribbons,
                         std::span<const SvgSeries> series) {
    if (series.empty() && ribbons.empty()) {
        throw ValidationError("render_chart: nothing to draw");
    }
    double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
    double ylo = xlo, yhi = -xlo;
    for (const SvgRibbon& r : ribbons) {
        if (r.x.empty() || r.x.size() != r.lo.size() ||
            r.x.size() != r.hi.size()) {
            throw ValidationError(
                "render_chart: ribbon coordinate vectors are empty or of "
                "mismatched lengths");
        }
        expand_range(r.x, xlo, xhi);
        expand_range(r.lo, ylo, yhi);
        expand_range(r.hi, ylo, yhi);
    }
    for (const SvgSeries& s : series) {
        if (s.x.empty() || s.x.size() != s.y.size()) {
            throw ValidationError(
                "render_chart: series coordinate vectors are empty or of "
                "mismatched lengths");
        }
        expand_range(s.x, xlo, xhi);
        expand_range(s.y, ylo, yhi);
    }
    if (!std::isfinite(xlo) || !std::isfinite(ylo)) {
        throw ValidationError("render_chart: no finite data to draw");
    }
    if (xhi == xlo) {
        xlo -= 0.5;
        xhi += 0.5;
    }
    if (yhi == ylo) {
        ylo -= 0.5;
        yhi += 0.5;
    }
    const double ypad = 0.06 * (yhi - ylo);

    Frame f;
    f.width = options.width;
    f.height = options.height;
    f.xmin = xlo;
    f.xmax = xhi;
    f.ymin = ylo - ypad;
    f.ymax = yhi + ypad;

    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width
        << "\" height=\"" << f.height << "\" viewBox=\"0 0 " << f.width << " "
        << f.height << "\">\n";
    out << "<rect x=\"0\" y=\"0\" width=\"" << f.width << "\" height=\""
        << f.height << "\" fill=\"white\"/>\n";
    draw_axes(out, f, options);

    for (const SvgRibbon& r : ribbons) {
        out << "<path d=\"M";
        for (std::size_t i = 0; i < r.x.size(); ++i) {
            if (i) out << " L";
            out << fmt(f.px(r.x[i]), 2) << " " << fmt(f.py(r.hi[i]), 2);
        }
        for (std::size_t k = r.x.size(); k-- > 0;) {
            out << " L" << fmt(f.px(r.x[k]), 2) << " " << fmt(f.py(r.lo[k]), 2);
        }
        out << " Z\" fill=\"" << r.fill << "\" fill-opacity=\""
            << fmt(r.opacity, 2) << "\" stroke=\"none\"/>\n";
    }
    int legend_row = 0;
    for (const SvgSeries& s : series) {
        out << "<polyline fill=\"none\" stroke=\"" << s.color
            << "\" stroke-width=\"2\"";
        if (s.dashed) out << " stroke-dasharray=\"6 4\"";
        out << " points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (i) out << " ";
            out << fmt(f.px(s.x[i]), 2) << "," << fmt(f.py(s.y[i]), 2);
        }
        out << "\"/>\n";
        if (!s.label.empty()) {
            const double ly = f.top + 14 + 18 * legend_row++;
            const double lx = f.left + f.plot_w() - 150;
            out << "<line x1=\"" << fmt(lx, 1) << "\" y1=\"" << fmt(ly - 4, 1)
                << "\" x2=\"" << fmt(lx + 24, 1) << "\" y2=\"" << fmt(ly - 4, 1)
                << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"";
            if (s.dashed) out << " stroke-dasharray=\"6 4\"";
            out << "/>\n";
            out << "<text class=\"label\" x=\"" << fmt(lx + 30, 1) << "\" y=\""
                << fmt(ly, 1) << "\">" << escape_xml(s.label) << "</text>\n";
        }
    }
    out << "</svg>\n";
    return out.str();
}

std::string render_curve_svg(const CurveEstimate& curve,
                             const ChartOptions& options) {
    if (curve.grid.empty() || curve.grid.size() != curve.psi.size() ||
        curve.grid.size() != curve.ci_lo.size() ||
        curve.grid.size() != curve.ci_hi.size()) {
        throw ValidationError(
            "render_curve_svg: curve vectors are empty or of mismatched "
            "lengths");
    }
    SvgRibbon band;
    band.x = curve.grid;
    band.lo = curve.ci_lo;
    band.hi = curve.ci_hi;
    SvgSeries line;
    line.x = curve.grid;
    line.y = curve.psi;
    line.label = "estimate";
    const SvgRibbon ribbons[] = {band};
    const SvgSeries series[] = {line};
    return render_chart(options, ribbons, series);
}

}  // namespace halcurve
