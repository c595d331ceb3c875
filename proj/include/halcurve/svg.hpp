#pragma once

// Minimal native SVG rendering for dose-response curves: a line for the
// point estimates, a shaded ribbon for the confidence band, and optional
// overlay series (e.g. a reference truth). No plotting dependency.

#include <span>
#include <string>
#include <vector>

#include "halcurve/inference.hpp"

namespace halcurve {

struct SvgSeries {
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f6fb2";
    std::string label;
    bool dashed = false;
};

struct SvgRibbon {
    std::vector<double> x;
    std::vector<double> lo;
    std::vector<double> hi;
    std::string fill = "#1f6fb2";
    double opacity = 0.18;
};

struct ChartOptions {
    std::string title;
    std::string x_label = "treatment";
    std::string y_label = "response";
    int width = 760;
    int height = 480;
};

// Renders ribbons (under) and series (over) onto shared axes with nice tick
// placement. Throws ValidationError on empty or ragged inputs.
std::string render_chart(const ChartOptions& options,
                         std::span<const SvgRibbon> ribbons,
                         std::span<const SvgSeries> series);

// Standard figure for one estimated curve: psi line plus CI ribbon.
std::string render_curve_svg(const CurveEstimate& curve,
                             const ChartOptions& options);

}  // namespace halcurve
