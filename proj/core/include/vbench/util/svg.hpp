#pragma once

#include <string>

namespace vbench::util {

// Minimal static SVG document builder. Coordinates are formatted with a fixed
// precision so output bytes are reproducible across runs and platforms.
class SvgDoc {
 public:
  SvgDoc(double width, double height);

  void rect(double x, double y, double w, double h, const std::string& fill,
            const std::string& stroke = "", double stroke_width = 0.0);
  void line(double x1, double y1, double x2, double y2, const std::string& stroke,
            double stroke_width = 1.0);
  void circle(double cx, double cy, double r, const std::string& fill);
  // anchor: "start", "middle" or "end"
  void text(double x, double y, const std::string& content, double font_size = 12.0,
            const std::string& anchor = "start", const std::string& fill = "#222222");

  std::string str() const;

 private:
  std::string body_;
  double width_, height_;
};

// Diverging blue-white-red fill for score heatmaps, centered at `mid`.
std::string diverging_color(double value, double lo, double mid, double hi);

}  // namespace vbench::util
