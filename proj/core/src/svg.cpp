#include "vbench/util/svg.hpp"

#include <algorithm>
#include <cstdio>

namespace vbench::util {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace

SvgDoc::SvgDoc(double width, double height) : width_(width), height_(height) {}

void SvgDoc::rect(double x, double y, double w, double h, const std::string& fill,
                  const std::string& stroke, double stroke_width) {
  body_ += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) +
           "\" height=\"" + num(h) + "\" fill=\"" + fill + "\"";
  if (!stroke.empty())
    body_ += " stroke=\"" + stroke + "\" stroke-width=\"" + num(stroke_width) + "\"";
  body_ += "/>\n";
}

void SvgDoc::line(double x1, double y1, double x2, double y2, const std::string& stroke,
                  double stroke_width) {
  body_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) +
           "\" y2=\"" + num(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" +
           num(stroke_width) + "\"/>\n";
}

void SvgDoc::circle(double cx, double cy, double r, const std::string& fill) {
  body_ += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" + num(r) +
           "\" fill=\"" + fill + "\"/>\n";
}

void SvgDoc::text(double x, double y, const std::string& content, double font_size,
                  const std::string& anchor, const std::string& fill) {
  body_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + num(font_size) +
           "\" font-family=\"sans-serif\" text-anchor=\"" + anchor + "\" fill=\"" + fill +
           "\">" + xml_escape(content) + "</text>\n";
}

std::string SvgDoc::str() const {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width_) + "\" height=\"" +
         num(height_) + "\" viewBox=\"0 0 " + num(width_) + " " + num(height_) + "\">\n" +
         body_ + "</svg>\n";
}

std::string diverging_color(double value, double lo, double mid, double hi) {
  auto channel = [](double a, double b, double t) {
    return static_cast<int>(a + (b - a) * std::clamp(t, 0.0, 1.0) + 0.5);
  };
  // blue (low) -> white (mid) -> red (high)
  int r, g, b;
  if (value <= mid) {
    double t = (mid <= lo) ? 1.0 : (value - lo) / (mid - lo);
    r = channel(59, 255, t);
    g = channel(76, 255, t);
    b = channel(192, 255, t);
  } else {
    double t = (hi <= mid) ? 0.0 : (value - mid) / (hi - mid);
    r = channel(255, 180, t);
    g = channel(255, 4, t);
    b = channel(255, 38, t);
  }
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace vbench::util
