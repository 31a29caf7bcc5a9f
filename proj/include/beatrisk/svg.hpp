#pragma once

#include <string>

namespace beatrisk {

/// Minimal SVG builder; coordinates in user units, origin top-left.
class SvgDocument {
 public:
  SvgDocument(double width, double height);

  void line(double x1, double y1, double x2, double y2, const std::string& color, double width = 1.0);
  void rect(double x, double y, double w, double h, const std::string& fill, double opacity = 1.0);
  void text(double x, double y, const std::string& content, double size = 10.0);
  std::string str() const;

 private:
  double width_;
  double height_;
  std::string body_;
};

std::string rgb_hex(int r, int g, int b);

}  // namespace beatrisk
