// Apache License, Version 2.0, refer to LICENSE.txt

#include "dlsjm/svg.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "dlsjm/errors.hpp"
#include "dlsjm/numeric.hpp"

namespace dlsjm {

namespace {

const std::vector<std::string> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                           "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

constexpr double kW = 640.0, kH = 640.0, kMargin = 50.0;

std::string f2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

struct Box {
  double xlo, xhi, ylo, yhi;
  double sx(double x) const { return kMargin + (x - xlo) / (xhi - xlo) * (kW - 2 * kMargin); }
  double sy(double y) const { return kH - kMargin - (y - ylo) / (yhi - ylo) * (kH - 2 * kMargin); }
};

Box data_box(std::initializer_list<const RowMatrixXd*> mats) {
  double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
  for (const auto* m : mats) {
    for (long r = 0; r < m->rows(); ++r) {
      xlo = std::min(xlo, (*m)(r, 0));
      xhi = std::max(xhi, (*m)(r, 0));
      ylo = std::min(ylo, m->cols() > 1 ? (*m)(r, 1) : 0.0);
      yhi = std::max(yhi, m->cols() > 1 ? (*m)(r, 1) : 0.0);
    }
  }
  const double padx = std::max(1e-6, (xhi - xlo) * 0.06);
  const double pady = std::max(1e-6, (yhi - ylo) * 0.06);
  return Box{xlo - padx, xhi + padx, ylo - pady, yhi + pady};
}

void open_svg(std::ostringstream& s, const std::string& title) {
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
    << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"16\">"
    << title << "</text>\n"
    << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kW - 2 * kMargin
    << "\" height=\"" << kH - 2 * kMargin << "\" fill=\"none\" stroke=\"#cccccc\"/>\n";
}

}  // namespace

const std::string& cluster_color(int label) {
  return kPalette[static_cast<std::size_t>(label < 0 ? 0 : label) % kPalette.size()];
}

std::string latent_space_svg(const RowMatrixXd& z, const std::vector<int>& person_labels,
                             const RowMatrixXd& w, const std::vector<int>& item_labels,
                             const std::string& title) {
  if (z.rows() != static_cast<long>(person_labels.size()) ||
      w.rows() != static_cast<long>(item_labels.size()))
    throw ValidationError("latent_space_svg: label count mismatch");
  const Box box = data_box({&z, &w});
  std::ostringstream s;
  open_svg(s, title);
  for (long k = 0; k < z.rows(); ++k) {
    const double y = z.cols() > 1 ? z(k, 1) : 0.0;
    s << "<circle cx=\"" << f2(box.sx(z(k, 0))) << "\" cy=\"" << f2(box.sy(y))
      << "\" r=\"3.5\" fill=\"" << cluster_color(person_labels[k]) << "\" fill-opacity=\"0.55\"/>\n";
  }
  for (long i = 0; i < w.rows(); ++i) {
    const double y = w.cols() > 1 ? w(i, 1) : 0.0;
    const double cx = box.sx(w(i, 0)), cy = box.sy(y);
    s << "<rect x=\"" << f2(cx - 5) << "\" y=\"" << f2(cy - 5)
      << "\" width=\"10\" height=\"10\" fill=\"" << cluster_color(item_labels[i])
      << "\" stroke=\"black\" stroke-width=\"0.8\"/>\n"
      << "<text x=\"" << f2(cx + 7) << "\" y=\"" << f2(cy + 4)
      << "\" font-family=\"sans-serif\" font-size=\"10\">" << i + 1 << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::vector<double> response_curve(double intercept, const std::vector<double>& dgrid) {
  std::vector<double> out(dgrid.size());
  for (std::size_t t = 0; t < dgrid.size(); ++t) out[t] = logistic(intercept - dgrid[t]);
  return out;
}

std::string curves_svg(const std::vector<double>& dgrid,
                       const std::vector<std::vector<double>>& curves,
                       const std::vector<int>& labels, const std::string& title,
                       const std::string& x_label, const std::string& y_label) {
  if (curves.size() != labels.size()) throw ValidationError("curves_svg: label count mismatch");
  const double xlo = dgrid.front(), xhi = dgrid.back();
  const Box box{xlo, xhi, 0.0, 1.0};
  std::ostringstream s;
  open_svg(s, title);
  s << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 12
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << x_label
    << "</text>\n"
    << "<text x=\"16\" y=\"" << kH / 2
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 "
       "16 "
    << kH / 2 << ")\">" << y_label << "</text>\n";
  for (double tick : {0.0, 0.25, 0.5, 0.75, 1.0})
    s << "<text x=\"" << kMargin - 6 << "\" y=\"" << f2(box.sy(tick) + 4)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << f2(tick)
      << "</text>\n";
  for (std::size_t c = 0; c < curves.size(); ++c) {
    s << "<polyline fill=\"none\" stroke=\"" << cluster_color(labels[c])
      << "\" stroke-width=\"1\" stroke-opacity=\"0.6\" points=\"";
    for (std::size_t t = 0; t < dgrid.size(); ++t)
      s << f2(box.sx(dgrid[t])) << "," << f2(box.sy(curves[c][t])) << " ";
    s << "\"/>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace dlsjm
