// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <string>
#include <vector>

#include "dlsjm/likelihood.hpp"

namespace dlsjm {

// Fixed palette used across plots; label -> color cycles through it.
const std::string& cluster_color(int label);

// Latent-space scatter: persons as circles, items as squares, both colored
// by cluster label. Item markers carry their index.
std::string latent_space_svg(const RowMatrixXd& z, const std::vector<int>& person_labels,
                             const RowMatrixXd& w, const std::vector<int>& item_labels,
                             const std::string& title);

// sigma(intercept - d) on a distance grid.
std::vector<double> response_curve(double intercept, const std::vector<double>& dgrid);

// One polyline per unit, colored by cluster label, over the distance grid.
std::string curves_svg(const std::vector<double>& dgrid,
                       const std::vector<std::vector<double>>& curves,
                       const std::vector<int>& labels, const std::string& title,
                       const std::string& x_label, const std::string& y_label);

}  // namespace dlsjm
