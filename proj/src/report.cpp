// Apache License, Version 2.0, refer to LICENSE.txt

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "dlsjm/errors.hpp"
#include "dlsjm/io_util.hpp"
#include "dlsjm/pipeline.hpp"
#include "dlsjm/svg.hpp"

namespace dlsjm {

namespace {

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::vector<int> labels_of(const std::filesystem::path& path) {
  std::vector<int> labels;
  const auto rows = read_csv(path);
  for (std::size_t r = 1; r < rows.size(); ++r) labels.push_back(std::stoi(rows[r][1]));
  return labels;
}

std::string html_table(const std::vector<std::vector<std::string>>& rows, std::size_t max_rows) {
  std::ostringstream s;
  s << "<table>\n<tr>";
  for (const auto& h : rows[0]) s << "<th>" << h << "</th>";
  s << "</tr>\n";
  for (std::size_t r = 1; r < rows.size() && r <= max_rows; ++r) {
    s << "<tr>";
    for (const auto& c : rows[r]) s << "<td>" << c << "</td>";
    s << "</tr>\n";
  }
  if (rows.size() - 1 > max_rows)
    s << "<tr><td colspan=\"" << rows[0].size() << "\">… " << rows.size() - 1 - max_rows
      << " more rows in the CSV</td></tr>\n";
  s << "</table>\n";
  return s.str();
}

}  // namespace

void report_run(const std::filesystem::path& run_dir) {
  const auto manifest = nlohmann::json::parse(read_file(run_dir / "manifest.json"));
  const auto beta_rows = read_csv(run_dir / "beta_summary.csv");
  const auto theta_rows = read_csv(run_dir / "theta_summary.csv");
  const std::vector<int> person_labels = labels_of(run_dir / "clusters_person.csv");
  const std::vector<int> item_labels = labels_of(run_dir / "clusters_item.csv");

  // Distance grid that spans both posterior mean distance matrices.
  const Eigen::MatrixXd pd = read_matrix_csv(run_dir / "person_dist.csv");
  const Eigen::MatrixXd id = read_matrix_csv(run_dir / "item_dist.csv");
  const double dmax = std::max(1.0, std::max(pd.maxCoeff(), id.maxCoeff()));
  std::vector<double> dgrid;
  for (int t = 0; t <= 100; ++t) dgrid.push_back(dmax * t / 100.0);

  std::vector<std::vector<double>> item_curves, person_curves;
  for (std::size_t r = 1; r < beta_rows.size(); ++r)
    item_curves.push_back(response_curve(std::stod(beta_rows[r][1]), dgrid));
  for (std::size_t r = 1; r < theta_rows.size(); ++r)
    person_curves.push_back(response_curve(std::stod(theta_rows[r][1]), dgrid));

  std::ostringstream html;
  html << "<!doctype html>\n<html><head><meta charset=\"utf-8\">\n"
       << "<title>DLSJM fit report</title>\n"
       << "<style>body{font-family:sans-serif;max-width:1000px;margin:24px auto;}"
       << "table{border-collapse:collapse;font-size:13px;}td,th{border:1px solid #ccc;"
       << "padding:2px 8px;}h2{margin-top:36px;}</style></head><body>\n"
       << "<h1>DLSJM fit report</h1>\n";

  html << "<h2>Run</h2>\n<pre>" << manifest.dump(2) << "</pre>\n";

  html << "<h2>Latent space</h2>\n" << read_file(run_dir / "latent_space.svg");

  html << "<h2>Pairwise correct-response probability, item intercepts</h2>\n"
       << "<p>One curve per item: &sigma;(&beta;&#770;<sub>i</sub> &minus; d), the probability "
          "that a pair of respondents at latent distance d both answer item i correctly, "
          "colored by item cluster.</p>\n"
       << curves_svg(dgrid, item_curves, item_labels,
                     "Item curves: sigma(beta_i - d)", "latent distance d", "probability");

  html << "<h2>Pairwise correct-response probability, person intercepts</h2>\n"
       << "<p>One curve per respondent: &sigma;(&theta;&#770;<sub>k</sub> &minus; d), the "
          "probability that respondent k answers a pair of items at latent distance d both "
          "correctly, colored by person cluster.</p>\n"
       << curves_svg(dgrid, person_curves, person_labels,
                     "Person curves: sigma(theta_k - d)", "latent distance d", "probability");

  html << "<h2>Item intercept summary (posterior mean, 95% HPD)</h2>\n"
       << html_table(beta_rows, 500);
  html << "<h2>Person intercept summary (posterior mean, 95% HPD)</h2>\n";
  const auto zs = manifest.value("zero_score_persons", std::vector<int>{});
  if (!zs.empty()) {
    html << "<p><b>Note:</b> respondents with total score 0 (retained; intercept posterior is "
            "prior-dominated): ";
    for (std::size_t i = 0; i < zs.size(); ++i) html << (i ? ", " : "") << zs[i];
    html << "</p>\n";
  }
  html << html_table(theta_rows, 500);

  html << "</body></html>\n";
  std::ofstream out = open_out(run_dir / "report.html");
  out << html.str();
}

}  // namespace dlsjm
