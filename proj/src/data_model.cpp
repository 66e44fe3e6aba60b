// Apache License, Version 2.0, refer to LICENSE.txt

#include "dlsjm/data_model.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "dlsjm/errors.hpp"

namespace dlsjm {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) cells.push_back(trim(cur));
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

bool is_binary_cell(const std::string& s) { return s == "0" || s == "1"; }

constexpr char kMagic[8] = {'D', 'L', 'S', 'J', 'M', 'X', '0', '1'};

}  // namespace

ItemResponseMatrix::ItemResponseMatrix(int n, int p, std::vector<std::uint8_t> entries,
                                       std::vector<std::string> row_ids,
                                       std::vector<std::string> col_ids)
    : n_(n), p_(p), x_(std::move(entries)), row_ids_(std::move(row_ids)), col_ids_(std::move(col_ids)) {
  if (n_ < 2 || p_ < 2)
    throw ValidationError("response matrix needs at least 2 respondents and 2 items, got " +
                          std::to_string(n_) + "x" + std::to_string(p_));
  if (x_.size() != static_cast<std::size_t>(n_) * p_)
    throw ValidationError("response matrix entry count does not match dimensions");
  for (std::size_t idx = 0; idx < x_.size(); ++idx)
    if (x_[idx] != 0 && x_[idx] != 1)
      throw ValidationError("response entry at row " + std::to_string(idx / p_) + ", col " +
                            std::to_string(idx % p_) + " is not 0/1 (missing values are not accepted)");
  if (!row_ids_.empty() && row_ids_.size() != static_cast<std::size_t>(n_))
    throw ValidationError("row id count does not match respondent count");
  if (!col_ids_.empty() && col_ids_.size() != static_cast<std::size_t>(p_))
    throw ValidationError("column id count does not match item count");

  row_sums_.assign(n_, 0);
  col_sums_.assign(p_, 0);
  items_of_person_.assign(n_, {});
  persons_of_item_.assign(p_, {});
  for (int k = 0; k < n_; ++k)
    for (int i = 0; i < p_; ++i)
      if ((*this)(k, i)) {
        ++row_sums_[k];
        ++col_sums_[i];
        items_of_person_[k].push_back(i);
        persons_of_item_[i].push_back(k);
      }
}

void ItemResponseMatrix::require_no_degenerate_items() const {
  std::string bad;
  for (int i = 0; i < p_; ++i)
    if (col_sums_[i] == 0) bad += (bad.empty() ? "" : ", ") + std::to_string(i);
  if (!bad.empty())
    throw DegenerateItemError("items with no correct answers (item positions undefined): columns " + bad);
}

std::vector<int> ItemResponseMatrix::zero_score_persons() const {
  std::vector<int> out;
  for (int k = 0; k < n_; ++k)
    if (row_sums_[k] == 0) out.push_back(k);
  return out;
}

ItemResponseMatrix ItemResponseMatrix::from_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    rows.push_back(split_line(line));
  }
  if (rows.size() < 2) throw ValidationError(path.string() + ": needs at least 2 data rows");

  // Try (header?, id column?) layouts in order of least skipping.
  for (int header = 0; header <= 1; ++header) {
    for (int idcol = 0; idcol <= 1; ++idcol) {
      const std::size_t first = header;
      if (rows.size() - first < 2) continue;
      const std::size_t width = rows[first].size();
      if (width < static_cast<std::size_t>(2 + idcol)) continue;
      bool ok = true;
      for (std::size_t r = first; r < rows.size() && ok; ++r) {
        if (rows[r].size() != width) ok = false;
        for (std::size_t c = idcol; c < width && ok; ++c)
          if (!is_binary_cell(rows[r][c])) ok = false;
      }
      if (!ok) continue;

      const int n = static_cast<int>(rows.size() - first);
      const int p = static_cast<int>(width - idcol);
      std::vector<std::uint8_t> x(static_cast<std::size_t>(n) * p);
      std::vector<std::string> row_ids, col_ids;
      if (header) {
        const auto& h = rows[0];
        col_ids.assign(h.begin() + (h.size() == width ? idcol : 0), h.end());
        if (col_ids.size() != static_cast<std::size_t>(p)) col_ids.clear();
      }
      if (idcol)
        for (std::size_t r = first; r < rows.size(); ++r) row_ids.push_back(rows[r][0]);
      for (std::size_t r = first; r < rows.size(); ++r)
        for (int c = 0; c < p; ++c)
          x[(r - first) * p + c] = rows[r][c + idcol] == "1" ? 1 : 0;
      return ItemResponseMatrix(n, p, std::move(x), std::move(row_ids), std::move(col_ids));
    }
  }
  throw ValidationError(path.string() + ": not a rectangular 0/1 response table (cells must be 0 or 1; one optional header row and one optional leading id column)");
}

void ItemResponseMatrix::to_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  if (!col_ids_.empty()) {
    if (!row_ids_.empty()) out << "id,";
    for (int i = 0; i < p_; ++i) out << col_ids_[i] << (i + 1 < p_ ? "," : "\n");
  }
  for (int k = 0; k < n_; ++k) {
    if (!row_ids_.empty()) out << row_ids_[k] << ",";
    for (int i = 0; i < p_; ++i) out << int((*this)(k, i)) << (i + 1 < p_ ? "," : "\n");
  }
}

void ItemResponseMatrix::to_binary(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out.write(kMagic, 8);
  const std::uint64_t n = n_, p = p_;
  out.write(reinterpret_cast<const char*>(&n), 8);
  out.write(reinterpret_cast<const char*>(&p), 8);
  const std::size_t nbits = static_cast<std::size_t>(n_) * p_;
  std::vector<std::uint8_t> payload((nbits + 7) / 8, 0);
  for (std::size_t b = 0; b < nbits; ++b)
    if (x_[b]) payload[b >> 3] |= static_cast<std::uint8_t>(1u << (b & 7));
  out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
}

ItemResponseMatrix ItemResponseMatrix::from_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || !std::equal(magic, magic + 8, kMagic))
    throw ValidationError(path.string() + ": bad magic, not a response cache");
  std::uint64_t n = 0, p = 0;
  in.read(reinterpret_cast<char*>(&n), 8);
  in.read(reinterpret_cast<char*>(&p), 8);
  if (!in || n < 2 || p < 2 || n > (1u << 24) || p > (1u << 24))
    throw ValidationError(path.string() + ": implausible dimensions in cache header");
  const std::size_t nbits = static_cast<std::size_t>(n) * p;
  std::vector<std::uint8_t> payload((nbits + 7) / 8);
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (!in) throw ValidationError(path.string() + ": truncated payload");
  std::vector<std::uint8_t> x(nbits);
  for (std::size_t b = 0; b < nbits; ++b) x[b] = (payload[b >> 3] >> (b & 7)) & 1u;
  return ItemResponseMatrix(static_cast<int>(n), static_cast<int>(p), std::move(x));
}

ItemResponseMatrix ItemResponseMatrix::load(const std::filesystem::path& path) {
  if (path.extension() == ".bin" || path.extension() == ".dlsjm") return from_binary(path);
  return from_csv(path);
}

DegreeProfile degree_profile(const ItemResponseMatrix& x) {
  return DegreeProfile{x.person_totals(), x.item_totals()};
}

Eigen::MatrixXi PersonNetworkStack::layer(int i) const {
  const int n = n_nodes();
  Eigen::MatrixXi y = Eigen::MatrixXi::Zero(n, n);
  const auto& correct = x_.persons_of_item(i);
  for (std::size_t a = 0; a < correct.size(); ++a)
    for (std::size_t b = a + 1; b < correct.size(); ++b) {
      y(correct[a], correct[b]) = 1;
      y(correct[b], correct[a]) = 1;
    }
  return y;
}

long PersonNetworkStack::edge_count(int layer) const {
  const long c = x_.item_totals()[layer];
  return c * (c - 1) / 2;
}

Eigen::MatrixXi ItemNetworkStack::layer(int k) const {
  const int p = n_nodes();
  Eigen::MatrixXi u = Eigen::MatrixXi::Zero(p, p);
  const auto& correct = x_.items_of_person(k);
  for (std::size_t a = 0; a < correct.size(); ++a)
    for (std::size_t b = a + 1; b < correct.size(); ++b) {
      u(correct[a], correct[b]) = 1;
      u(correct[b], correct[a]) = 1;
    }
  return u;
}

long ItemNetworkStack::edge_count(int layer) const {
  const long s = x_.person_totals()[layer];
  return s * (s - 1) / 2;
}

PersonNetworkStack build_person_networks(const ItemResponseMatrix& x) { return PersonNetworkStack(x); }

ItemNetworkStack build_item_networks(const ItemResponseMatrix& x) { return ItemNetworkStack(x); }

}  // namespace dlsjm
