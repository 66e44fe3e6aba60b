// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace dlsjm {

// Binary n x p response matrix X, the sole raw input. Entries are validated
// to {0,1} at construction; missing values are rejected (no imputation).
class ItemResponseMatrix {
 public:
  ItemResponseMatrix(int n, int p, std::vector<std::uint8_t> entries,
                     std::vector<std::string> row_ids = {},
                     std::vector<std::string> col_ids = {});

  int n_persons() const { return n_; }
  int n_items() const { return p_; }

  std::uint8_t operator()(int k, int i) const { return x_[static_cast<std::size_t>(k) * p_ + i]; }

  const std::vector<std::uint8_t>& entries() const { return x_; }
  const std::vector<std::string>& row_ids() const { return row_ids_; }
  const std::vector<std::string>& col_ids() const { return col_ids_; }

  // Total correct per item (column sums) and total score per person (row sums).
  const std::vector<int>& item_totals() const { return col_sums_; }
  const std::vector<int>& person_totals() const { return row_sums_; }

  // Item indices answered correctly by person k, and persons correct on item i.
  const std::vector<int>& items_of_person(int k) const { return items_of_person_[k]; }
  const std::vector<int>& persons_of_item(int i) const { return persons_of_item_[i]; }

  // Throws DegenerateItemError naming every all-zero column; f_i(Z) divides
  // by the column total, so fitting is refused up front.
  void require_no_degenerate_items() const;

  // Persons with total score 0 (retained, but flagged in reports).
  std::vector<int> zero_score_persons() const;

  // CSV: one respondent per row, cells 0/1, header row and leading id column
  // both optional (auto-detected).
  static ItemResponseMatrix from_csv(const std::filesystem::path& path);
  void to_csv(const std::filesystem::path& path) const;

  // Compact cache: magic, n, p, row-major bit-packed payload.
  static ItemResponseMatrix from_binary(const std::filesystem::path& path);
  void to_binary(const std::filesystem::path& path) const;

  static ItemResponseMatrix load(const std::filesystem::path& path);  // by extension

 private:
  int n_ = 0, p_ = 0;
  std::vector<std::uint8_t> x_;  // row-major
  std::vector<std::string> row_ids_, col_ids_;
  std::vector<int> row_sums_, col_sums_;
  std::vector<std::vector<int>> items_of_person_, persons_of_item_;
};

struct DegreeProfile {
  std::vector<int> person_score;  // s_k
  std::vector<int> item_correct;  // c_i
};

DegreeProfile degree_profile(const ItemResponseMatrix& x);

// Person-side stack: p layers, layer i has y_{i,kl} = x_ki * x_li (k != l).
// Layers are implicit in X; entries are recomputed on demand.
class PersonNetworkStack {
 public:
  explicit PersonNetworkStack(ItemResponseMatrix x) : x_(std::move(x)) {}

  int n_layers() const { return x_.n_items(); }
  int n_nodes() const { return x_.n_persons(); }

  int entry(int layer, int k, int l) const {
    return k == l ? 0 : static_cast<int>(x_(k, layer)) * x_(l, layer);
  }
  Eigen::MatrixXi layer(int i) const;

  // Edges in layer i form a clique on the correct responders: C(c_i, 2).
  long edge_count(int layer) const;

  const ItemResponseMatrix& source() const { return x_; }

 private:
  ItemResponseMatrix x_;
};

// Item-side stack: n layers, layer k has u_{k,ij} = x_ki * x_kj (i != j).
class ItemNetworkStack {
 public:
  explicit ItemNetworkStack(ItemResponseMatrix x) : x_(std::move(x)) {}

  int n_layers() const { return x_.n_persons(); }
  int n_nodes() const { return x_.n_items(); }

  int entry(int layer, int i, int j) const {
    return i == j ? 0 : static_cast<int>(x_(layer, i)) * x_(layer, j);
  }
  Eigen::MatrixXi layer(int k) const;
  long edge_count(int layer) const;

  const ItemResponseMatrix& source() const { return x_; }

 private:
  ItemResponseMatrix x_;
};

PersonNetworkStack build_person_networks(const ItemResponseMatrix& x);
ItemNetworkStack build_item_networks(const ItemResponseMatrix& x);

}  // namespace dlsjm
