// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <vector>

#include "dlsjm/data_model.hpp"
#include "dlsjm/rng.hpp"

namespace dlsjm {

// Class-structured response generation with inside/outside-class noise and
// surface local dependence within item groups.
struct SimDesign {
  int n_classes = 3;
  int respondents_per_class = 100;
  std::vector<int> class_sizes;  // optional unequal sizes; empty = equal
  int n_item_groups = 6;
  int items_per_group = 4;
  // Intended item groups per class, stage order: concrete -> groups 1,2;
  // transitional -> groups 5,6; formal -> groups 3,4 (0-based here).
  std::vector<std::vector<int>> class_to_groups{{0, 1}, {4, 5}, {2, 3}};
  double p11 = 0.9;  // intended-inside stays inside
  double p12 = 0.8;  // inside-class correct-response probability
  double p21 = 0.5;  // intended-outside stays outside
  double p22 = 0.5;  // outside-class correct-response probability
  double rho = 0.8;  // within-group copy probability
  int copy_anchor_offset = 0;  // anchor position within each group
  std::uint64_t seed = 1;

  int n() const;
  int p() const { return n_item_groups * items_per_group; }
  std::vector<int> sizes() const;
  int class_of(int k) const;
  bool intended_inside(int cls, int group) const;
  void validate() const;
};

// Realized inside/outside flag per (respondent, item group).
struct GroupFlags {
  int n = 0, n_groups = 0;
  std::vector<std::uint8_t> inside;  // n * n_groups
  bool is_inside(int k, int g) const { return inside[static_cast<std::size_t>(k) * n_groups + g]; }
};

// Step 1: intended-inside groups stay inside with probability p11,
// intended-outside stay outside with probability p21.
GroupFlags assign_groups(const SimDesign& design, Rng& rng);

// Step 2: Bernoulli(p12) inside, Bernoulli(p22) outside.
ItemResponseMatrix generate_responses(const GroupFlags& flags, const SimDesign& design, Rng& rng);

struct DependenceLog {
  int n = 0, p = 0;
  std::vector<std::uint8_t> copied;  // copy events per (respondent, item); anchors never
  double copy_fraction() const;      // over non-anchor slots
};

// Step 3: within each group, each non-anchor response is overwritten by the
// anchor's response with probability rho.
ItemResponseMatrix inject_dependence(const ItemResponseMatrix& raw, const SimDesign& design,
                                     Rng& rng, DependenceLog* log = nullptr);

struct SimDataset {
  ItemResponseMatrix x;
  std::vector<int> labels;  // true class per respondent
  GroupFlags flags;
  DependenceLog dependence;
};

SimDataset generate_dataset(const SimDesign& design);

}  // namespace dlsjm
