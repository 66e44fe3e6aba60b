// Apache License, Version 2.0, refer to LICENSE.txt

#include "dlsjm/simgen.hpp"

#include <algorithm>
#include <numeric>

#include "dlsjm/errors.hpp"

namespace dlsjm {

std::vector<int> SimDesign::sizes() const {
  if (!class_sizes.empty()) return class_sizes;
  return std::vector<int>(n_classes, respondents_per_class);
}

int SimDesign::n() const {
  const auto s = sizes();
  return std::accumulate(s.begin(), s.end(), 0);
}

int SimDesign::class_of(int k) const {
  const auto s = sizes();
  int acc = 0;
  for (int c = 0; c < n_classes; ++c) {
    acc += s[c];
    if (k < acc) return c;
  }
  throw ValidationError("respondent index out of range");
}

bool SimDesign::intended_inside(int cls, int group) const {
  const auto& gs = class_to_groups[cls];
  return std::find(gs.begin(), gs.end(), group) != gs.end();
}

void SimDesign::validate() const {
  if (n_classes < 1 || n_item_groups < 1 || items_per_group < 1)
    throw ValidationError("simulation design sizes must be positive");
  if (!class_sizes.empty() && static_cast<int>(class_sizes.size()) != n_classes)
    throw ValidationError("class_sizes length must equal n_classes");
  for (int s : sizes())
    if (s < 1) throw ValidationError("each class needs at least one respondent");
  if (static_cast<int>(class_to_groups.size()) != n_classes)
    throw ValidationError("class_to_groups needs one entry per class");
  for (const auto& gs : class_to_groups)
    for (int g : gs)
      if (g < 0 || g >= n_item_groups) throw ValidationError("class_to_groups references a bad group");
  auto prob_open = [](double v) { return v > 0.0 && v < 1.0; };
  if (!prob_open(p11) || !prob_open(p12) || !prob_open(p21) || !prob_open(p22))
    throw ValidationError("probabilities must lie in (0,1)");
  if (!(p11 > p21) || !(p12 > p22))
    throw ValidationError("inside-class probabilities must exceed outside-class ones");
  if (!(rho >= 0.0 && rho < 1.0)) throw ValidationError("rho must lie in [0,1)");
  if (copy_anchor_offset < 0 || copy_anchor_offset >= items_per_group)
    throw ValidationError("copy anchor offset out of group range");
}

GroupFlags assign_groups(const SimDesign& design, Rng& rng) {
  design.validate();
  GroupFlags f;
  f.n = design.n();
  f.n_groups = design.n_item_groups;
  f.inside.assign(static_cast<std::size_t>(f.n) * f.n_groups, 0);
  for (int k = 0; k < f.n; ++k) {
    const int cls = design.class_of(k);
    for (int g = 0; g < f.n_groups; ++g) {
      const double u = rng.uniform();
      bool inside;
      if (design.intended_inside(cls, g))
        inside = u < design.p11;  // stays inside w.p. p11
      else
        inside = !(u < design.p21);  // stays outside w.p. p21
      f.inside[static_cast<std::size_t>(k) * f.n_groups + g] = inside ? 1 : 0;
    }
  }
  return f;
}

ItemResponseMatrix generate_responses(const GroupFlags& flags, const SimDesign& design, Rng& rng) {
  const int n = flags.n;
  const int p = design.p();
  std::vector<std::uint8_t> x(static_cast<std::size_t>(n) * p);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < p; ++i) {
      const int g = i / design.items_per_group;
      const double pr = flags.is_inside(k, g) ? design.p12 : design.p22;
      x[static_cast<std::size_t>(k) * p + i] = rng.uniform() < pr ? 1 : 0;
    }
  return ItemResponseMatrix(n, p, std::move(x));
}

double DependenceLog::copy_fraction() const {
  long events = 0, slots = 0;
  for (std::uint8_t c : copied) events += c;
  slots = static_cast<long>(copied.size());
  return slots ? static_cast<double>(events) / static_cast<double>(slots) : 0.0;
}

ItemResponseMatrix inject_dependence(const ItemResponseMatrix& raw, const SimDesign& design,
                                     Rng& rng, DependenceLog* log) {
  design.validate();
  const int n = raw.n_persons();
  const int p = raw.n_items();
  if (p != design.p()) throw ValidationError("raw matrix does not match design item count");
  std::vector<std::uint8_t> x(raw.entries());
  std::vector<std::uint8_t> copied;
  copied.reserve(static_cast<std::size_t>(n) * (p - design.n_item_groups));
  for (int k = 0; k < n; ++k) {
    for (int g = 0; g < design.n_item_groups; ++g) {
      const int base = g * design.items_per_group;
      const int anchor = base + design.copy_anchor_offset;
      for (int j = base; j < base + design.items_per_group; ++j) {
        if (j == anchor) continue;
        const bool copy = rng.uniform() < design.rho;
        if (copy) x[static_cast<std::size_t>(k) * p + j] = x[static_cast<std::size_t>(k) * p + anchor];
        copied.push_back(copy ? 1 : 0);
      }
    }
  }
  if (log) {
    log->n = n;
    log->p = p;
    log->copied = std::move(copied);
  }
  return ItemResponseMatrix(n, p, std::move(x));
}

SimDataset generate_dataset(const SimDesign& design) {
  design.validate();
  Rng rng(Rng::derive(design.seed, 0x53494d));
  GroupFlags flags = assign_groups(design, rng);
  ItemResponseMatrix raw = generate_responses(flags, design, rng);
  DependenceLog log;
  ItemResponseMatrix x = inject_dependence(raw, design, rng, &log);
  std::vector<int> labels(design.n());
  for (int k = 0; k < design.n(); ++k) labels[k] = design.class_of(k);
  return SimDataset{std::move(x), std::move(labels), std::move(flags), std::move(log)};
}

}  // namespace dlsjm
