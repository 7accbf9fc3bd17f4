#pragma once

#include <vector>

namespace ohc {

// Multi-label ground truth: each item carries a non-empty set of class ids.
using LabelSet = std::vector<int>;
using LabelSets = std::vector<LabelSet>;

// Sorts, removes duplicates, and rejects empty sets or negative ids.
LabelSet normalize_label_set(LabelSet set);

// Checks every set is normalized and every id lies in [0, classes).
void validate_label_sets(const LabelSets& sets, int classes);

// True when two sorted sets share at least one class.
bool label_sets_intersect(const LabelSet& a, const LabelSet& b);

}  // namespace ohc
