#include "ohc/labels.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace ohc {

LabelSet normalize_label_set(LabelSet set) {
    if (set.empty()) {
        throw std::invalid_argument("label set must not be empty");
    }
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
    if (set.front() < 0) {
        throw std::invalid_argument("label ids must be >= 0");
    }
    return set;
}

void validate_label_sets(const LabelSets& sets, int classes) {
    for (std::size_t i = 0; i < sets.size(); ++i) {
        const LabelSet& set = sets[i];
        if (set.empty()) {
            throw std::invalid_argument("item " + std::to_string(i) + ": empty label set");
        }
        if (!std::is_sorted(set.begin(), set.end()) ||
            std::adjacent_find(set.begin(), set.end()) != set.end()) {
            throw std::invalid_argument("item " + std::to_string(i) +
                                        ": label set not normalized");
        }
        if (set.front() < 0 || set.back() >= classes) {
            throw std::invalid_argument("item " + std::to_string(i) +
                                        ": label id outside [0, classes)");
        }
    }
}

bool label_sets_intersect(const LabelSet& a, const LabelSet& b) {
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia == *ib) return true;
        if (*ia < *ib) {
            ++ia;
        } else {
            ++ib;
        }
    }
    return false;
}

}  // namespace ohc
