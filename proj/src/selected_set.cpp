#include "arcs/selected_set.hpp"

#include <algorithm>
#include <iterator>
#include <numeric>
#include <string>

#include "arcs/error.hpp"

namespace arcs {

SelectedSet::SelectedSet(std::vector<std::size_t> idx) : idx_(std::move(idx)) {
    std::sort(idx_.begin(), idx_.end());
    idx_.erase(std::unique(idx_.begin(), idx_.end()), idx_.end());
}

SelectedSet SelectedSet::all(std::size_t p) {
    std::vector<std::size_t> idx(p);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return SelectedSet(std::move(idx));
}

bool SelectedSet::contains(std::size_t j) const {
    return std::binary_search(idx_.begin(), idx_.end(), j);
}

void SelectedSet::check_range(std::size_t p) const {
    if (!idx_.empty() && idx_.back() >= p)
        fail(ErrorCode::contract, "selected index " + std::to_string(idx_.back()) +
                                      " out of range for p = " + std::to_string(p));
}

SelectedSet intersect_supports(const SelectedSet& a, const SelectedSet& b) {
    std::vector<std::size_t> out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return SelectedSet(std::move(out));
}

SelectedSet set_difference(const SelectedSet& a, const SelectedSet& b) {
    std::vector<std::size_t> out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return SelectedSet(std::move(out));
}

}  // namespace arcs
