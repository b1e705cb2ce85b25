#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace arcs {

/// Sorted, duplicate-free set of covariate indices.
class SelectedSet {
   public:
    SelectedSet() = default;
    SelectedSet(std::initializer_list<std::size_t> idx) : SelectedSet(std::vector<std::size_t>(idx)) {}
    explicit SelectedSet(std::vector<std::size_t> idx);

    /// {0, ..., p-1}
    static SelectedSet all(std::size_t p);

    const std::vector<std::size_t>& indices() const { return idx_; }
    std::size_t size() const { return idx_.size(); }
    bool empty() const { return idx_.empty(); }
    bool contains(std::size_t j) const;
    auto begin() const { return idx_.begin(); }
    auto end() const { return idx_.end(); }
    std::size_t operator[](std::size_t k) const { return idx_[k]; }

    /// Throws a contract error if any index is >= p.
    void check_range(std::size_t p) const;

    friend bool operator==(const SelectedSet&, const SelectedSet&) = default;

   private:
    std::vector<std::size_t> idx_;
};

SelectedSet intersect_supports(const SelectedSet& a, const SelectedSet& b);
SelectedSet set_difference(const SelectedSet& a, const SelectedSet& b);

}  // namespace arcs
