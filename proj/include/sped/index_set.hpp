#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

namespace sped {

/// Small ordered set of input indices. Kept as a sorted unique vector; these
/// sets are tiny in practice (usually zero or one element, bounded by the
/// follower count of the surrounding sequence node).
class IndexSet {
public:
    IndexSet() = default;
    static IndexSet single(std::uint32_t i) {
        IndexSet s;
        s.v_.push_back(i);
        return s;
    }

    bool empty() const { return v_.empty(); }
    std::size_t size() const { return v_.size(); }
    bool contains(std::uint32_t i) const {
        return std::binary_search(v_.begin(), v_.end(), i);
    }
    /// The sole element; meaningful only when size() == 1.
    std::uint32_t only() const { return v_.front(); }

    void insert(std::uint32_t i) {
        auto it = std::lower_bound(v_.begin(), v_.end(), i);
        if (it == v_.end() || *it != i) v_.insert(it, i);
    }
    void unite(const IndexSet& o) {
        if (o.v_.empty()) return;
        std::vector<std::uint32_t> merged;
        merged.reserve(v_.size() + o.v_.size());
        std::set_union(v_.begin(), v_.end(), o.v_.begin(), o.v_.end(),
                       std::back_inserter(merged));
        v_ = std::move(merged);
    }
    bool subset_of(const IndexSet& o) const {
        return std::includes(o.v_.begin(), o.v_.end(), v_.begin(), v_.end());
    }

    const std::vector<std::uint32_t>& values() const { return v_; }
    bool operator==(const IndexSet&) const = default;

private:
    std::vector<std::uint32_t> v_;
};

} // namespace sped
