#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

namespace tablekb {

// Union-find whose representative is always the minimum element of its
// class under operator<. Because the representative does not depend on
// the order of unions, any permutation of the same unions yields the same
// partition and the same representatives.
template <class T>
class MinUnionFind {
public:
    T find(const T& x) const {
        auto it = parent_.find(x);
        if (it == parent_.end()) return x;
        std::vector<typename std::map<T, T>::iterator> path;
        while (true) {
            path.push_back(it);
            auto next = parent_.find(it->second);
            if (next == parent_.end()) break;
            it = next;
        }
        T root = it->second;
        for (auto& p : path) p->second = root;
        return root;
    }

    // Joins the classes of a and b. Returns the pair (kept, replaced) of
    // former representatives, or nothing when already joined.
    std::optional<std::pair<T, T>> unite(const T& a, const T& b) {
        T ra = find(a);
        T rb = find(b);
        if (ra == rb) return std::nullopt;
        if (rb < ra) std::swap(ra, rb);
        parent_.insert_or_assign(rb, ra);
        return std::make_pair(std::move(ra), std::move(rb));
    }

    bool same(const T& a, const T& b) const { return find(a) == find(b); }

    // Every non-representative element mapped to its representative.
    std::map<T, T> mapping() const {
        std::map<T, T> out;
        for (const auto& [k, v] : parent_) out.emplace(k, find(v));
        return out;
    }

    std::size_t merged_count() const { return parent_.size(); }

private:
    mutable std::map<T, T> parent_;
};

}  // namespace tablekb
