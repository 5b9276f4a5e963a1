#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <vector>

#include "tempogs/geometry.hpp"

namespace tempogs {

// Static 3D kd-tree over a point set. Median split on the widest axis.
class KdTree {
public:
    KdTree() = default;
    explicit KdTree(const std::vector<Vec3>& points) { build(points); }

    void build(const std::vector<Vec3>& points) {
        points_ = points;
        order_.resize(points.size());
        std::iota(order_.begin(), order_.end(), size_t{0});
        nodes_.clear();
        nodes_.reserve(points.size() * 2 + 1);
        if (!points_.empty()) root_ = build_node(0, points_.size());
    }

    bool empty() const { return points_.empty(); }
    size_t size() const { return points_.size(); }

    // Index and squared distance of the nearest point to `q`.
    std::pair<size_t, double> nearest(const Vec3& q) const {
        size_t best = size_t(-1);
        double best_d2 = std::numeric_limits<double>::infinity();
        search(root_, q, best, best_d2);
        return {best, best_d2};
    }

    // k nearest neighbors, closest first, as (index, squared distance).
    std::vector<std::pair<size_t, double>> knearest(const Vec3& q, size_t k) const {
        KnnHeap heap{k, {}};
        search_knn(root_, q, heap);
        std::vector<std::pair<size_t, double>> out(heap.entries.begin(), heap.entries.end());
        std::sort(out.begin(), out.end(),
                  [](const auto& a, const auto& b) { return a.second < b.second; });
        return out;
    }

private:
    struct Node {
        int left = -1;
        int right = -1;
        int axis = 0;
        double split = 0.0;
        size_t begin = 0, end = 0;  // leaf payload range in order_
        bool leaf = false;
    };

    struct KnnHeap {
        size_t k;
        std::vector<std::pair<size_t, double>> entries;  // max-heap on distance
        double worst() const {
            return entries.size() < k ? std::numeric_limits<double>::infinity()
                                      : entries.front().second;
        }
        void push(size_t idx, double d2) {
            if (entries.size() < k) {
                entries.emplace_back(idx, d2);
                std::push_heap(entries.begin(), entries.end(), cmp);
            } else if (d2 < entries.front().second) {
                std::pop_heap(entries.begin(), entries.end(), cmp);
                entries.back() = {idx, d2};
                std::push_heap(entries.begin(), entries.end(), cmp);
            }
        }
        static bool cmp(const std::pair<size_t, double>& a, const std::pair<size_t, double>& b) {
            return a.second < b.second;
        }
    };

    static constexpr size_t kLeafSize = 16;

    int build_node(size_t begin, size_t end) {
        Node node;
        if (end - begin <= kLeafSize) {
            node.leaf = true;
            node.begin = begin;
            node.end = end;
            nodes_.push_back(node);
            return static_cast<int>(nodes_.size() - 1);
        }
        Vec3 lo = points_[order_[begin]], hi = lo;
        for (size_t i = begin; i < end; ++i) {
            lo = lo.cwiseMin(points_[order_[i]]);
            hi = hi.cwiseMax(points_[order_[i]]);
        }
        int axis = 0;
        (hi - lo).maxCoeff(&axis);
        const size_t mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](size_t a, size_t b) { return points_[a][axis] < points_[b][axis]; });
        node.axis = axis;
        node.split = points_[order_[mid]][axis];
        const int self = static_cast<int>(nodes_.size());
        nodes_.push_back(node);
        const int left = build_node(begin, mid);
        const int right = build_node(mid, end);
        nodes_[self].left = left;
        nodes_[self].right = right;
        return self;
    }

    void search(int ni, const Vec3& q, size_t& best, double& best_d2) const {
        const Node& n = nodes_[ni];
        if (n.leaf) {
            for (size_t i = n.begin; i < n.end; ++i) {
                const double d2 = (points_[order_[i]] - q).squaredNorm();
                if (d2 < best_d2) {
                    best_d2 = d2;
                    best = order_[i];
                }
            }
            return;
        }
        const double delta = q[n.axis] - n.split;
        const int near = delta < 0 ? n.left : n.right;
        const int far = delta < 0 ? n.right : n.left;
        search(near, q, best, best_d2);
        if (delta * delta < best_d2) search(far, q, best, best_d2);
    }

    void search_knn(int ni, const Vec3& q, KnnHeap& heap) const {
        const Node& n = nodes_[ni];
        if (n.leaf) {
            for (size_t i = n.begin; i < n.end; ++i) {
                heap.push(order_[i], (points_[order_[i]] - q).squaredNorm());
            }
            return;
        }
        const double delta = q[n.axis] - n.split;
        const int near = delta < 0 ? n.left : n.right;
        const int far = delta < 0 ? n.right : n.left;
        search_knn(near, q, heap);
        if (delta * delta < heap.worst()) search_knn(far, q, heap);
    }

    std::vector<Vec3> points_;
    std::vector<size_t> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

}  // namespace tempogs
