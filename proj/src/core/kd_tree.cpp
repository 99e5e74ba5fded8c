// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#include <gskit/core/error.hpp>
#include <gskit/core/kd_tree.hpp>

#include <algorithm>
#include <limits>
#include <numeric>

namespace gskit {

namespace {

constexpr std::uint32_t kLeafSize = 12;

} // namespace

KdTree::KdTree(std::span<const double> points, std::size_t dim)
    : mDim(dim), mPoints(points.begin(), points.end()) {
    if (dim == 0 || points.size() % dim != 0) throw Error("KdTree: coordinate count is not a multiple of dim");
    mOrder.resize(size());
    std::iota(mOrder.begin(), mOrder.end(), 0u);
    if (!mOrder.empty()) mRoot = build(0, static_cast<std::uint32_t>(mOrder.size()));
}

std::int32_t
KdTree::build(std::uint32_t begin, std::uint32_t end) {
    Node node{begin, end};
    const auto id = static_cast<std::int32_t>(mNodes.size());
    mNodes.push_back(node);
    if (end - begin <= kLeafSize) return id;

    // Split on the axis of largest spread at the median.
    std::size_t axis = 0;
    double best = -1.0;
    for (std::size_t a = 0; a < mDim; ++a) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::uint32_t i = begin; i < end; ++i) {
            const double v = mPoints[mOrder[i] * mDim + a];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (hi - lo > best) {
            best = hi - lo;
            axis = a;
        }
    }
    if (!(best > 0.0)) return id; // all points coincide
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(mOrder.begin() + begin, mOrder.begin() + mid, mOrder.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                         const double va = mPoints[a * mDim + axis], vb = mPoints[b * mDim + axis];
                         return va < vb || (va == vb && a < b);
                     });
    const double split = mPoints[mOrder[mid] * mDim + axis];
    const std::int32_t left = build(begin, mid);
    const std::int32_t right = build(mid, end);
    mNodes[static_cast<std::size_t>(id)].axis = static_cast<std::uint32_t>(axis);
    mNodes[static_cast<std::size_t>(id)].split = split;
    mNodes[static_cast<std::size_t>(id)].left = left;
    mNodes[static_cast<std::size_t>(id)].right = right;
    return id;
}

void
KdTree::search(std::int32_t id, std::span<const double> query, std::size_t k, std::vector<Neighbor> &heap) const {
    const Node &node = mNodes[static_cast<std::size_t>(id)];
    if (node.left < 0) {
        for (std::uint32_t i = node.begin; i < node.end; ++i) {
            const std::uint32_t p = mOrder[i];
            double d2 = 0.0;
            for (std::size_t a = 0; a < mDim; ++a) {
                const double d = mPoints[p * mDim + a] - query[a];
                d2 += d * d;
            }
            const Neighbor n{d2, p};
            if (heap.size() < k) {
                heap.push_back(n);
                std::push_heap(heap.begin(), heap.end());
            } else if (n < heap.front()) {
                std::pop_heap(heap.begin(), heap.end());
                heap.back() = n;
                std::push_heap(heap.begin(), heap.end());
            }
        }
        return;
    }
    const double diff = query[node.axis] - node.split;
    const std::int32_t nearSide = diff < 0.0 ? node.left : node.right;
    const std::int32_t farSide = diff < 0.0 ? node.right : node.left;
    search(nearSide, query, k, heap);
    // `<=` keeps equal-distance points on the far side reachable for the index tie-break.
    if (heap.size() < k || diff * diff <= heap.front().distanceSquared) {
        search(farSide, query, k, heap);
    }
}

std::vector<Neighbor>
KdTree::nearest(std::span<const double> query, std::size_t k) const {
    if (query.size() != mDim) throw Error("KdTree: query dimension mismatch");
    std::vector<Neighbor> heap;
    if (mRoot < 0 || k == 0) return heap;
    heap.reserve(k + 1);
    search(mRoot, query, k, heap);
    std::sort_heap(heap.begin(), heap.end());
    return heap;
}

Neighbor
KdTree::nearestOne(std::span<const double> query) const {
    const auto n = nearest(query, 1);
    if (n.empty()) throw Error("KdTree: query on an empty tree");
    return n.front();
}

} // namespace gskit
