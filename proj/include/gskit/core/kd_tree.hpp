// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace gskit {

struct Neighbor {
    double distanceSquared = 0.0;
    std::uint32_t index = 0;

    bool operator<(const Neighbor &o) const {
        return distanceSquared < o.distanceSquared || (distanceSquared == o.distanceSquared && index < o.index);
    }
};

/// Static k-d tree over points of any fixed dimension. Queries are exact and deterministic:
/// equal distances are ordered by point index.
class KdTree {
  public:
    KdTree() = default;
    /// `points` holds size()*dim coordinates, point-major. The data is copied.
    KdTree(std::span<const double> points, std::size_t dim);

    std::size_t size() const { return mDim == 0 ? 0 : mPoints.size() / mDim; }
    std::size_t dim() const { return mDim; }
    std::span<const double> point(std::size_t i) const { return {mPoints.data() + i * mDim, mDim}; }

    /// The k nearest points in ascending (distance, index) order; fewer when size() < k.
    std::vector<Neighbor> nearest(std::span<const double> query, std::size_t k) const;
    Neighbor nearestOne(std::span<const double> query) const;

  private:
    struct Node {
        std::uint32_t begin, end;  ///< range in mOrder
        std::int32_t left = -1, right = -1;
        std::uint32_t axis = 0;
        double split = 0.0;
    };

    std::int32_t build(std::uint32_t begin, std::uint32_t end);
    void search(std::int32_t node, std::span<const double> query, std::size_t k, std::vector<Neighbor> &heap) const;

    std::size_t mDim = 0;
    std::vector<double> mPoints;
    std::vector<std::uint32_t> mOrder;
    std::vector<Node> mNodes;
    std::int32_t mRoot = -1;
};

} // namespace gskit
