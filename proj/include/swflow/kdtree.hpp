// 3D kd-tree for nearest-neighbour queries. Ties are broken by lowest point
// index so query results are deterministic.
#pragma once

#include <cstddef>
#include <vector>

#include "swflow/vec3.hpp"

namespace swflow {

class KdTree {
public:
    explicit KdTree(const std::vector<Vec3>& points);

    struct Hit {
        int index = -1;
        double dist2 = 0.0;
    };

    Hit nearest(const Vec3& query) const;
    std::size_t size() const { return pts_.size(); }

private:
    struct Node {
        int left = -1, right = -1;
        int begin = 0, end = 0;  // leaf range into order_
        int axis = 0;
        double split = 0.0;
    };

    int build(int begin, int end);
    void search(int node, const Vec3& q, Hit& best) const;

    std::vector<Vec3> pts_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
    static constexpr int kLeafSize = 8;
};

}  // namespace swflow
