#include "swflow/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "swflow/errors.hpp"

namespace swflow {

KdTree::KdTree(const std::vector<Vec3>& points) : pts_(points) {
    if (pts_.empty()) throw input_error("KdTree: empty point set");
    order_.resize(pts_.size());
    std::iota(order_.begin(), order_.end(), 0);
    nodes_.reserve(2 * pts_.size() / kLeafSize + 4);
    root_ = build(0, static_cast<int>(pts_.size()));
}

int KdTree::build(int begin, int end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    if (end - begin <= kLeafSize) {
        nodes_[id].begin = begin;
        nodes_[id].end = end;
        return id;
    }
    // Split on the widest axis at the median.
    Vec3 lo = pts_[order_[begin]], hi = lo;
    for (int i = begin; i < end; ++i) {
        const Vec3& p = pts_[order_[i]];
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], p[a]);
            hi[a] = std::max(hi[a], p[a]);
        }
    }
    int axis = 0;
    double width = hi[0] - lo[0];
    for (int a = 1; a < 3; ++a)
        if (hi[a] - lo[a] > width) {
            width = hi[a] - lo[a];
            axis = a;
        }
    const int mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int i, int j) {
                         const double a = pts_[i][axis], b = pts_[j][axis];
                         return a < b || (a == b && i < j);
                     });
    nodes_[id].axis = axis;
    nodes_[id].split = pts_[order_[mid]][axis];
    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

void KdTree::search(int node, const Vec3& q, Hit& best) const {
    const Node& n = nodes_[node];
    if (n.left < 0) {
        for (int i = n.begin; i < n.end; ++i) {
            const int idx = order_[i];
            const double d2 = norm2(pts_[idx] - q);
            if (d2 < best.dist2 || (d2 == best.dist2 && idx < best.index)) {
                best.dist2 = d2;
                best.index = idx;
            }
        }
        return;
    }
    const double diff = q[n.axis] - n.split;
    const int near = diff < 0.0 ? n.left : n.right;
    const int far = diff < 0.0 ? n.right : n.left;
    search(near, q, best);
    // <= so equidistant candidates across the plane are still visited (ties
    // must resolve to the lowest index).
    if (diff * diff <= best.dist2) search(far, q, best);
}

KdTree::Hit KdTree::nearest(const Vec3& query) const {
    Hit best;
    best.dist2 = std::numeric_limits<double>::infinity();
    search(root_, query, best);
    return best;
}

}  // namespace swflow
