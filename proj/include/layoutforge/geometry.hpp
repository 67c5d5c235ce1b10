#pragma once

#include <algorithm>
#include <cmath>

namespace layoutforge {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline bool operator==(const Point& a, const Point& b) { return a.x == b.x && a.y == b.y; }

// Repairs applied when sanitizing raw coordinates. Kept as a bitmask so a
// single parse can record several fixes.
enum RepairFlag : unsigned {
    kRepairNone = 0,
    kRepairClamped = 1u << 0,
    kRepairSwappedX = 1u << 1,
    kRepairSwappedY = 1u << 2,
};

// Axis-aligned rectangle in percent-of-page coordinates: x in [0,100] of the
// page width, y in [0,100] of the page height, origin top-left, y grows
// downward. Valid boxes satisfy x1 <= x2 and y1 <= y2.
struct BBox {
    double x1 = 0.0;
    double y1 = 0.0;
    double x2 = 0.0;
    double y2 = 0.0;

    Point origin() const { return {x1, y1}; }
    Point closing() const { return {x2, y2}; }
    double width() const { return x2 - x1; }
    double height() const { return y2 - y1; }

    bool valid() const {
        return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) &&
               std::isfinite(y2) && x1 <= x2 && y1 <= y2 && x1 >= 0.0 &&
               y1 >= 0.0 && x2 <= 100.0 && y2 <= 100.0;
    }
};

inline bool operator==(const BBox& a, const BBox& b) {
    return a.x1 == b.x1 && a.y1 == b.y1 && a.x2 == b.x2 && a.y2 == b.y2;
}

// Repairs raw coordinates instead of rejecting them: inverted corners are
// swapped, out-of-range values clamped to [0,100]. Non-finite input collapses
// to 0. The applied fixes are OR-ed into `repairs` when given.
inline BBox sanitize_bbox(double x1, double y1, double x2, double y2,
                          unsigned* repairs = nullptr) {
    unsigned flags = kRepairNone;
    auto fix = [&flags](double v) {
        if (!std::isfinite(v)) {
            flags |= kRepairClamped;
            return 0.0;
        }
        double c = std::clamp(v, 0.0, 100.0);
        if (c != v) flags |= kRepairClamped;
        return c;
    };
    if (std::isfinite(x1) && std::isfinite(x2) && x1 > x2) {
        std::swap(x1, x2);
        flags |= kRepairSwappedX;
    }
    if (std::isfinite(y1) && std::isfinite(y2) && y1 > y2) {
        std::swap(y1, y2);
        flags |= kRepairSwappedY;
    }
    BBox b{fix(x1), fix(y1), fix(x2), fix(y2)};
    if (repairs) *repairs |= flags;
    return b;
}

inline double area(const BBox& b) { return (b.x2 - b.x1) * (b.y2 - b.y1); }

// Boundary-inclusive: a box contains itself.
inline bool contains(const BBox& outer, const BBox& inner) {
    return outer.x1 <= inner.x1 && outer.y1 <= inner.y1 && inner.x2 <= outer.x2 &&
           inner.y2 <= outer.y2;
}

inline double intersection_area(const BBox& a, const BBox& b) {
    double w = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
    double h = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
    if (w <= 0.0 || h <= 0.0) return 0.0;
    return w * h;
}

// Positive-area intersection only; edge-touching boxes do not overlap.
inline bool overlaps(const BBox& a, const BBox& b) {
    return intersection_area(a, b) > 0.0;
}

}  // namespace layoutforge
