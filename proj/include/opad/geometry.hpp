#pragma once

#include <algorithm>
#include <variant>

#include "opad/common.hpp"

namespace opad {

// Axis-aligned box in unit-page coordinates.
struct Box {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

    bool valid() const { return x0 < x1 && y0 < y1; }
    double area() const { return (x1 - x0) * (y1 - y0); }

    friend bool operator==(const Box& a, const Box& b) {
        return a.x0 == b.x0 && a.y0 == b.y0 && a.x1 == b.x1 && a.y1 == b.y1;
    }
    friend auto operator<=>(const Box& a, const Box& b) = default;
};

// Token span, end exclusive.
struct Span {
    int start = 0, end = 0;

    bool valid() const { return start >= 0 && start < end; }
    int length() const { return end - start; }

    friend bool operator==(const Span& a, const Span& b) = default;
    friend auto operator<=>(const Span& a, const Span& b) = default;
};

using Geometry = std::variant<Box, Span>;

inline double iou(const Box& a, const Box& b) {
    const double ix0 = std::max(a.x0, b.x0);
    const double iy0 = std::max(a.y0, b.y0);
    const double ix1 = std::min(a.x1, b.x1);
    const double iy1 = std::min(a.y1, b.y1);
    if (ix1 <= ix0 || iy1 <= iy0) return 0.0;
    const double inter = (ix1 - ix0) * (iy1 - iy0);
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

// Total order on geometries, used as a deterministic tie-break key.
inline bool geometry_less(const Geometry& a, const Geometry& b) {
    if (a.index() != b.index()) return a.index() < b.index();
    if (std::holds_alternative<Box>(a)) return std::get<Box>(a) < std::get<Box>(b);
    return std::get<Span>(a) < std::get<Span>(b);
}

}  // namespace opad
