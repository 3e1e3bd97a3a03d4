#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace scenesim {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Point2 operator*(Point2 a, double s) { return {a.x * s, a.y * s}; }
    friend Point2 operator*(double s, Point2 a) { return a * s; }
    friend bool operator==(const Point2& a, const Point2& b) { return a.x == b.x && a.y == b.y; }
};

using Polyline = std::vector<Point2>;

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline double distance(Point2 a, Point2 b) { return norm(b - a); }

inline Point2 normalized(Point2 a) {
    const double n = norm(a);
    if (n < 1e-12) return {1.0, 0.0};
    return {a.x / n, a.y / n};
}

// Left normal of a unit direction; the right side is the negative of this.
inline Point2 left_normal(Point2 dir) { return {-dir.y, dir.x}; }

inline double wrap_angle(double a) {
    a = std::fmod(a + M_PI, 2.0 * M_PI);
    if (a < 0) a += 2.0 * M_PI;
    return a - M_PI;
}

inline double heading_of(Point2 from, Point2 to) { return std::atan2(to.y - from.y, to.x - from.x); }

// --------------------------------------------------------------------------
// Polyline accessors
// --------------------------------------------------------------------------

inline double arc_length(const Polyline& pl) {
    if (pl.size() < 2) throw std::invalid_argument("arc_length: polyline needs >=2 points");
    double total = 0.0;
    for (size_t i = 1; i < pl.size(); ++i) total += distance(pl[i - 1], pl[i]);
    return total;
}

inline std::vector<double> cumulative_lengths(const Polyline& pl) {
    std::vector<double> cum(pl.size(), 0.0);
    for (size_t i = 1; i < pl.size(); ++i) cum[i] = cum[i - 1] + distance(pl[i - 1], pl[i]);
    return cum;
}

struct PoseOnLine {
    Point2 point;
    double heading = 0.0;  // tangent of the containing segment, radians
};

inline PoseOnLine point_at_arclength(const Polyline& pl, double s) {
    if (pl.size() < 2) throw std::invalid_argument("point_at_arclength: polyline needs >=2 points");
    const double total = arc_length(pl);
    if (s < -1e-9 || s > total + 1e-9)
        throw std::out_of_range("point_at_arclength: s outside [0, length]");
    s = std::clamp(s, 0.0, total);
    double acc = 0.0;
    for (size_t i = 1; i < pl.size(); ++i) {
        const double seg = distance(pl[i - 1], pl[i]);
        if (acc + seg >= s - 1e-12 && seg > 0.0) {
            const double t = std::clamp((s - acc) / seg, 0.0, 1.0);
            Point2 p = pl[i - 1] + (pl[i] - pl[i - 1]) * t;
            return {p, heading_of(pl[i - 1], pl[i])};
        }
        acc += seg;
    }
    const size_t n = pl.size();
    return {pl[n - 1], heading_of(pl[n - 2], pl[n - 1])};
}

struct Projection {
    double s = 0.0;           // arclength of the closest point
    double lateral = 0.0;     // unsigned distance to the polyline
    double signed_lateral = 0.0;  // positive on the left of travel direction
    size_t segment = 0;       // index of the closest segment start vertex
    Point2 closest;
};

inline Projection project_to_polyline(const Polyline& pl, Point2 p) {
    if (pl.size() < 2) throw std::invalid_argument("project_to_polyline: polyline needs >=2 points");
    Projection best;
    best.lateral = std::numeric_limits<double>::infinity();
    double acc = 0.0;
    for (size_t i = 1; i < pl.size(); ++i) {
        const Point2 a = pl[i - 1];
        const Point2 b = pl[i];
        const Point2 ab = b - a;
        const double len2 = dot(ab, ab);
        double t = len2 > 0.0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
        const Point2 c = a + ab * t;
        const double d = distance(p, c);
        if (d < best.lateral) {
            best.lateral = d;
            best.s = acc + t * std::sqrt(len2);
            best.segment = i - 1;
            best.closest = c;
            const Point2 dir = normalized(ab);
            best.signed_lateral = cross(dir, p - c) >= 0 ? d : -d;
        }
        acc += std::sqrt(len2);
    }
    return best;
}

inline double distance_to_polyline(const Polyline& pl, Point2 p) {
    return project_to_polyline(pl, p).lateral;
}

// Resample a polyline at a fixed step (always keeps the final point).
inline Polyline resample(const Polyline& pl, double step) {
    const double total = arc_length(pl);
    Polyline out;
    for (double s = 0.0; s < total; s += step) out.push_back(point_at_arclength(pl, s).point);
    out.push_back(pl.back());
    return out;
}

// --------------------------------------------------------------------------
// Segments and boxes
// --------------------------------------------------------------------------

inline bool segments_intersect(Point2 a, Point2 b, Point2 c, Point2 d) {
    const auto orient = [](Point2 p, Point2 q, Point2 r) {
        const double v = cross(q - p, r - p);
        if (v > 1e-12) return 1;
        if (v < -1e-12) return -1;
        return 0;
    };
    const int o1 = orient(a, b, c), o2 = orient(a, b, d);
    const int o3 = orient(c, d, a), o4 = orient(c, d, b);
    if (o1 != o2 && o3 != o4) return true;
    const auto on_seg = [](Point2 p, Point2 q, Point2 r) {
        return std::min(p.x, q.x) - 1e-12 <= r.x && r.x <= std::max(p.x, q.x) + 1e-12 &&
               std::min(p.y, q.y) - 1e-12 <= r.y && r.y <= std::max(p.y, q.y) + 1e-12;
    };
    if (o1 == 0 && on_seg(a, b, c)) return true;
    if (o2 == 0 && on_seg(a, b, d)) return true;
    if (o3 == 0 && on_seg(c, d, a)) return true;
    if (o4 == 0 && on_seg(c, d, b)) return true;
    return false;
}

inline bool polylines_cross(const Polyline& p, const Polyline& q) {
    for (size_t i = 1; i < p.size(); ++i)
        for (size_t j = 1; j < q.size(); ++j)
            if (segments_intersect(p[i - 1], p[i], q[j - 1], q[j])) return true;
    return false;
}

// Oriented bounding box; length along the heading, width across it.
struct OrientedBox {
    Point2 center;
    double heading = 0.0;
    double length = 0.0;
    double width = 0.0;

    std::array<Point2, 4> corners() const {
        const Point2 f{std::cos(heading), std::sin(heading)};
        const Point2 l = left_normal(f);
        const Point2 hf = f * (length * 0.5);
        const Point2 hl = l * (width * 0.5);
        return {center + hf + hl, center + hf - hl, center - hf - hl, center - hf + hl};
    }
};

// Separating-axis test on the two boxes' four face normals.
inline bool boxes_overlap(const OrientedBox& a, const OrientedBox& b) {
    const auto ca = a.corners();
    const auto cb = b.corners();
    const std::array<Point2, 4> axes = {
        Point2{std::cos(a.heading), std::sin(a.heading)},
        left_normal({std::cos(a.heading), std::sin(a.heading)}),
        Point2{std::cos(b.heading), std::sin(b.heading)},
        left_normal({std::cos(b.heading), std::sin(b.heading)}),
    };
    for (const Point2& axis : axes) {
        double amin = std::numeric_limits<double>::infinity(), amax = -amin;
        double bmin = amin, bmax = -amin;
        for (const Point2& c : ca) {
            const double v = dot(c, axis);
            amin = std::min(amin, v);
            amax = std::max(amax, v);
        }
        for (const Point2& c : cb) {
            const double v = dot(c, axis);
            bmin = std::min(bmin, v);
            bmax = std::max(bmax, v);
        }
        if (amax < bmin || bmax < amin) return false;
    }
    return true;
}

inline double point_segment_distance(Point2 p, Point2 a, Point2 b) {
    const Point2 ab = b - a;
    const double len2 = dot(ab, ab);
    const double t = len2 > 0.0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
    return distance(p, a + ab * t);
}

inline double segment_segment_distance(Point2 a, Point2 b, Point2 c, Point2 d) {
    if (segments_intersect(a, b, c, d)) return 0.0;
    return std::min(std::min(point_segment_distance(a, c, d), point_segment_distance(b, c, d)),
                    std::min(point_segment_distance(c, a, b), point_segment_distance(d, a, b)));
}

// Minimum distance between box outlines; 0 when they overlap.
inline double box_distance(const OrientedBox& a, const OrientedBox& b) {
    if (boxes_overlap(a, b)) return 0.0;
    const auto ca = a.corners();
    const auto cb = b.corners();
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            best = std::min(best, segment_segment_distance(ca[i], ca[(i + 1) % 4], cb[j], cb[(j + 1) % 4]));
    return best;
}

inline bool point_in_box(Point2 p, const OrientedBox& b) {
    const Point2 f{std::cos(b.heading), std::sin(b.heading)};
    const Point2 rel = p - b.center;
    return std::abs(dot(rel, f)) <= b.length * 0.5 && std::abs(cross(f, rel)) <= b.width * 0.5;
}

// Convex hull (Andrew monotone chain), CCW order.
inline std::vector<Point2> convex_hull(std::vector<Point2> pts) {
    if (pts.size() < 3) return pts;
    std::sort(pts.begin(), pts.end(), [](Point2 a, Point2 b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](Point2 a, Point2 b) { return a.x == b.x && a.y == b.y; }),
              pts.end());
    if (pts.size() < 3) return pts;
    std::vector<Point2> hull(2 * pts.size());
    size_t k = 0;
    for (size_t i = 0; i < pts.size(); ++i) {
        while (k >= 2 && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0) --k;
        hull[k++] = pts[i];
    }
    const size_t lower = k + 1;
    for (size_t i = pts.size() - 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

}  // namespace scenesim
