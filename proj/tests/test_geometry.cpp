#include "scenesim/geometry.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "scenesim/random.hpp"

using namespace scenesim;

namespace {

constexpr double kPi = 3.14159265358979323846;

TEST(VectorOps, Basics) {
    EXPECT_DOUBLE_EQ(dot({1, 2}, {3, 4}), 11.0);
    EXPECT_DOUBLE_EQ(cross({1, 0}, {0, 1}), 1.0);
    EXPECT_DOUBLE_EQ(cross({0, 1}, {1, 0}), -1.0);
    EXPECT_DOUBLE_EQ(norm({3, 4}), 5.0);
    EXPECT_DOUBLE_EQ(distance({1, 1}, {4, 5}), 5.0);

    const Point2 u = normalized({10, 0});
    EXPECT_DOUBLE_EQ(u.x, 1.0);
    EXPECT_DOUBLE_EQ(u.y, 0.0);
    const Point2 z = normalized({0, 0});
    EXPECT_DOUBLE_EQ(z.x, 1.0);

    const Point2 n = left_normal({1, 0});
    EXPECT_DOUBLE_EQ(n.x, 0.0);
    EXPECT_DOUBLE_EQ(n.y, 1.0);
}

TEST(VectorOps, WrapAngle) {
    EXPECT_NEAR(wrap_angle(0.0), 0.0, 1e-12);
    EXPECT_NEAR(wrap_angle(2 * kPi), 0.0, 1e-12);
    EXPECT_NEAR(wrap_angle(kPi / 2 + 4 * kPi), kPi / 2, 1e-12);
    EXPECT_NEAR(wrap_angle(-kPi / 3), -kPi / 3, 1e-12);
    EXPECT_NEAR(wrap_angle(3 * kPi / 2), -kPi / 2, 1e-12);
    for (double a = -20.0; a < 20.0; a += 0.37) {
        const double w = wrap_angle(a);
        EXPECT_GE(w, -kPi - 1e-12);
        EXPECT_LE(w, kPi + 1e-12);
        EXPECT_NEAR(std::sin(w), std::sin(a), 1e-9);
        EXPECT_NEAR(std::cos(w), std::cos(a), 1e-9);
    }
}

TEST(PolylineOps, ArcLengthAndCumulative) {
    const Polyline pl{{0, 0}, {3, 0}, {3, 4}};
    EXPECT_DOUBLE_EQ(arc_length(pl), 7.0);
    const auto cum = cumulative_lengths(pl);
    ASSERT_EQ(cum.size(), 3u);
    EXPECT_DOUBLE_EQ(cum[0], 0.0);
    EXPECT_DOUBLE_EQ(cum[1], 3.0);
    EXPECT_DOUBLE_EQ(cum[2], 7.0);
    EXPECT_THROW(arc_length(Polyline{{0, 0}}), std::invalid_argument);
}

TEST(PolylineOps, PointAtArclength) {
    const Polyline pl{{0, 0}, {10, 0}, {10, 10}};
    auto p = point_at_arclength(pl, 5.0);
    EXPECT_NEAR(p.point.x, 5.0, 1e-12);
    EXPECT_NEAR(p.point.y, 0.0, 1e-12);
    EXPECT_NEAR(p.heading, 0.0, 1e-12);

    p = point_at_arclength(pl, 15.0);
    EXPECT_NEAR(p.point.x, 10.0, 1e-12);
    EXPECT_NEAR(p.point.y, 5.0, 1e-12);
    EXPECT_NEAR(p.heading, kPi / 2, 1e-12);

    p = point_at_arclength(pl, 20.0);
    EXPECT_NEAR(p.point.y, 10.0, 1e-12);
    EXPECT_THROW(point_at_arclength(pl, 21.0), std::out_of_range);
    EXPECT_THROW(point_at_arclength(pl, -1.0), std::out_of_range);
}

TEST(PolylineOps, Projection) {
    const Polyline pl{{0, 0}, {10, 0}};
    auto pr = project_to_polyline(pl, {4.0, 2.0});
    EXPECT_NEAR(pr.s, 4.0, 1e-12);
    EXPECT_NEAR(pr.lateral, 2.0, 1e-12);
    EXPECT_NEAR(pr.signed_lateral, 2.0, 1e-12);  // left of +x travel

    pr = project_to_polyline(pl, {4.0, -3.0});
    EXPECT_NEAR(pr.signed_lateral, -3.0, 1e-12);

    pr = project_to_polyline(pl, {-5.0, 0.0});
    EXPECT_NEAR(pr.s, 0.0, 1e-12);
    EXPECT_NEAR(pr.lateral, 5.0, 1e-12);

    pr = project_to_polyline(pl, {13.0, 4.0});
    EXPECT_NEAR(pr.s, 10.0, 1e-12);
    EXPECT_NEAR(pr.lateral, 5.0, 1e-12);
    EXPECT_NEAR(pr.closest.x, 10.0, 1e-12);

    const Polyline bend{{0, 0}, {10, 0}, {10, 10}};
    pr = project_to_polyline(bend, {12.0, 7.0});
    EXPECT_NEAR(pr.s, 17.0, 1e-12);
    EXPECT_NEAR(pr.lateral, 2.0, 1e-12);
    EXPECT_NEAR(pr.signed_lateral, -2.0, 1e-12);  // right of +y travel
    EXPECT_EQ(pr.segment, 1u);
}

TEST(PolylineOps, DistanceAndResample) {
    const Polyline pl{{0, 0}, {10, 0}};
    EXPECT_NEAR(distance_to_polyline(pl, {5, 3}), 3.0, 1e-12);

    const auto r = resample(pl, 1.0);
    ASSERT_EQ(r.size(), 11u);
    EXPECT_NEAR(r[3].x, 3.0, 1e-12);

    const auto r2 = resample(pl, 3.0);
    ASSERT_EQ(r2.size(), 5u);  // 0,3,6,9 + final point
    EXPECT_NEAR(r2.back().x, 10.0, 1e-12);
}

TEST(Segments, Intersect) {
    EXPECT_TRUE(segments_intersect({0, 0}, {2, 2}, {0, 2}, {2, 0}));
    EXPECT_FALSE(segments_intersect({0, 0}, {1, 0}, {0, 1}, {1, 1}));
    EXPECT_TRUE(segments_intersect({0, 0}, {4, 0}, {2, 0}, {2, 3}));   // T touch
    EXPECT_TRUE(segments_intersect({0, 0}, {4, 0}, {1, 0}, {3, 0}));   // collinear overlap
    EXPECT_FALSE(segments_intersect({0, 0}, {1, 0}, {2, 0}, {3, 0}));  // collinear gap
}

TEST(Segments, PolylinesCross) {
    const Polyline a{{0, 0}, {10, 0}};
    const Polyline b{{5, -5}, {5, 5}};
    const Polyline c{{0, 1}, {10, 1}};
    EXPECT_TRUE(polylines_cross(a, b));
    EXPECT_FALSE(polylines_cross(a, c));
}

TEST(Segments, Distances) {
    EXPECT_NEAR(point_segment_distance({5, 3}, {0, 0}, {10, 0}), 3.0, 1e-12);
    EXPECT_NEAR(point_segment_distance({-3, 4}, {0, 0}, {10, 0}), 5.0, 1e-12);
    EXPECT_NEAR(segment_segment_distance({0, 0}, {10, 0}, {0, 4}, {10, 4}), 4.0, 1e-12);
    EXPECT_NEAR(segment_segment_distance({0, 0}, {2, 2}, {0, 2}, {2, 0}), 0.0, 1e-12);
}

TEST(Boxes, CornersAndContainment) {
    OrientedBox b{{0, 0}, 0.0, 4.0, 2.0};
    const auto c = b.corners();
    EXPECT_NEAR(c[0].x, 2.0, 1e-12);
    EXPECT_NEAR(c[0].y, 1.0, 1e-12);
    EXPECT_NEAR(c[2].x, -2.0, 1e-12);
    EXPECT_NEAR(c[2].y, -1.0, 1e-12);

    EXPECT_TRUE(point_in_box({1.9, 0.9}, b));
    EXPECT_FALSE(point_in_box({2.1, 0.0}, b));

    OrientedBox r{{0, 0}, kPi / 2, 4.0, 2.0};
    EXPECT_TRUE(point_in_box({0.0, 1.9}, r));
    EXPECT_FALSE(point_in_box({1.1, 0.0}, r));
}

TEST(Boxes, OverlapKnownCases) {
    OrientedBox a{{0, 0}, 0.0, 4.0, 2.0};
    OrientedBox b{{10, 0}, 0.0, 4.0, 2.0};
    EXPECT_FALSE(boxes_overlap(a, b));
    b.center = {3.9, 0};
    EXPECT_TRUE(boxes_overlap(a, b));
    // plus-shaped crossing: no corner of either inside the other
    OrientedBox h{{0, 0}, 0.0, 10.0, 1.0};
    OrientedBox v{{0, 0}, kPi / 2, 10.0, 1.0};
    EXPECT_TRUE(boxes_overlap(h, v));
    // small box contained in a large one
    OrientedBox big{{0, 0}, 0.3, 20.0, 20.0};
    OrientedBox small{{1, 1}, 1.2, 1.0, 0.5};
    EXPECT_TRUE(boxes_overlap(big, small));
}

// independent oracle: pairwise edge intersection plus vertex containment by
// cross-product sign walks (no shared code with the separating-axis test)
bool quad_overlap_oracle(const OrientedBox& a, const OrientedBox& b) {
    const auto ca = a.corners();
    const auto cb = b.corners();
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            if (segments_intersect(ca[i], ca[(i + 1) % 4], cb[j], cb[(j + 1) % 4])) return true;
    const auto inside = [](const std::array<Point2, 4>& quad, Point2 p) {
        // corners() yields clockwise order; all cross products share a sign
        double sign = 0.0;
        for (int i = 0; i < 4; ++i) {
            const double c = cross(quad[(i + 1) % 4] - quad[i], p - quad[i]);
            if (std::abs(c) < 1e-12) continue;
            if (sign == 0.0)
                sign = c;
            else if ((c > 0) != (sign > 0))
                return false;
        }
        return true;
    };
    return inside(ca, cb[0]) || inside(cb, ca[0]);
}

TEST(Boxes, OverlapMatchesIndependentOracle) {
    Rng rng(20240811);
    int overlaps = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        OrientedBox a{{rng.uniform(-10, 10), rng.uniform(-10, 10)},
                      rng.uniform(0, 2 * kPi),
                      rng.uniform(0.5, 8.0),
                      rng.uniform(0.5, 4.0)};
        OrientedBox b{{rng.uniform(-10, 10), rng.uniform(-10, 10)},
                      rng.uniform(0, 2 * kPi),
                      rng.uniform(0.5, 8.0),
                      rng.uniform(0.5, 4.0)};
        const bool got = boxes_overlap(a, b);
        const bool want = quad_overlap_oracle(a, b);
        ASSERT_EQ(got, want) << "trial " << trial;
        overlaps += got ? 1 : 0;
    }
    // sanity: the random mix exercises both outcomes
    EXPECT_GT(overlaps, 500);
    EXPECT_LT(overlaps, 9500);
}

TEST(Boxes, DistanceKnownCases) {
    OrientedBox a{{0, 0}, 0.0, 4.0, 2.0};
    OrientedBox b{{10, 0}, 0.0, 4.0, 2.0};
    EXPECT_NEAR(box_distance(a, b), 6.0, 1e-12);
    b.center = {0, 5};
    EXPECT_NEAR(box_distance(a, b), 3.0, 1e-12);
    b.center = {1, 0};
    EXPECT_NEAR(box_distance(a, b), 0.0, 1e-12);
    // diagonal corner gap
    b = {{5, 4}, 0.0, 4.0, 2.0};
    EXPECT_NEAR(box_distance(a, b), std::hypot(1.0, 2.0), 1e-12);
}

TEST(Boxes, DistanceMatchesPerimeterSampling) {
    Rng rng(77);
    const int samples = 400;
    const auto sample_perimeter = [&](const OrientedBox& box) {
        std::vector<Point2> pts;
        const auto c = box.corners();
        for (int i = 0; i < 4; ++i)
            for (int k = 0; k < samples / 4; ++k) {
                const double t = static_cast<double>(k) / (samples / 4);
                pts.push_back(c[i] + (c[(i + 1) % 4] - c[i]) * t);
            }
        return pts;
    };
    for (int trial = 0; trial < 200; ++trial) {
        OrientedBox a{{rng.uniform(-10, 10), rng.uniform(-10, 10)},
                      rng.uniform(0, 2 * kPi),
                      rng.uniform(1.0, 6.0),
                      rng.uniform(0.5, 3.0)};
        OrientedBox b{{rng.uniform(-10, 10), rng.uniform(-10, 10)},
                      rng.uniform(0, 2 * kPi),
                      rng.uniform(1.0, 6.0),
                      rng.uniform(0.5, 3.0)};
        if (boxes_overlap(a, b)) continue;
        double brute = std::numeric_limits<double>::infinity();
        for (const Point2& p : sample_perimeter(a))
            for (const Point2& q : sample_perimeter(b)) brute = std::min(brute, distance(p, q));
        // both perimeters discretized at <=0.06 m spacing
        EXPECT_NEAR(box_distance(a, b), brute, 0.1) << "trial " << trial;
        EXPECT_LE(box_distance(a, b), brute + 1e-9);
    }
}

TEST(Hull, ConvexHullSquare) {
    std::vector<Point2> pts{{0, 0}, {4, 0}, {4, 4}, {0, 4}, {2, 2}, {1, 3}, {3, 1}};
    const auto hull = convex_hull(pts);
    ASSERT_EQ(hull.size(), 4u);
    double area2 = 0.0;
    for (size_t i = 0; i < hull.size(); ++i)
        area2 += cross(hull[i], hull[(i + 1) % hull.size()]);
    EXPECT_GT(area2, 0.0);  // counter-clockwise
    EXPECT_NEAR(area2 / 2.0, 16.0, 1e-12);
}

TEST(Hull, Degenerate) {
    std::vector<Point2> two{{0, 0}, {1, 1}};
    EXPECT_EQ(convex_hull(two).size(), 2u);
    std::vector<Point2> collinear{{0, 0}, {1, 0}, {2, 0}, {3, 0}};
    EXPECT_EQ(convex_hull(collinear).size(), 2u);
}

}  // namespace
