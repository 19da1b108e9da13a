// Box representations and overlap computations shared by association costs,
// metrics and the simulator. All functions are pure and scalar-templated;
// the ground plane is (x, z) and the vertical axis is y.
#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <vector>

namespace ftk {

template <class Scalar>
inline constexpr Scalar kPi = Scalar(3.141592653589793238462643383279502884L);

// Normalizes an angle to (-pi, pi].
template <class Scalar>
Scalar wrap_angle(Scalar a) {
  Scalar y = std::fmod(a + kPi<Scalar>, Scalar(2) * kPi<Scalar>);
  if (y <= Scalar(0)) y += Scalar(2) * kPi<Scalar>;
  return y - kPi<Scalar>;
}

// Axis-aligned image-plane box, (u, v) is the top-left corner, in pixels.
template <class Scalar>
struct Box2 {
  Scalar u{0}, v{0}, w{1}, h{1};
};

// Oriented cuboid; (x, y, z) is the center of the bottom face, the box spans
// [y, y+h] vertically, l runs along the local x axis and w along local z,
// theta is the yaw about the floor-plane normal.
template <class Scalar>
struct Box3 {
  Scalar x{0}, y{0}, z{0};
  Scalar l{1}, w{1}, h{1};
  Scalar theta{0};
};

// Convex counter-clockwise polygon in the (x, z) ground plane.
// An empty vertex list represents the empty set.
template <class Scalar>
struct ConvexPolygon2 {
  std::vector<Eigen::Matrix<Scalar, 2, 1>> vertices;
};

using Box2d = Box2<double>;
using Box3d = Box3<double>;
using Polygon2d = ConvexPolygon2<double>;

template <class Scalar>
Scalar box_volume(const Box3<Scalar>& b) {
  return b.l * b.w * b.h;
}

template <class Scalar>
Scalar iou2d(const Box2<Scalar>& a, const Box2<Scalar>& b) {
  const Scalar iw = std::min(a.u + a.w, b.u + b.w) - std::max(a.u, b.u);
  const Scalar ih = std::min(a.v + a.h, b.v + b.h) - std::max(a.v, b.v);
  if (iw <= Scalar(0) || ih <= Scalar(0)) return Scalar(0);
  const Scalar inter = iw * ih;
  const Scalar uni = a.w * a.h + b.w * b.h - inter;
  return uni > Scalar(0) ? inter / uni : Scalar(0);
}

// Shoelace formula; valid for CCW polygons, degenerate inputs give 0.
template <class Scalar>
Scalar polygon_area(const ConvexPolygon2<Scalar>& poly) {
  const auto& v = poly.vertices;
  if (v.size() < 3) return Scalar(0);
  Scalar twice = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto& p = v[i];
    const auto& q = v[(i + 1) % v.size()];
    twice += p.x() * q.y() - q.x() * p.y();
  }
  return std::max(Scalar(0.5) * twice, Scalar(0));
}

// Sutherland-Hodgman clip of one convex CCW polygon against another.
// Returns the (possibly empty) intersection, CCW. Consecutive output
// vertices closer than 1e-9 are merged.
template <class Scalar>
ConvexPolygon2<Scalar> clip_polygon(const ConvexPolygon2<Scalar>& subject,
                                    const ConvexPolygon2<Scalar>& clip) {
  using V2 = Eigen::Matrix<Scalar, 2, 1>;
  constexpr Scalar kVertexEps = Scalar(1e-9);

  std::vector<V2> out = subject.vertices;
  const std::size_t nc = clip.vertices.size();
  for (std::size_t i = 0; i < nc && !out.empty(); ++i) {
    const V2 a = clip.vertices[i];
    const V2 b = clip.vertices[(i + 1) % nc];
    const V2 e = b - a;

    std::vector<V2> in;
    in.swap(out);
    const std::size_t m = in.size();
    for (std::size_t j = 0; j < m; ++j) {
      const V2& p = in[j];
      const V2& q = in[(j + 1) % m];
      // signed side of the directed clip edge; >= 0 keeps the point
      const Scalar sp = e.x() * (p.y() - a.y()) - e.y() * (p.x() - a.x());
      const Scalar sq = e.x() * (q.y() - a.y()) - e.y() * (q.x() - a.x());
      if (sq >= Scalar(0)) {
        if (sp < Scalar(0)) out.push_back(p + (sp / (sp - sq)) * (q - p));
        out.push_back(q);
      } else if (sp >= Scalar(0)) {
        out.push_back(p + (sp / (sp - sq)) * (q - p));
      }
    }
  }

  std::vector<V2> dedup;
  dedup.reserve(out.size());
  for (const V2& p : out) {
    if (dedup.empty() || (p - dedup.back()).norm() > kVertexEps) dedup.push_back(p);
  }
  while (dedup.size() > 1 && (dedup.front() - dedup.back()).norm() <= kVertexEps) {
    dedup.pop_back();
  }
  if (dedup.size() < 3) return {};
  return {std::move(dedup)};
}

// Bird's-eye footprint of an oriented box, CCW in the (x, z) plane.
template <class Scalar>
ConvexPolygon2<Scalar> footprint(const Box3<Scalar>& b) {
  using V2 = Eigen::Matrix<Scalar, 2, 1>;
  const Scalar c = std::cos(b.theta), s = std::sin(b.theta);
  const Scalar hl = Scalar(0.5) * b.l, hw = Scalar(0.5) * b.w;
  ConvexPolygon2<Scalar> poly;
  poly.vertices.reserve(4);
  const Scalar lx[4] = {hl, -hl, -hl, hl};
  const Scalar lz[4] = {hw, hw, -hw, -hw};
  for (int i = 0; i < 4; ++i) {
    poly.vertices.push_back(V2(c * lx[i] - s * lz[i] + b.x, s * lx[i] + c * lz[i] + b.z));
  }
  return poly;
}

template <class Scalar>
Scalar vertical_overlap(const Box3<Scalar>& a, const Box3<Scalar>& b) {
  return std::max(std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y), Scalar(0));
}

template <class Scalar>
Scalar intersection_volume(const Box3<Scalar>& a, const Box3<Scalar>& b) {
  const Scalar dy = vertical_overlap(a, b);
  if (dy <= Scalar(0)) return Scalar(0);
  const Scalar area = polygon_area(clip_polygon(footprint(a), footprint(b)));
  return area * dy;
}

// Exact oriented 3D IoU: clipped footprint area times vertical extent.
template <class Scalar>
Scalar iou3d(const Box3<Scalar>& a, const Box3<Scalar>& b) {
  const Scalar inter = intersection_volume(a, b);
  const Scalar uni = box_volume(a) + box_volume(b) - inter;
  if (uni <= Scalar(0)) return Scalar(0);
  return std::clamp(inter / uni, Scalar(0), Scalar(1));
}

// Association-time approximation that replaces b's yaw with a's, reducing the
// footprint overlap to an axis-aligned one in a's frame.
template <class Scalar>
Scalar iou3d_aligned(const Box3<Scalar>& a, const Box3<Scalar>& b) {
  const Scalar c = std::cos(a.theta), s = std::sin(a.theta);
  const Scalar dxw = b.x - a.x, dzw = b.z - a.z;
  const Scalar dx = c * dxw + s * dzw;  // b's center in a's frame
  const Scalar dz = -s * dxw + c * dzw;
  const Scalar ox =
      std::min(Scalar(0.5) * a.l, dx + Scalar(0.5) * b.l) - std::max(Scalar(-0.5) * a.l, dx - Scalar(0.5) * b.l);
  const Scalar oz =
      std::min(Scalar(0.5) * a.w, dz + Scalar(0.5) * b.w) - std::max(Scalar(-0.5) * a.w, dz - Scalar(0.5) * b.w);
  const Scalar oy = vertical_overlap(a, b);
  if (ox <= Scalar(0) || oz <= Scalar(0) || oy <= Scalar(0)) return Scalar(0);
  const Scalar inter = ox * oz * oy;
  const Scalar uni = box_volume(a) + box_volume(b) - inter;
  if (uni <= Scalar(0)) return Scalar(0);
  return std::clamp(inter / uni, Scalar(0), Scalar(1));
}

}  // namespace ftk
