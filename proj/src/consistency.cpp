#include "md/consistency.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <tuple>

#include "md/tensor.hpp"

namespace md {

namespace {

bool on_edge(const DepthMap& d, std::size_t y, std::size_t x, double threshold) {
  const double here = d.at(y, x);
  auto jumps = [&](std::size_t ny, std::size_t nx) {
    if (!d.is_valid(ny, nx)) return false;
    const double there = d.at(ny, nx);
    if (!(there > 0.0)) return false;
    return std::abs(there - here) > threshold * std::min(here, there);
  };
  return (y > 0 && jumps(y - 1, x)) || (y + 1 < d.height && jumps(y + 1, x)) || (x > 0 && jumps(y, x - 1)) ||
         (x + 1 < d.width && jumps(y, x + 1));
}

}  // namespace

DepthMap reproject_depth(const DepthMap& d_next, const Pose& pose, const Intrinsics& k,
                         const ReprojectOptions& options) {
  const std::size_t h = d_next.height, w = d_next.width;
  const Pose back = pose.inverse();
  std::vector<double> zbuf(h * w, std::numeric_limits<double>::infinity());
  std::vector<std::uint8_t> from_edge(h * w, 0);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      if (!d_next.is_valid(y, x)) continue;
      const double depth = d_next.at(y, x);
      if (!(depth > 0.0) || !std::isfinite(depth)) continue;
      const bool edge = options.edge_threshold > 0.0 && on_edge(d_next, y, x, options.edge_threshold);
      const Vec3 p{depth * (static_cast<double>(x) - k.cx) / k.fx, depth * (static_cast<double>(y) - k.cy) / k.fy,
                   depth};
      const Vec3 q = back.apply(p);
      if (!(q[2] > 0.0)) continue;
      const double u = std::floor(k.fx * q[0] / q[2] + k.cx + 0.5);
      const double v = std::floor(k.fy * q[1] / q[2] + k.cy + 0.5);
      if (u < 0.0 || v < 0.0 || u >= static_cast<double>(w) || v >= static_cast<double>(h)) continue;
      const std::size_t idx = static_cast<std::size_t>(v) * w + static_cast<std::size_t>(u);
      // edge points still occlude; a target they win is left invalid
      if (q[2] < zbuf[idx]) {
        zbuf[idx] = q[2];
        from_edge[idx] = edge;
      }
    }
  }
  // a one pixel band around edge-won targets catches magnification holes
  auto near_edge = [&](std::size_t y, std::size_t x) {
    const std::size_t i = y * w + x;
    return from_edge[i] || (y > 0 && from_edge[i - w]) || (y + 1 < h && from_edge[i + w]) ||
           (x > 0 && from_edge[i - 1]) || (x + 1 < w && from_edge[i + 1]);
  };
  DepthMap out(h, w, 0.0f, false);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t i = y * w + x;
      if (std::isfinite(zbuf[i]) && !near_edge(y, x)) {
        out.depth[i] = static_cast<float>(zbuf[i]);
        out.valid[i] = 1;
      }
    }
  }
  return out;
}

InconsistencyResult temporal_inconsistency(const DepthMap& d_hat, const DepthMap& d) {
  if (d_hat.height != d.height || d_hat.width != d.width) throw DimensionError("temporal_inconsistency: size mismatch");
  InconsistencyResult r;
  r.map = DepthMap(d.height, d.width, 0.0f, false);
  double sum = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double a = d_hat.depth[i], b = d.depth[i];
    if (!d_hat.valid[i] || !d.valid[i] || !(a > 0.0) || !(b > 0.0)) continue;
    const double e = std::abs(a - b) / std::abs(a + b);
    r.map.depth[i] = static_cast<float>(e);
    r.map.valid[i] = 1;
    sum += e;
    ++r.count;
  }
  if (r.count == 0) throw EmptyMaskError("temporal_inconsistency: no jointly valid pixel");
  r.mean = sum / static_cast<double>(r.count);
  return r;
}

std::vector<ConsistencyRow> sequence_consistency(const std::vector<Frame>& frames,
                                                 const std::vector<DepthMap>& predictions,
                                                 const std::vector<DepthMap>& baseline, std::size_t window,
                                                 const ReprojectOptions& options) {
  if (predictions.size() != frames.size() || baseline.size() != frames.size()) {
    throw DimensionError("sequence_consistency: one prediction and one baseline map per frame required");
  }
  std::vector<ConsistencyRow> rows;
  const std::size_t n = frames.size();
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t offset = 1; offset <= window; ++offset) {
      for (int sign : {-1, 1}) {
        if (sign < 0 && offset > t) continue;
        const std::size_t nb = sign < 0 ? t - offset : t + offset;
        if (nb >= n || frames[nb].scene != frames[t].scene) continue;
        const Pose motion = relative_pose(frames[t].pose, frames[nb].pose);
        const Intrinsics& k = frames[t].intrinsics;
        try {
          ConsistencyRow row;
          row.frame = t;
          row.neighbor = nb;
          const DepthMap warped = reproject_depth(predictions[nb], motion, k, options);
          row.incons_model = temporal_inconsistency(warped, predictions[t]).mean;
          row.incons_gt = temporal_inconsistency(warped, frames[t].depth).mean;
          row.incons_random =
              temporal_inconsistency(reproject_depth(baseline[nb], motion, k, options), frames[t].depth).mean;
          rows.push_back(row);
        } catch (const EmptyMaskError&) {
        }
      }
    }
  }
  return rows;
}

std::string consistency_csv(const std::vector<ConsistencyRow>& rows) {
  std::string out = "frame,neighbor,incons_model,incons_gt,incons_random\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.9g,%.9g,%.9g\n", r.frame, r.neighbor, r.incons_model, r.incons_gt,
                  r.incons_random);
    out += buf;
  }
  return out;
}

double lower_median(std::vector<float> values) {
  if (values.empty()) throw EmptyMaskError("lower_median: no values");
  const std::size_t mid = (values.size() - 1) / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  return values[mid];
}

ContinuityResult continuity_pairs(const std::vector<DepthMap>& predictions, const std::vector<BBox>& boxes) {
  ContinuityResult result;
  for (const auto& box : boxes) {
    if (box.frame_id >= predictions.size()) {
      throw ContractError("continuity_pairs: box references missing frame " + std::to_string(box.frame_id));
    }
    const DepthMap& d = predictions[box.frame_id];
    std::vector<float> values;
    if (!box.empty()) {
      for (std::size_t y = box.y0; y < std::min(box.y1, d.height); ++y) {
        for (std::size_t x = box.x0; x < std::min(box.x1, d.width); ++x) {
          if (d.is_valid(y, x)) values.push_back(d.at(y, x));
        }
      }
    }
    if (values.empty()) {
      ++result.skipped;
      continue;
    }
    result.pairs.push_back(
        {box.label, lower_median(std::move(values)), box.object_height, box.frame_id, box.x0, box.y0, box.x1, box.y1});
  }
  auto key = [](const ContinuityPair& p) {
    return std::tuple(static_cast<int>(p.label), p.frame_id, p.y0, p.x0, p.y1, p.x1, p.object_height, p.median_depth);
  };
  std::sort(result.pairs.begin(), result.pairs.end(), [&](const auto& a, const auto& b) { return key(a) < key(b); });
  return result;
}

std::string continuity_csv(const ContinuityResult& result) {
  std::string out = "class,median_depth,object_height\n";
  char buf[160];
  for (const auto& p : result.pairs) {
    std::snprintf(buf, sizeof buf, "%s,%.9g,%.9g\n", to_string(p.label).c_str(), p.median_depth, p.object_height);
    out += buf;
  }
  return out;
}

}  // namespace md
