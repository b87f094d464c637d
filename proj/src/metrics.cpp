#include "md/metrics.hpp"

#include <cmath>
#include <cstdio>

#include "md/tensor.hpp"

namespace md {

CropSpec CropSpec::none() { return {}; }

CropSpec CropSpec::eigen() { return {CropKind::eigen, 45.0 / 480.0, 471.0 / 480.0, 41.0 / 640.0, 601.0 / 640.0}; }

CropSpec CropSpec::garg() { return {CropKind::garg, 0.40810811, 0.99189189, 0.03594771, 0.96405229}; }

CropSpec CropSpec::parse(const std::string& name) {
  if (name == "none") return none();
  if (name == "eigen") return eigen();
  if (name == "garg") return garg();
  throw ConfigError("unknown crop '" + name + "' (expected none, eigen or garg)");
}

void CropSpec::validate() const {
  if (!(top >= 0.0 && top < bottom && bottom <= 1.0 && left >= 0.0 && left < right && right <= 1.0)) {
    throw ContractError("crop: fractions must satisfy 0 <= start < end <= 1");
  }
}

std::string to_string(CropKind kind) {
  switch (kind) {
    case CropKind::none: return "none";
    case CropKind::eigen: return "eigen";
    case CropKind::garg: return "garg";
  }
  return "none";
}

PixelRect crop_rect(const CropSpec& crop, std::size_t height, std::size_t width) {
  crop.validate();
  const double h = static_cast<double>(height), w = static_cast<double>(width);
  PixelRect r;
  r.y0 = static_cast<std::size_t>(std::floor(crop.top * h));
  r.y1 = std::min(height, static_cast<std::size_t>(std::ceil(crop.bottom * h)));
  r.x0 = static_cast<std::size_t>(std::floor(crop.left * w));
  r.x1 = std::min(width, static_cast<std::size_t>(std::ceil(crop.right * w)));
  if (r.y1 <= r.y0 || r.x1 <= r.x0) throw ContractError("crop: region is empty for this image size");
  return r;
}

DepthMap apply_crop(const DepthMap& map, const CropSpec& crop) {
  if (crop.kind == CropKind::none && crop.top == 0.0 && crop.bottom == 1.0 && crop.left == 0.0 && crop.right == 1.0) {
    return map;
  }
  const PixelRect r = crop_rect(crop, map.height, map.width);
  DepthMap out(r.y1 - r.y0, r.x1 - r.x0);
  for (std::size_t y = r.y0; y < r.y1; ++y) {
    for (std::size_t x = r.x0; x < r.x1; ++x) {
      const std::size_t o = (y - r.y0) * out.width + (x - r.x0);
      out.depth[o] = map.at(y, x);
      out.valid[o] = map.valid[y * map.width + x];
    }
  }
  return out;
}

MetricsRecord compute_metrics(const DepthMap& pred, const DepthMap& gt, const CropSpec& crop, double min_depth,
                              double max_depth) {
  if (pred.height != gt.height || pred.width != gt.width) {
    throw DimensionError("compute_metrics: prediction " + std::to_string(pred.height) + "x" +
                         std::to_string(pred.width) + " vs gt " + std::to_string(gt.height) + "x" +
                         std::to_string(gt.width));
  }
  const DepthMap p = apply_crop(pred, crop);
  const DepthMap g = apply_crop(gt, crop);
  const double t1 = 1.25, t2 = t1 * t1, t3 = t2 * t1;
  double abs_rel = 0, sq_rel = 0, sq = 0, log10 = 0;
  std::size_t n = 0, d1 = 0, d2 = 0, d3 = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double gi = g.depth[i];
    if (!g.valid[i] || !(gi > 0.0) || gi < min_depth || gi > max_depth) continue;
    const double di = p.depth[i];
    const double diff = di - gi;
    abs_rel += std::abs(diff) / gi;
    sq_rel += diff * diff / gi;
    sq += diff * diff;
    log10 += std::abs(std::log10(di) - std::log10(gi));
    const double ratio = std::max(di / gi, gi / di);
    d1 += ratio < t1;
    d2 += ratio < t2;
    d3 += ratio < t3;
    ++n;
  }
  if (n == 0) throw EmptyMaskError("compute_metrics: no valid ground-truth pixel in the evaluated region");
  const double nn = static_cast<double>(n);
  MetricsRecord r;
  r.abs_rel = abs_rel / nn;
  r.sq_rel = sq_rel / nn;
  r.rmse = std::sqrt(sq / nn);
  r.log10 = log10 / nn;
  r.delta1 = static_cast<double>(d1) / nn;
  r.delta2 = static_cast<double>(d2) / nn;
  r.delta3 = static_cast<double>(d3) / nn;
  r.t = n;
  return r;
}

MetricsRecord aggregate_metrics(const std::vector<MetricsRecord>& records) {
  MetricsRecord out;
  if (records.empty()) return out;
  for (const auto& r : records) {
    out.abs_rel += r.abs_rel;
    out.sq_rel += r.sq_rel;
    out.rmse += r.rmse;
    out.log10 += r.log10;
    out.delta1 += r.delta1;
    out.delta2 += r.delta2;
    out.delta3 += r.delta3;
    out.t += r.t;
  }
  const double n = static_cast<double>(records.size());
  out.abs_rel /= n;
  out.sq_rel /= n;
  out.rmse /= n;
  out.log10 /= n;
  out.delta1 /= n;
  out.delta2 /= n;
  out.delta3 /= n;
  return out;
}

std::string metrics_csv_header() { return "frame_id,abs_rel,sq_rel,rmse,log10,d1,d2,d3,t"; }

std::string metrics_csv_row(const std::string& frame_id, const MetricsRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%zu", r.abs_rel, r.sq_rel, r.rmse, r.log10,
                r.delta1, r.delta2, r.delta3, r.t);
  return frame_id + "," + buf;
}

}  // namespace md
