#pragma once

#include <string>
#include <vector>

#include "md/image.hpp"

namespace md {

struct MetricsRecord {
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double rmse = 0.0;
  double log10 = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
  std::size_t t = 0;
};

enum class CropKind { none, eigen, garg };

/// Fractional region [top, bottom) × [left, right) of the image.
struct CropSpec {
  CropKind kind = CropKind::none;
  double top = 0.0, bottom = 1.0, left = 0.0, right = 1.0;

  static CropSpec none();
  /// Indoor crop: rows 45..471, cols 41..601 of a 480 × 640 frame.
  static CropSpec eigen();
  /// Outdoor crop: (0.40810811, 0.99189189, 0.03594771, 0.96405229).
  static CropSpec garg();
  static CropSpec parse(const std::string& name);

  void validate() const;
};

std::string to_string(CropKind kind);

struct PixelRect {
  std::size_t y0 = 0, y1 = 0, x0 = 0, x1 = 0;
};

/// floor for the start index, ceil for the end index. Throws ContractError if empty.
PixelRect crop_rect(const CropSpec& crop, std::size_t height, std::size_t width);

DepthMap apply_crop(const DepthMap& map, const CropSpec& crop);

/// Metrics over pixels of the crop whose gt is valid, positive, and within
/// [min_depth, max_depth]. Throws EmptyMaskError if none remain.
MetricsRecord compute_metrics(const DepthMap& pred, const DepthMap& gt, const CropSpec& crop, double min_depth,
                              double max_depth);

/// Per-frame mean of each metric; t is the pixel total.
MetricsRecord aggregate_metrics(const std::vector<MetricsRecord>& records);

inline constexpr double kIndoorDepthCap = 10.0;
inline constexpr double kOutdoorDepthCap = 80.0;

std::string metrics_csv_header();
std::string metrics_csv_row(const std::string& frame_id, const MetricsRecord& r);

}  // namespace md
