#pragma once

#include <string>
#include <vector>

#include "md/camera.hpp"

namespace md {

struct ReprojectOptions {
  /// Sources whose 4-neighbourhood holds a relative depth jump above this are
  /// not splatted. Non-positive disables the filter.
  double edge_threshold = 0.05;
};

/// Forward-splats frame t+1 depths into frame t. pose maps camera t into
/// camera t+1. Nearest pixel, nearest depth wins; unreached pixels are invalid.
DepthMap reproject_depth(const DepthMap& d_next, const Pose& pose, const Intrinsics& k,
                         const ReprojectOptions& options = {});

struct InconsistencyResult {
  DepthMap map;  // per-pixel |a - b| / |a + b| on the joint mask
  double mean = 0.0;
  std::size_t count = 0;
};

/// Throws EmptyMaskError when the two maps share no valid positive pixel.
InconsistencyResult temporal_inconsistency(const DepthMap& d_hat, const DepthMap& d);

struct ConsistencyRow {
  std::size_t frame = 0;
  std::size_t neighbor = 0;
  double incons_model = 0.0;   // reprojected prediction vs prediction
  double incons_gt = 0.0;      // reprojected prediction vs ground truth
  double incons_random = 0.0;  // reprojected baseline prediction vs ground truth
};

/// For every frame t and neighbour n with 1 <= |n - t| <= window, reprojects
/// the neighbour's map into t. Only frames of the same scene pair up; pairs
/// without overlap are skipped.
std::vector<ConsistencyRow> sequence_consistency(const std::vector<Frame>& frames,
                                                 const std::vector<DepthMap>& predictions,
                                                 const std::vector<DepthMap>& baseline, std::size_t window,
                                                 const ReprojectOptions& options = {});

std::string consistency_csv(const std::vector<ConsistencyRow>& rows);

/// Lower middle element for even counts.
double lower_median(std::vector<float> values);

struct ContinuityPair {
  ObjectClass label = ObjectClass::car;
  double median_depth = 0.0;
  double object_height = 0.0;
  std::size_t frame_id = 0;
  std::size_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

struct ContinuityResult {
  std::vector<ContinuityPair> pairs;  // sorted by class, then frame and rectangle
  std::size_t skipped = 0;            // empty boxes or boxes without a valid pixel
};

/// Median predicted depth inside each box, paired with the labelled height.
ContinuityResult continuity_pairs(const std::vector<DepthMap>& predictions, const std::vector<BBox>& boxes);

std::string continuity_csv(const ContinuityResult& result);

}  // namespace md
