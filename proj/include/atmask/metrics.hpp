// metrics.hpp
// Binary segmentation metrics: Dice, IoU, and the 95th-percentile symmetric
// surface distance (HD95) in millimeters.

#pragma once

#include <array>
#include <vector>

#include "atmask/volume.hpp"

namespace atmask {

/// Prediction/ground-truth pair. Voxels > 0.5 count as positive. Both
/// volumes must share dims and spacing.
struct SegPair {
    Volume3D prediction;
    Volume3D ground_truth;

    void validate() const;  // throws std::invalid_argument
};

struct MetricsReport {
    double dsc = 0.0;
    double iou = 0.0;
    double hd95 = 0.0;       // mm; meaningful only when hd95_defined
    bool hd95_defined = false;
};

/// (2 TP + eps) / (T + P + eps). Empty-empty tends to 1.
double dsc(const SegPair& pair, double eps = 1e-8);

/// (TP + eps) / (T + P - TP + eps).
double iou(const SegPair& pair, double eps = 1e-8);

/// Symmetric 95th-percentile surface distance in mm. Surfaces are positive
/// voxels with at least one 6-neighbor background voxel (out of bounds counts
/// as background). Each directed distance is the nearest-rank 95th percentile
/// of distances from one surface to the nearest voxel of the other; the
/// result is the max of the two directions. Returns false (undefined) if
/// either mask is empty.
bool hd95(const SegPair& pair, double& out_mm);

MetricsReport compute_metrics(const SegPair& pair, double eps = 1e-8);

/// Surface voxels of a binary volume under the 6-connectivity rule above,
/// in axis-0-major index order.
std::vector<std::array<int, 3>> surface_voxels(const Volume3D& v);

}  // namespace atmask
