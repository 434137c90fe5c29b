#pragma once

#include <span>

#include "hybridmap/renderer.hpp"
#include "hybridmap/tape.hpp"

namespace hybridmap {

struct LossWeights {
  double sdf = 1.0;
  double fs = 1.0;
  double depth = 0.1;
  double rgb = 5.0;
};

template <typename S>
struct LossValues {
  S fs = S(0);
  S sdf = S(0);
  S depth = S(0);
  S rgb = S(0);
  S total = S(0);
};

/// Records the training losses on a rendered ray batch.
///
/// Per ray with valid ground-truth depth:
///  - free-space samples (d_j < D_gt - tr) pull the predicted SDF to +tr,
///  - truncation samples (|D_gt - d_j| <= tr) pull it to D_gt - d_j,
/// both as per-ray means of squared errors. Depth is mean |D - D_gt| and
/// color the mean per-channel L1 error, over non-degenerate rays. Each term
/// averages over the rays that contribute to it; degenerate rays are
/// excluded from every term. The total is the weighted sum.
///
/// Throws InputError on an empty batch.
template <typename S>
LossValues<S> record_losses(GradientTape<S>& tape, const RayBatch& batch,
                            typename GradientTape<S>::BufferId sdf,
                            const CompositeBuffers<S>& rendered, S tr, const LossWeights& weights);

}  // namespace hybridmap
