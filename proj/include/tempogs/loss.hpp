#pragma once

#include "tempogs/confidence.hpp"
#include "tempogs/image.hpp"
#include "tempogs/ssim.hpp"

namespace tempogs {

struct LossSettings {
    double ssim_weight = 0.2;  // lambda on the (1 - patch SSIM) term
    bool literal_eq2 = false;  // per-pixel L1 sum and unit SSIM weight
    SsimSettings ssim;
};

struct LossResult {
    double value = 0.0;
    Image gradient;  // dL/d(rendered)
};

// Confidence-weighted photometric loss over the patch grid:
//   L = sum_p c_p [ mean_{k in p} |render_k - target_k| + lambda (1 - SSIM_p) ]
// with patch SSIM taken as the windowed SSIM map averaged over the patch.
// literal_eq2 switches the L1 term to the per-pixel (per-channel) sum and the
// SSIM weight to 1.
LossResult loss_init(const Image& rendered, const Image& target, const ConfidenceMap& confidence,
                     const LossSettings& settings = {});

}  // namespace tempogs
