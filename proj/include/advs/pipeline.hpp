#pragma once

#include <functional>

#include "advs/autoencoder.hpp"
#include "advs/gradcam.hpp"
#include "advs/switch_ensemble.hpp"

namespace advs {

struct Pipeline {
    AutoEncoder ae;
    SwitchEnsemble ens;
    std::size_t cam_layer = kClassifierCamLayer;
    /// Observes the exact tensor handed to the ensemble. Testing aid.
    std::function<void(const Tensor&)> on_ensemble_input;

    /// cam_layer must be a conv layer of every channel.
    void validate() const;
};

struct PipelineOutput {
    std::size_t label = 0;
    Tensor probs;
    CamHeatmap heatmap;
    Tensor denoised;
    bool suspected_attack = false;
};

/// Auto-encoder, then block switching, then Grad-CAM on the channel that was
/// drawn. suspected_attack flags a disagreement with `raw_pred`.
PipelineOutput defend(const Pipeline& p, const Tensor& image, std::size_t raw_pred, Rng& rng);

}  // namespace advs
