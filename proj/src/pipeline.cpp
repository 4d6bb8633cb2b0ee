#include "advs/pipeline.hpp"

#include <string>

namespace advs {

void Pipeline::validate() const {
    if (!ens.assembled()) throw Error("pipeline: ensemble is not assembled");
    for (std::size_t c = 0; c < ens.size(); ++c) {
        const Network& ch = ens.channels[c];
        if (cam_layer >= ch.size() || ch.layer(cam_layer).kind != LayerKind::conv)
            throw RangeError("pipeline: cam layer " + std::to_string(cam_layer) + " is not a conv layer in channel " +
                             std::to_string(c));
    }
    if (ae.encoder.empty() || ae.decoder.empty()) throw Error("pipeline: auto-encoder is not built");
}

PipelineOutput defend(const Pipeline& p, const Tensor& image, std::size_t raw_pred, Rng& rng) {
    p.validate();
    check_unit_range(image, "defend input");
    PipelineOutput out;
    out.denoised = denoise(p.ae, image);
    if (p.on_ensemble_input) p.on_ensemble_input(out.denoised);
    SwitchPrediction sp = switch_classify(p.ens, out.denoised, rng);
    out.label = sp.label;
    out.probs = std::move(sp.probs);
    out.heatmap = gradcam(p.ens.channels[sp.channel], p.ens.upper, out.denoised, out.label, p.cam_layer, sp.channel);
    out.suspected_attack = raw_pred != out.label;
    return out;
}

}  // namespace advs
