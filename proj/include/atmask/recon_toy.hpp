// recon_toy.hpp
// Toy masked autoencoder exercising the masked-reconstruction objective end
// to end. Each non-overlapping cubic patch is flattened, passed through an
// affine-ReLU-affine bottleneck, and reassembled; masked patches are
// replaced at the input by a learned mask token (or zeros, matching the
// literal I (1-M) form, behind a config switch). Gradients are analytic.

#pragma once

#include <cstdint>
#include <vector>

#include "atmask/mask_gen.hpp"
#include "atmask/texture_map.hpp"
#include "atmask/volume.hpp"

namespace atmask {

enum class MaskedInput { mask_token, zeros };
enum class Optimizer { sgd, adamw_like };

/// Weights are float32; forward/backward accumulate in double. Layouts:
/// enc_w is patch_voxels x embed_dim row-major (enc_w[p * E + e]), dec_w is
/// embed_dim x patch_voxels row-major (dec_w[e * P + p]).
struct ToyMaeModel {
    int patch_size = 16;
    int embed_dim = 0;
    std::vector<float> enc_w;
    std::vector<float> enc_b;
    std::vector<float> dec_w;
    std::vector<float> dec_b;
    std::vector<float> mask_token;
    MaskedInput masked_input = MaskedInput::mask_token;

    std::int64_t patch_voxels() const {
        return static_cast<std::int64_t>(patch_size) * patch_size * patch_size;
    }
    void validate() const;  // shape consistency and finiteness
};

/// Fresh model with weights drawn uniformly from [-1/sqrt(fan_in),
/// +1/sqrt(fan_in)] off a single SplitMix64 stream seeded with `seed`.
/// Draw order: enc_w, enc_b, dec_w, dec_b, mask_token, each in index order.
/// fan_in is patch_voxels for enc_w, enc_b and mask_token, embed_dim for
/// dec_w and dec_b.
ToyMaeModel init_toy_model(int patch_size, int embed_dim, std::uint64_t seed,
                           MaskedInput masked_input = MaskedInput::mask_token);

/// All four volumes share dims. input is the masked volume I_m; the mask is
/// patch-aligned and each patch's masked state is read from its corner voxel.
struct ReconBatch {
    Volume3D input;
    Volume3D target;
    Volume3D mask;
    Volume3D prediction;
};

struct AdamWParams {
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float weight_decay = 0.05f;  // applied to enc_w/dec_w only
    float eps = 1e-8f;
};

struct TrainConfig {
    float learning_rate = 1e-2f;
    int steps = 0;
    Optimizer optimizer = Optimizer::sgd;
    AdamWParams adamw;
    float loss_eps = 1e-8f;
    MaskedInput masked_input = MaskedInput::mask_token;
    int embed_dim = 64;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Gradients of masked_mse(forward(...)) with respect to every weight,
/// accumulated in double, plus the loss itself.
struct ToyMaeGrads {
    std::vector<double> enc_w;
    std::vector<double> enc_b;
    std::vector<double> dec_w;
    std::vector<double> dec_b;
    std::vector<double> mask_token;
    double loss = 0.0;
};

struct PretrainResult {
    ToyMaeModel model;
    std::vector<double> trace;  // pre-update loss per step
};

/// Reconstruct every patch independently. Masked patches enter as the mask
/// token (or zeros). The batch's input dims must be divisible by the model's
/// patch_size on every axis.
Volume3D forward(const ToyMaeModel& model, const ReconBatch& batch);

/// L = sum_i M_i (pred_i - target_i)^2 / (sum_i M_i + eps). All-zero mask
/// gives 0; accumulation is double in index order.
double masked_mse(const Volume3D& prediction, const Volume3D& target, const Volume3D& mask,
                  double eps = 1e-8);

/// Exact analytic gradients of masked_mse composed with forward; recomputes
/// the forward pass internally. ReLU subgradient at 0 is 0. In mask_token
/// mode the input gradient of masked patches flows into the token.
ToyMaeGrads backward(const ToyMaeModel& model, const ReconBatch& batch, double eps = 1e-8);

/// Pretraining loop: per volume, the variation map and patch scores are
/// computed once; each step draws a fresh mask (seed split from
/// train_cfg.seed and the step index; mask_cfg.seed is not used), runs
/// forward/backward on volumes[step % n], records the pre-update loss, and
/// applies the optimizer. Model init uses the stream split at index 0,
/// step t's mask the stream split at 1 + t. A non-finite loss aborts with
/// the step index.
PretrainResult pretrain_toy(const std::vector<Volume3D>& volumes, const TvmConfig& tvm_cfg,
                            const MaskConfig& mask_cfg, const TrainConfig& train_cfg);

}  // namespace atmask
