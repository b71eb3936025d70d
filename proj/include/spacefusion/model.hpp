#pragma once

#include <cstdint>
#include <vector>

#include "spacefusion/corpus.hpp"
#include "spacefusion/gru.hpp"
#include "spacefusion/params.hpp"
#include "spacefusion/rng.hpp"
#include "spacefusion/tape.hpp"
#include "spacefusion/tensor.hpp"

namespace spacefusion {

struct ModelConfig {
    std::size_t hidden_size = 128;
    std::size_t embedding_dim = 128;
    std::size_t num_layers = 2;
    double noise_sigma = 0.1;
    double alpha = 1.0;
    double beta = 30.0;
    double clip_distance = 0.3;
    double radius = 1.5;
    std::size_t vocab_size = 0;
    bool regularization_enabled = true;  // off = multi-task ablation
    std::uint64_t seed = 0;

    // The latent space is the encoder's top hidden state, no projection.
    std::size_t latent_dim() const { return hidden_size; }
    void validate() const;
};

// Frozen row lookup; throws DataError on out-of-range ids.
Tensor embed(const Tensor& table, const std::vector<int>& ids);

// (1/|y|) sum of masked per-step log softmax picks, |y| = unmasked count.
double sequence_log_prob(const Tensor& logits, const std::vector<int>& targets,
                         const std::vector<bool>& mask);

// (1-u) * z_from + u * z_to; u outside [0,1] is a domain error.
Tensor interpolate(const Tensor& z_from, const Tensor& z_to, double u);

// sqrt(mean of squared differences); dimension mismatch is an error.
double rms_distance(const Tensor& a, const Tensor& b);

// Fusion regularizer over n x H batches, n >= 2. Mirrors Tape::fuse_loss.
double loss_fuse(const Tensor& zs, const Tensor& za, double clip);

// Sampled stochastic inputs for one loss evaluation. Holding these fixed
// makes total_loss a deterministic function, which finite-difference checks
// and epoch-comparable validation both need.
struct LossDraws {
    Tensor noise_ctx;       // n x H, already scaled by sigma
    Tensor noise_resp;      // n x H
    std::vector<double> u;  // n, each in [0,1)
};

struct TotalLossResult {
    double total = 0.0;
    double rec_s2s = 0.0;
    double rec_ae = 0.0;
    double interp = 0.0;
    double fuse = 0.0;
};

class SpaceFusionModel {
public:
    explicit SpaceFusionModel(const ModelConfig& cfg);

    const ModelConfig& config() const { return cfg_; }
    ModelConfig& mutable_config() { return cfg_; }
    ParameterSet& params() { return params_; }
    const ParameterSet& params() const { return params_; }

    // Frozen single-row encoders: top-layer final GRU state, plus
    // N(0, sigma^2 I) noise when noise_on. Training turns noise on;
    // inference and diagnostics run noise-free.
    Tensor encode_context(const std::vector<int>& ctx, bool noise_on,
                          Rng& rng) const;
    Tensor encode_response(const std::vector<int>& resp, bool noise_on,
                           Rng& rng) const;

    // z becomes the initial hidden state of every decoder layer.
    struct DecoderState {
        std::vector<Tensor> states;
    };
    DecoderState decoder_init(const Tensor& z) const;
    // Feeds one token, returns logits (1 x V), advances the state.
    Tensor decoder_step(DecoderState& st, int token_id) const;

    // Teacher-forced (1/|y|) log p(target | z); target ends with EOS.
    double decode_mean_log_prob(const Tensor& z, const std::vector<int>& target) const;

    LossDraws sample_draws(std::size_t n, Rng& rng) const;

    // Batched training loss. With backprop, gradients accumulate into the
    // parameter set. Breakdown terms are unweighted; total applies alpha and
    // beta. With regularization off, interp and fuse stay 0 and untouched.
    TotalLossResult total_loss(const Batch& batch, const LossDraws& draws,
                               bool backprop);

    // Batched noise-free encoders used by total_loss and diagnostics.
    Var encode_context_tape(Tape& t, const Batch& batch) const;
    Var encode_response_tape(Tape& t, const Batch& batch) const;

private:
    Var decode_sum_log_prob_tape(Tape& t, Var z, const Batch& batch) const;

    ModelConfig cfg_;
    ParameterSet params_;
    Parameter* ctx_embed_ = nullptr;
    Parameter* resp_embed_ = nullptr;
    Parameter* dec_embed_ = nullptr;
    GruStack enc_ctx_;
    GruStack enc_resp_;
    GruStack dec_;
    Parameter* proj_w_ = nullptr;
    Parameter* proj_b_ = nullptr;
};

}  // namespace spacefusion
