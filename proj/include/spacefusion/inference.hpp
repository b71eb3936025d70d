#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spacefusion/corpus.hpp"
#include "spacefusion/model.hpp"

namespace spacefusion {

struct Hypothesis {
    std::vector<int> tokens;     // ends with EOS
    double mean_log_prob = 0.0;  // log p(h|x) / token count (EOS included)
    double sum_log_prob = 0.0;   // total log p(h|x) at the noise-free z_S2S
    std::size_t length = 0;      // tokens before EOS
    Tensor r_vec;                // sampled perturbation that produced it
};

struct RankerConfig {
    double lambda = 0.0;
    std::size_t pool_size = 100;
    double target_mean_length = 0.0;  // used by the tuner only
    bool dedup = true;

    void validate() const;
};

// Uniform draw from the radius-|r| sphere surface: standard Gaussian vector
// normalized to unit length, then scaled. The zero draw (probability zero,
// but finite-state generators make it conceivable) is redrawn.
Tensor sample_hypersphere(std::size_t dim, double radius, Rng& rng);

// Greedy argmax decode from latent z; ties take the lowest token id; stops at
// EOS or after max_len emitted tokens. The returned sequence contains EOS
// only if the decoder emitted one.
std::vector<int> greedy_decode(const SpaceFusionModel& model, const Tensor& z,
                               std::size_t max_len = kMaxContentTokens);

// pool_size perturbed decodes around the noise-free z_S2S(context), each
// scored by its total log-likelihood conditioned on the context alone. Exact
// duplicate sequences are merged when cfg.dedup is set.
std::vector<Hypothesis> generate_pool(const SpaceFusionModel& model,
                                      const std::vector<int>& context,
                                      const RankerConfig& cfg, Rng& rng);

struct Selection {
    std::vector<Hypothesis> hypotheses;
    bool shortfall = false;  // fewer distinct hypotheses than requested
};

// Top n distinct hypotheses by score(h) = sum_log_prob + lambda * length,
// descending; ties prefer the shorter, then lexicographically smaller tokens.
Selection select_top(const std::vector<Hypothesis>& pool, std::size_t n,
                     double lambda);

struct LambdaTuning {
    double lambda = 0.0;
    double achieved_mean_length = 0.0;
    bool attained = false;  // within tolerance of the target
};

// Bisection over lambda in [-2, 2] (40 halvings) driving the mean selected
// hypothesis length to target +- tolerance over the validation contexts.
// Pools are generated once; only the selection is re-run per probe. Returns
// the boundary value with attained=false when the target is out of reach.
LambdaTuning tune_lambda(const SpaceFusionModel& model,
                         const std::vector<MultiRefSample>& validation,
                         double target_mean_length, double tolerance,
                         const RankerConfig& cfg, std::uint64_t seed);

// Mean selected length across contexts for a fixed lambda; exposed for the
// tuner's monotonicity property and reused by tune_lambda itself.
double mean_selected_length(
    const std::vector<std::vector<Hypothesis>>& pools,
    const std::vector<std::size_t>& n_refs, double lambda);

// One line per context: `context TAB hyp_1|hyp_2|...`, hypotheses detokenized;
// `^score` (%.17g of sum_log_prob + lambda*length) appended when with_scores.
std::string format_generation_line(const std::string& context,
                                   const std::vector<Hypothesis>& hyps,
                                   const Vocabulary& vocab, bool with_scores,
                                   double lambda);

}  // namespace spacefusion
