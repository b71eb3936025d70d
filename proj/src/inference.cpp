#include "spacefusion/inference.hpp"

#include <algorithm>
#include <cmath>

#include "spacefusion/errors.hpp"
#include "spacefusion/io.hpp"

namespace spacefusion {

void RankerConfig::validate() const {
    if (pool_size < 1) throw ConfigError("pool_size must be >= 1");
}

Tensor sample_hypersphere(std::size_t dim, double radius, Rng& rng) {
    if (radius < 0.0) throw ConfigError("radius must be >= 0");
    if (dim == 0) throw ConfigError("dim must be >= 1");
    for (;;) {
        Tensor v = rng.normal_tensor(1, dim, 1.0);
        double norm = 0.0;
        for (double x : v.vec()) norm += x * x;
        norm = std::sqrt(norm);
        if (norm == 0.0) continue;
        for (double& x : v.vec()) x *= radius / norm;
        return v;
    }
}

std::vector<int> greedy_decode(const SpaceFusionModel& model, const Tensor& z,
                               std::size_t max_len) {
    if (max_len < 1) throw ConfigError("max_len must be >= 1");
    SpaceFusionModel::DecoderState st = model.decoder_init(z);
    std::vector<int> out;
    int prev = Vocabulary::kBos;
    for (std::size_t t = 0; t < max_len; ++t) {
        const Tensor logits = model.decoder_step(st, prev);
        std::size_t best = 0;
        for (std::size_t j = 1; j < logits.cols(); ++j)
            if (logits.at(0, j) > logits.at(0, best)) best = j;
        const int tok = static_cast<int>(best);
        out.push_back(tok);
        if (tok == Vocabulary::kEos) break;
        prev = tok;
    }
    return out;
}

namespace {

// Decoded sequences may run out of budget before emitting EOS; hypotheses
// always carry a trailing EOS so downstream consumers need no special case.
Hypothesis make_hypothesis(const SpaceFusionModel& model,
                           std::vector<int> tokens, const Tensor& z_ctx,
                           Tensor r_vec) {
    if (tokens.empty() || tokens.back() != Vocabulary::kEos)
        tokens.push_back(Vocabulary::kEos);
    Hypothesis h;
    h.length = tokens.size() - 1;
    h.mean_log_prob = model.decode_mean_log_prob(z_ctx, tokens);
    h.sum_log_prob = h.mean_log_prob * static_cast<double>(tokens.size());
    h.tokens = std::move(tokens);
    h.r_vec = std::move(r_vec);
    return h;
}

}  // namespace

std::vector<Hypothesis> generate_pool(const SpaceFusionModel& model,
                                      const std::vector<int>& context,
                                      const RankerConfig& cfg, Rng& rng) {
    cfg.validate();
    Rng dummy(0);
    const Tensor z_ctx = model.encode_context(context, false, dummy);
    const double radius = model.config().radius;

    std::vector<Hypothesis> pool;
    for (std::size_t k = 0; k < cfg.pool_size; ++k) {
        Tensor r = sample_hypersphere(model.config().latent_dim(), radius, rng);
        const Tensor z = add(z_ctx, r);
        std::vector<int> tokens = greedy_decode(model, z);
        if (cfg.dedup) {
            bool dup = false;
            if (tokens.empty() || tokens.back() != Vocabulary::kEos)
                tokens.push_back(Vocabulary::kEos);
            for (const Hypothesis& h : pool)
                if (h.tokens == tokens) {
                    dup = true;
                    break;
                }
            if (dup) continue;
        }
        pool.push_back(make_hypothesis(model, std::move(tokens), z_ctx,
                                       std::move(r)));
    }
    return pool;
}

namespace {

bool hyp_order_before(const Hypothesis& a, const Hypothesis& b, double lambda) {
    const double sa = a.sum_log_prob + lambda * static_cast<double>(a.length);
    const double sb = b.sum_log_prob + lambda * static_cast<double>(b.length);
    if (sa != sb) return sa > sb;
    if (a.length != b.length) return a.length < b.length;
    return a.tokens < b.tokens;
}

}  // namespace

Selection select_top(const std::vector<Hypothesis>& pool, std::size_t n,
                     double lambda) {
    if (pool.empty()) throw ConfigError("select_top: empty pool");
    std::vector<const Hypothesis*> sorted;
    sorted.reserve(pool.size());
    for (const Hypothesis& h : pool) sorted.push_back(&h);
    std::stable_sort(sorted.begin(), sorted.end(),
                     [lambda](const Hypothesis* a, const Hypothesis* b) {
                         return hyp_order_before(*a, *b, lambda);
                     });
    Selection sel;
    for (const Hypothesis* h : sorted) {
        if (sel.hypotheses.size() >= n) break;
        bool dup = false;
        for (const Hypothesis& kept : sel.hypotheses)
            if (kept.tokens == h->tokens) {
                dup = true;
                break;
            }
        if (!dup) sel.hypotheses.push_back(*h);
    }
    sel.shortfall = sel.hypotheses.size() < n;
    return sel;
}

double mean_selected_length(
    const std::vector<std::vector<Hypothesis>>& pools,
    const std::vector<std::size_t>& n_refs, double lambda) {
    if (pools.size() != n_refs.size())
        throw ConfigError("mean_selected_length: pools/n_refs mismatch");
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < pools.size(); ++i) {
        const Selection sel = select_top(pools[i], n_refs[i], lambda);
        for (const Hypothesis& h : sel.hypotheses) {
            total += static_cast<double>(h.length);
            ++count;
        }
    }
    if (count == 0) throw ConfigError("mean_selected_length: nothing selected");
    return total / static_cast<double>(count);
}

LambdaTuning tune_lambda(const SpaceFusionModel& model,
                         const std::vector<MultiRefSample>& validation,
                         double target_mean_length, double tolerance,
                         const RankerConfig& cfg, std::uint64_t seed) {
    if (target_mean_length <= 0.0)
        throw ConfigError("tune_lambda: target length must be > 0");
    if (validation.empty())
        throw ConfigError("tune_lambda: empty validation set");

    // Pools do not depend on lambda; generate once per context.
    Rng master(seed);
    std::vector<std::vector<Hypothesis>> pools;
    std::vector<std::size_t> n_refs;
    for (std::size_t i = 0; i < validation.size(); ++i) {
        Rng ctx_rng = master.split(i);
        pools.push_back(generate_pool(model, validation[i].context, cfg, ctx_rng));
        n_refs.push_back(validation[i].responses.size());
    }

    double lo = -2.0, hi = 2.0;
    const double len_lo = mean_selected_length(pools, n_refs, lo);
    const double len_hi = mean_selected_length(pools, n_refs, hi);

    LambdaTuning out;
    if (len_lo >= target_mean_length - tolerance &&
        len_lo <= target_mean_length + tolerance) {
        out = {lo, len_lo, true};
        return out;
    }
    // Mean length is monotone non-decreasing in lambda, so an out-of-range
    // target shows up at the boundary.
    if (len_lo > target_mean_length + tolerance) {
        out = {lo, len_lo, false};
        return out;
    }
    if (len_hi < target_mean_length - tolerance) {
        out = {hi, len_hi, false};
        return out;
    }

    double mid = 0.0, len_mid = 0.0;
    for (int step = 0; step < 40; ++step) {
        mid = 0.5 * (lo + hi);
        len_mid = mean_selected_length(pools, n_refs, mid);
        if (len_mid < target_mean_length)
            lo = mid;
        else
            hi = mid;
        if (std::abs(len_mid - target_mean_length) <= tolerance) break;
    }
    out.lambda = mid;
    out.achieved_mean_length = len_mid;
    out.attained = std::abs(len_mid - target_mean_length) <= tolerance;
    return out;
}

std::string format_generation_line(const std::string& context,
                                   const std::vector<Hypothesis>& hyps,
                                   const Vocabulary& vocab, bool with_scores,
                                   double lambda) {
    std::string line = context;
    line += '\t';
    for (std::size_t i = 0; i < hyps.size(); ++i) {
        if (i) line += '|';
        line += detokenize(hyps[i].tokens, vocab);
        if (with_scores) {
            const double score = hyps[i].sum_log_prob +
                                 lambda * static_cast<double>(hyps[i].length);
            line += '^';
            line += format_double(score);
        }
    }
    return line;
}

}  // namespace spacefusion
