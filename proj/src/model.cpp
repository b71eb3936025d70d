#include "spacefusion/model.hpp"

#include <algorithm>
#include <cmath>

#include "spacefusion/errors.hpp"

namespace spacefusion {

void ModelConfig::validate() const {
    if (hidden_size == 0 || embedding_dim == 0 || num_layers == 0)
        throw ConfigError("model dimensions must be positive");
    if (vocab_size < 4) throw ConfigError("vocab_size must be >= 4");
    if (noise_sigma < 0 || alpha < 0 || beta < 0 || clip_distance < 0 ||
        radius < 0)
        throw ConfigError("alpha, beta, sigma, clip, radius must be >= 0");
}

Tensor embed(const Tensor& table, const std::vector<int>& ids) {
    Tensor out(ids.size(), table.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= table.rows())
            throw DataError("embed: id out of range: " + std::to_string(ids[i]));
        for (std::size_t j = 0; j < table.cols(); ++j)
            out.at(i, j) = table.at(static_cast<std::size_t>(ids[i]), j);
    }
    return out;
}

double sequence_log_prob(const Tensor& logits, const std::vector<int>& targets,
                         const std::vector<bool>& mask) {
    if (targets.size() != logits.rows() || mask.size() != logits.rows())
        throw ConfigError("sequence_log_prob: length mismatch");
    double total = 0.0;
    std::size_t words = 0;
    for (std::size_t t = 0; t < logits.rows(); ++t) {
        if (!mask[t]) continue;
        const int y = targets[t];
        if (y < 0 || static_cast<std::size_t>(y) >= logits.cols())
            throw DataError("sequence_log_prob: target out of range");
        double mx = logits.at(t, 0);
        for (std::size_t j = 1; j < logits.cols(); ++j)
            mx = std::max(mx, logits.at(t, j));
        double se = 0.0;
        for (std::size_t j = 0; j < logits.cols(); ++j)
            se += std::exp(logits.at(t, j) - mx);
        total += logits.at(t, static_cast<std::size_t>(y)) - (mx + std::log(se));
        ++words;
    }
    if (words == 0) throw NumericError("sequence_log_prob: all steps masked");
    return total / static_cast<double>(words);
}

Tensor interpolate(const Tensor& z_from, const Tensor& z_to, double u) {
    if (u < 0.0 || u > 1.0)
        throw ConfigError("interpolate: u must lie in [0,1]");
    if (!z_from.same_shape(z_to))
        throw ConfigError("interpolate: shape mismatch");
    if (u == 0.0) return z_from;
    if (u == 1.0) return z_to;
    Tensor out = z_from;
    for (std::size_t i = 0; i < out.size(); ++i)
        out.vec()[i] = (1.0 - u) * z_from.vec()[i] + u * z_to.vec()[i];
    return out;
}

double rms_distance(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw ConfigError("rms_distance: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.vec()[i] - b.vec()[i];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(a.size()));
}

double loss_fuse(const Tensor& zs, const Tensor& za, double clip) {
    if (!zs.same_shape(za)) throw ConfigError("loss_fuse: shape mismatch");
    if (zs.rows() < 2) throw ConfigError("loss_fuse: batch size must be >= 2");
    Tape t;
    return t.fuse_loss(t.constant(zs), t.constant(za), clip).value().at(0, 0);
}

SpaceFusionModel::SpaceFusionModel(const ModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(cfg_.seed);
    const std::size_t v = cfg_.vocab_size;
    const std::size_t e = cfg_.embedding_dim;
    const std::size_t h = cfg_.hidden_size;
    ctx_embed_ = &params_.create("ctx_embed", v, e);
    resp_embed_ = &params_.create("resp_embed", v, e);
    dec_embed_ = &params_.create("dec_embed", v, e);
    init_uniform(*ctx_embed_, rng);
    init_uniform(*resp_embed_, rng);
    init_uniform(*dec_embed_, rng);
    enc_ctx_.init(params_, "enc_ctx", e, h, cfg_.num_layers, rng);
    enc_resp_.init(params_, "enc_resp", e, h, cfg_.num_layers, rng);
    dec_.init(params_, "dec", e, h, cfg_.num_layers, rng);
    proj_w_ = &params_.create("proj.W", h, v);
    proj_b_ = &params_.create("proj.b", 1, v);
    init_uniform(*proj_w_, rng);
}

static Tensor encode_row(const GruStack& stack, const Parameter& table,
                         const std::vector<int>& ids, std::size_t h) {
    std::vector<Tensor> states(stack.layers.size(), Tensor(1, h));
    for (int id : ids) {
        const Tensor x = embed(table.value, {id});
        stack.step(x, states);
    }
    return states.back();
}

Tensor SpaceFusionModel::encode_context(const std::vector<int>& ctx,
                                        bool noise_on, Rng& rng) const {
    if (ctx.empty()) throw DataError("encode_context: empty sequence");
    Tensor z = encode_row(enc_ctx_, *ctx_embed_, ctx, cfg_.hidden_size);
    if (noise_on && cfg_.noise_sigma > 0.0) {
        Tensor eps = rng.normal_tensor(1, cfg_.hidden_size, cfg_.noise_sigma);
        z = add(z, eps);
    }
    return z;
}

Tensor SpaceFusionModel::encode_response(const std::vector<int>& resp,
                                         bool noise_on, Rng& rng) const {
    if (resp.empty()) throw DataError("encode_response: empty sequence");
    Tensor z = encode_row(enc_resp_, *resp_embed_, resp, cfg_.hidden_size);
    if (noise_on && cfg_.noise_sigma > 0.0) {
        Tensor eps = rng.normal_tensor(1, cfg_.hidden_size, cfg_.noise_sigma);
        z = add(z, eps);
    }
    return z;
}

SpaceFusionModel::DecoderState SpaceFusionModel::decoder_init(
    const Tensor& z) const {
    if (z.rows() != 1 || z.cols() != cfg_.hidden_size)
        throw ConfigError("decoder_init: z must be 1 x hidden");
    DecoderState st;
    st.states.assign(cfg_.num_layers, z);
    return st;
}

Tensor SpaceFusionModel::decoder_step(DecoderState& st, int token_id) const {
    const Tensor x = embed(dec_embed_->value, {token_id});
    const Tensor top = dec_.step(x, st.states);
    return add_row(matmul(top, proj_w_->value), proj_b_->value);
}

double SpaceFusionModel::decode_mean_log_prob(
    const Tensor& z, const std::vector<int>& target) const {
    if (target.empty() || target.back() != Vocabulary::kEos)
        throw DataError("decode_mean_log_prob: target must end with EOS");
    DecoderState st = decoder_init(z);
    Tensor logits(target.size(), cfg_.vocab_size);
    int prev = Vocabulary::kBos;
    for (std::size_t t = 0; t < target.size(); ++t) {
        const Tensor row = decoder_step(st, prev);
        for (std::size_t j = 0; j < cfg_.vocab_size; ++j)
            logits.at(t, j) = row.at(0, j);
        prev = target[t];
    }
    return sequence_log_prob(logits, target,
                             std::vector<bool>(target.size(), true));
}

LossDraws SpaceFusionModel::sample_draws(std::size_t n, Rng& rng) const {
    LossDraws d;
    d.noise_ctx = rng.normal_tensor(n, cfg_.hidden_size, cfg_.noise_sigma);
    d.noise_resp = rng.normal_tensor(n, cfg_.hidden_size, cfg_.noise_sigma);
    d.u.resize(n);
    for (double& x : d.u) x = rng.uniform01();
    return d;
}

namespace {

bool all_ones(const std::vector<double>& w) {
    return std::all_of(w.begin(), w.end(), [](double x) { return x == 1.0; });
}

// Masked state update: rows still inside their sequence take the new state,
// finished rows keep the old one.
Var masked_update(Tape& t, Var h_new, Var h_old,
                  const std::vector<double>& mask) {
    if (all_ones(mask)) return h_new;
    std::vector<double> inv(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) inv[i] = 1.0 - mask[i];
    return t.add(t.scale_rows(h_new, mask), t.scale_rows(h_old, inv));
}

}  // namespace

Var SpaceFusionModel::encode_context_tape(Tape& t, const Batch& batch) const {
    const std::size_t h = cfg_.hidden_size;
    Var table = t.leaf(*ctx_embed_);
    std::vector<Var> states(cfg_.num_layers, t.constant(Tensor(batch.n, h)));
    for (std::size_t step = 0; step < batch.t_ctx; ++step) {
        std::vector<int> ids(batch.n);
        std::vector<double> mask(batch.n);
        for (std::size_t i = 0; i < batch.n; ++i) {
            ids[i] = batch.ctx_at(i, step);
            mask[i] = step < batch.ctx_len[i] ? 1.0 : 0.0;
        }
        Var x = t.embed_rows(table, ids);
        std::vector<Var> prev = states;
        enc_ctx_.step(t, x, states);
        for (std::size_t l = 0; l < states.size(); ++l)
            states[l] = masked_update(t, states[l], prev[l], mask);
    }
    return states.back();
}

Var SpaceFusionModel::encode_response_tape(Tape& t, const Batch& batch) const {
    const std::size_t h = cfg_.hidden_size;
    Var table = t.leaf(*resp_embed_);
    std::vector<Var> states(cfg_.num_layers, t.constant(Tensor(batch.n, h)));
    for (std::size_t step = 0; step < batch.t_resp; ++step) {
        std::vector<int> ids(batch.n);
        std::vector<double> mask(batch.n);
        for (std::size_t i = 0; i < batch.n; ++i) {
            ids[i] = batch.resp_at(i, step);
            mask[i] = step < batch.resp_len[i] ? 1.0 : 0.0;
        }
        Var x = t.embed_rows(table, ids);
        std::vector<Var> prev = states;
        enc_resp_.step(t, x, states);
        for (std::size_t l = 0; l < states.size(); ++l)
            states[l] = masked_update(t, states[l], prev[l], mask);
    }
    return states.back();
}

// Teacher-forced decode of the whole batch from latent z (n x H); returns the
// n x 1 column of per-row summed log probs over unpadded steps.
Var SpaceFusionModel::decode_sum_log_prob_tape(Tape& t, Var z,
                                               const Batch& batch) const {
    Var table = t.leaf(*dec_embed_);
    Var w = t.leaf(*proj_w_);
    Var b = t.leaf(*proj_b_);
    std::vector<Var> states(cfg_.num_layers, z);
    Var acc = t.constant(Tensor(batch.n, 1));
    for (std::size_t step = 0; step < batch.t_resp; ++step) {
        std::vector<int> inputs(batch.n), targets(batch.n);
        std::vector<double> mask(batch.n);
        for (std::size_t i = 0; i < batch.n; ++i) {
            inputs[i] = step == 0 ? Vocabulary::kBos
                                  : batch.resp_at(i, step - 1);
            targets[i] = batch.resp_at(i, step);
            mask[i] = step < batch.resp_len[i] ? 1.0 : 0.0;
        }
        Var x = t.embed_rows(table, inputs);
        Var top = dec_.step(t, x, states);
        Var logits = t.add_row(t.matmul(top, w), b);
        Var lp = t.pick_log_softmax(logits, targets);
        if (!all_ones(mask)) lp = t.scale_rows(lp, mask);
        acc = t.add(acc, lp);
    }
    return acc;
}

TotalLossResult SpaceFusionModel::total_loss(const Batch& batch,
                                             const LossDraws& draws,
                                             bool backprop) {
    if (batch.n < 2) throw ConfigError("total_loss: batch size must be >= 2");
    if (draws.noise_ctx.rows() != batch.n || draws.noise_resp.rows() != batch.n ||
        draws.u.size() != batch.n)
        throw ConfigError("total_loss: draws do not match batch size");

    Tape t;
    Var zs = t.add(encode_context_tape(t, batch), t.constant(draws.noise_ctx));
    Var za = t.add(encode_response_tape(t, batch), t.constant(draws.noise_resp));

    // Per-row weight -1/(n |y_i|) turns summed log prob into the batch mean
    // of -(1/|y|) log p(y|z).
    std::vector<double> w(batch.n);
    for (std::size_t i = 0; i < batch.n; ++i)
        w[i] = -1.0 / (static_cast<double>(batch.n) *
                       static_cast<double>(batch.resp_len[i]));

    Var rec_s2s = t.weighted_sum(decode_sum_log_prob_tape(t, zs, batch), w);
    Var rec_ae = t.weighted_sum(decode_sum_log_prob_tape(t, za, batch), w);

    TotalLossResult r;
    Var total{};
    if (cfg_.regularization_enabled) {
        std::vector<double> uw = draws.u;
        std::vector<double> inv(uw.size());
        for (std::size_t i = 0; i < uw.size(); ++i) inv[i] = 1.0 - uw[i];
        Var zi = t.add(t.scale_rows(zs, inv), t.scale_rows(za, uw));
        Var interp = t.weighted_sum(decode_sum_log_prob_tape(t, zi, batch), w);
        Var fuse = t.fuse_loss(zs, za, cfg_.clip_distance);
        total = t.lin_comb({rec_s2s, rec_ae, interp, fuse},
                           {1.0, 1.0, cfg_.alpha, cfg_.beta});
        r.interp = interp.value().at(0, 0);
        r.fuse = fuse.value().at(0, 0);
    } else {
        total = t.lin_comb({rec_s2s, rec_ae}, {1.0, 1.0});
    }
    r.rec_s2s = rec_s2s.value().at(0, 0);
    r.rec_ae = rec_ae.value().at(0, 0);
    r.total = total.value().at(0, 0);
    if (backprop) t.backward(total);
    return r;
}

}  // namespace spacefusion
