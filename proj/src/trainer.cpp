#include "spacefusion/trainer.hpp"

#include <bit>
#include <cmath>
#include <filesystem>

#include "spacefusion/errors.hpp"
#include "spacefusion/io.hpp"

namespace spacefusion {

void TrainConfig::validate() const {
    if (learning_rate <= 0.0) throw ConfigError("learning_rate must be > 0");
    if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
    if (patience < 1) throw ConfigError("patience must be >= 1");
    if (spike_threshold <= 0.0) throw ConfigError("spike_threshold must be > 0");
    if (max_epochs > 0 && patience > max_epochs)
        throw ConfigError("patience must not exceed max_epochs");
}

namespace {

void check_spike(const TotalLossResult& r, const TrainConfig& tc,
                 std::size_t epoch, const char* phase) {
    if (!std::isfinite(r.total) || std::abs(r.total) > tc.spike_threshold)
        throw NumericError("loss spike in " + std::string(phase) + " at epoch " +
                           std::to_string(epoch) + ": total = " +
                           format_double(r.total));
}

}  // namespace

TrainResult train(SpaceFusionModel& model,
                  const std::vector<MultiRefSample>& train_samples,
                  const std::vector<MultiRefSample>& valid_samples,
                  const TrainConfig& tc) {
    tc.validate();
    if (train_samples.empty()) throw ConfigError("training corpus is empty");
    if (valid_samples.empty()) throw ConfigError("validation corpus is empty");

    TrainResult result;
    if (tc.max_epochs == 0) return result;

    Rng master(tc.seed);

    // Validation batches and their noise/u draws are fixed for the whole run,
    // so epoch-to-epoch validation differences reflect parameters only.
    const std::uint64_t valid_batch_seed = master.split(1).draw_u64();
    std::vector<Batch> valid_batches = make_batches(
        valid_samples, tc.batch_size, Pairing::kFlatten, valid_batch_seed);
    if (valid_batches.empty())
        throw ConfigError("validation corpus yields no batch of size >= 2");
    Rng valid_draw_rng = master.split(2);
    std::vector<LossDraws> valid_draws;
    for (const Batch& b : valid_batches)
        valid_draws.push_back(model.sample_draws(b.n, valid_draw_rng));

    AdamOptimizer adam(model.params(), tc.learning_rate);

    double best_valid = 0.0;
    std::size_t bad_epochs = 0;
    std::vector<Tensor> best_params;

    for (std::size_t epoch = 1; epoch <= tc.max_epochs; ++epoch) {
        const std::uint64_t batch_seed = master.split(2 * epoch + 1).draw_u64();
        std::vector<Batch> batches = make_batches(
            train_samples, tc.batch_size, Pairing::kFlatten, batch_seed);
        if (batches.empty())
            throw ConfigError("training corpus yields no batch of size >= 2");
        Rng draw_rng = master.split(2 * epoch + 2);

        EpochStats st;
        st.epoch = epoch;
        for (const Batch& b : batches) {
            const LossDraws draws = model.sample_draws(b.n, draw_rng);
            const TotalLossResult r = model.total_loss(b, draws, true);
            check_spike(r, tc, epoch, "training");
            adam.step();
            st.train_total += r.total;
            st.rec_s2s += r.rec_s2s;
            st.rec_ae += r.rec_ae;
            st.interp += r.interp;
            st.fuse += r.fuse;
        }
        const double nb = static_cast<double>(batches.size());
        st.train_total /= nb;
        st.rec_s2s /= nb;
        st.rec_ae /= nb;
        st.interp /= nb;
        st.fuse /= nb;

        double valid_total = 0.0;
        for (std::size_t i = 0; i < valid_batches.size(); ++i) {
            const TotalLossResult r =
                model.total_loss(valid_batches[i], valid_draws[i], false);
            check_spike(r, tc, epoch, "validation");
            valid_total += r.total;
        }
        st.valid_total = valid_total / static_cast<double>(valid_batches.size());
        result.log.push_back(st);

        if (result.best_epoch == 0 || st.valid_total < best_valid) {
            best_valid = st.valid_total;
            result.best_epoch = epoch;
            best_params = model.params().snapshot_values();
            bad_epochs = 0;
        } else {
            ++bad_epochs;
            if (bad_epochs >= tc.patience) break;
        }
    }

    if (result.best_epoch > 0) {
        model.params().restore_values(best_params);
        result.best_valid = best_valid;
    }
    return result;
}

std::string loss_log_csv(const std::vector<EpochStats>& log) {
    std::string out = "epoch,train_total,rec_s2s,rec_ae,interp,fuse,valid_total\n";
    for (const EpochStats& s : log) {
        out += std::to_string(s.epoch);
        out += ',' + format_double(s.train_total);
        out += ',' + format_double(s.rec_s2s);
        out += ',' + format_double(s.rec_ae);
        out += ',' + format_double(s.interp);
        out += ',' + format_double(s.fuse);
        out += ',' + format_double(s.valid_total);
        out += '\n';
    }
    return out;
}

namespace {

constexpr char kFormatKey[] = "format";
constexpr char kFormatVersion[] = "spacefusion-ckpt-v1";
constexpr char kParamsMagic[] = "SFPB";

void append_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void append_f64(std::string& out, double v) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i)
        out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

struct BinReader {
    const std::string& buf;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw DataError("params.bin truncated");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(
                     static_cast<unsigned char>(buf[pos + i]))
                 << (8 * i);
        pos += 4;
        return v;
    }
    double f64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(
                     static_cast<unsigned char>(buf[pos + i]))
                 << (8 * i);
        pos += 8;
        return std::bit_cast<double>(v);
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

std::string serialize_params(const ParameterSet& ps) {
    std::string out = kParamsMagic;
    auto params = ps.all();
    append_u32(out, static_cast<std::uint32_t>(params.size()));
    for (const Parameter* p : params) {
        append_u32(out, static_cast<std::uint32_t>(p->name.size()));
        out += p->name;
        append_u32(out, static_cast<std::uint32_t>(p->value.rows()));
        append_u32(out, static_cast<std::uint32_t>(p->value.cols()));
        for (double v : p->value.vec()) append_f64(out, v);
    }
    return out;
}

std::string serialize_vocab(const Vocabulary& v) {
    std::string out;
    for (const std::string& tok : v.id_to_token) {
        out += tok;
        out += '\n';
    }
    return out;
}

Vocabulary parse_vocab(const std::string& text) {
    Vocabulary v;
    std::string cur;
    for (char ch : text) {
        if (ch == '\n') {
            v.id_to_token.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    if (!cur.empty()) v.id_to_token.push_back(cur);
    static const char* kReserved[] = {"<pad>", "<bos>", "<eos>", "<unk>"};
    if (v.id_to_token.size() < 4)
        throw DataError("vocab.txt: fewer than 4 tokens");
    for (int i = 0; i < 4; ++i)
        if (v.id_to_token[static_cast<std::size_t>(i)] != kReserved[i])
            throw DataError("vocab.txt: reserved token mismatch at id " +
                            std::to_string(i));
    for (std::size_t i = 0; i < v.id_to_token.size(); ++i)
        v.token_to_id[v.id_to_token[i]] = static_cast<int>(i);
    if (v.token_to_id.size() != v.id_to_token.size())
        throw DataError("vocab.txt: duplicate token");
    return v;
}

}  // namespace

void save_checkpoint(const std::string& dir, const SpaceFusionModel& model,
                     const Vocabulary& vocab, const CheckpointMeta& meta) {
    if (model.config().vocab_size != vocab.size())
        throw ConfigError("checkpoint: model vocab_size != vocabulary size");
    std::filesystem::create_directories(dir);

    const std::string params_blob = serialize_params(model.params());
    const std::string vocab_blob = serialize_vocab(vocab);
    write_file(dir + "/params.bin", params_blob);
    write_file(dir + "/vocab.txt", vocab_blob);

    const ModelConfig& mc = model.config();
    KvFile m;
    m.set(kFormatKey, kFormatVersion);
    m.set_uint("hidden_size", mc.hidden_size);
    m.set_uint("embedding_dim", mc.embedding_dim);
    m.set_uint("num_layers", mc.num_layers);
    m.set_double("noise_sigma", mc.noise_sigma);
    m.set_double("alpha", mc.alpha);
    m.set_double("beta", mc.beta);
    m.set_double("clip_distance", mc.clip_distance);
    m.set_double("radius", mc.radius);
    m.set_uint("vocab_size", mc.vocab_size);
    m.set_bool("regularization_enabled", mc.regularization_enabled);
    m.set_uint("model_seed", mc.seed);
    m.set_double("learning_rate", meta.tc.learning_rate);
    m.set_uint("batch_size", meta.tc.batch_size);
    m.set_uint("max_epochs", meta.tc.max_epochs);
    m.set_uint("patience", meta.tc.patience);
    m.set_uint("train_seed", meta.tc.seed);
    m.set_double("spike_threshold", meta.tc.spike_threshold);
    m.set_uint("epoch", meta.epoch);
    m.set_double("valid_loss", meta.valid_loss);
    m.set("vocab_file", "vocab.txt");
    m.set("vocab_hash", fnv1a64_hex(vocab_blob));
    m.set("params_file", "params.bin");
    m.set("params_hash", fnv1a64_hex(params_blob));
    write_file(dir + "/manifest.txt", m.serialize());
}

LoadedCheckpoint load_checkpoint(const std::string& dir) {
    const std::string manifest_path = dir + "/manifest.txt";
    KvFile m = KvFile::load(manifest_path);
    if (m.entries().empty() || m.entries().front().first != kFormatKey ||
        m.entries().front().second != kFormatVersion)
        throw DataError(manifest_path + ": unsupported checkpoint format '" +
                        m.get_or(kFormatKey, "<missing>") + "'");

    const std::string vocab_blob = read_file(dir + "/" + m.get("vocab_file"));
    if (fnv1a64_hex(vocab_blob) != m.get("vocab_hash"))
        throw DataError(dir + ": vocab hash mismatch");
    const std::string params_blob = read_file(dir + "/" + m.get("params_file"));
    if (fnv1a64_hex(params_blob) != m.get("params_hash"))
        throw DataError(dir + ": params hash mismatch");

    Vocabulary vocab = parse_vocab(vocab_blob);

    ModelConfig mc;
    mc.hidden_size = m.get_uint("hidden_size");
    mc.embedding_dim = m.get_uint("embedding_dim");
    mc.num_layers = m.get_uint("num_layers");
    mc.noise_sigma = m.get_double("noise_sigma");
    mc.alpha = m.get_double("alpha");
    mc.beta = m.get_double("beta");
    mc.clip_distance = m.get_double("clip_distance");
    mc.radius = m.get_double("radius");
    mc.vocab_size = m.get_uint("vocab_size");
    mc.regularization_enabled = m.get_bool("regularization_enabled");
    mc.seed = m.get_uint("model_seed");
    if (mc.vocab_size != vocab.size())
        throw DataError(dir + ": manifest vocab_size != vocab.txt size");

    CheckpointMeta meta;
    meta.tc.learning_rate = m.get_double("learning_rate");
    meta.tc.batch_size = m.get_uint("batch_size");
    meta.tc.max_epochs = m.get_uint("max_epochs");
    meta.tc.patience = m.get_uint("patience");
    meta.tc.seed = m.get_uint("train_seed");
    meta.tc.spike_threshold = m.get_double("spike_threshold");
    meta.epoch = m.get_uint("epoch");
    meta.valid_loss = m.get_double("valid_loss");

    SpaceFusionModel model(mc);
    BinReader r{params_blob};
    if (r.bytes(4) != kParamsMagic)
        throw DataError(dir + "/params.bin: bad magic");
    const std::uint32_t count = r.u32();
    if (count != model.params().count())
        throw DataError(dir + "/params.bin: parameter count mismatch");
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::string name = r.bytes(r.u32());
        const std::uint32_t rows = r.u32();
        const std::uint32_t cols = r.u32();
        Parameter* p = model.params().find(name);
        if (!p) throw DataError(dir + "/params.bin: unknown parameter " + name);
        if (p->value.rows() != rows || p->value.cols() != cols)
            throw DataError(dir + "/params.bin: shape mismatch for " + name);
        for (double& v : p->value.vec()) v = r.f64();
    }
    if (r.pos != params_blob.size())
        throw DataError(dir + "/params.bin: trailing bytes");

    return {std::move(model), std::move(vocab), meta};
}

}  // namespace spacefusion
