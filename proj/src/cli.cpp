#include "spacefusion/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <set>

#include "spacefusion/corpus.hpp"
#include "spacefusion/diagnostics.hpp"
#include "spacefusion/errors.hpp"
#include "spacefusion/inference.hpp"
#include "spacefusion/io.hpp"
#include "spacefusion/metrics.hpp"
#include "spacefusion/model.hpp"
#include "spacefusion/trainer.hpp"

namespace spacefusion {

namespace {

// Flag > config file > default. Each subcommand declares its key set; unknown
// keys in a config file are rejected so typos fail loudly instead of
// silently falling back to defaults.
class Resolver {
public:
    Resolver(const KvFile& cfg, const std::set<std::string>& allowed)
        : cfg_(cfg) {
        for (const auto& [k, v] : cfg.entries()) {
            (void)v;
            if (k == "command") continue;
            if (!allowed.count(k))
                throw ConfigError("config file: unknown key '" + k + "'");
        }
    }

    void resolve(const CLI::Option* opt, const std::string& key,
                 std::string& value) {
        if (opt->count() == 0 && cfg_.has(key)) value = cfg_.get(key);
    }
    void resolve(const CLI::Option* opt, const std::string& key,
                 std::uint64_t& value) {
        if (opt->count() == 0 && cfg_.has(key)) value = cfg_.get_uint(key);
    }
    void resolve(const CLI::Option* opt, const std::string& key,
                 std::size_t& value) {
        if (opt->count() == 0 && cfg_.has(key))
            value = static_cast<std::size_t>(cfg_.get_uint(key));
    }
    void resolve(const CLI::Option* opt, const std::string& key,
                 double& value) {
        if (opt->count() == 0 && cfg_.has(key)) value = cfg_.get_double(key);
    }
    void resolve(const CLI::Option* opt, const std::string& key, bool& value) {
        if (opt->count() == 0 && cfg_.has(key)) value = cfg_.get_bool(key);
    }
    bool came_from_config(const CLI::Option* opt, const std::string& key) const {
        return opt->count() == 0 && cfg_.has(key);
    }

private:
    const KvFile& cfg_;
};

KvFile load_config_or_empty(const std::string& path) {
    if (path.empty()) return KvFile();
    return KvFile::load(path);
}

void require_nonexistent(const std::string& path, bool force) {
    if (!force && std::filesystem::exists(path))
        throw DataError(path + " exists; pass --force to overwrite");
}

std::vector<std::string> slice(const std::vector<std::string>& v,
                               std::size_t begin, std::size_t end) {
    return {v.begin() + static_cast<std::ptrdiff_t>(begin),
            v.begin() + static_cast<std::ptrdiff_t>(end)};
}

// ---- synth ----------------------------------------------------------------

struct SynthArgs {
    std::string config_path;
    std::string out_dir;
    std::size_t contexts = 200;
    std::size_t clusters = 3;
    std::uint64_t seed = 0;
    bool force = false;
};

int run_synth(const SynthArgs& a0, const CLI::App& cmd) {
    SynthArgs a = a0;
    KvFile cfg = load_config_or_empty(a.config_path);
    Resolver r(cfg, {"contexts", "clusters", "seed", "out", "force"});
    r.resolve(cmd.get_option("--contexts"), "contexts", a.contexts);
    r.resolve(cmd.get_option("--clusters"), "clusters", a.clusters);
    r.resolve(cmd.get_option("--seed"), "seed", a.seed);
    r.resolve(cmd.get_option("--out"), "out", a.out_dir);
    r.resolve(cmd.get_option("--force"), "force", a.force);
    if (a.out_dir.empty()) throw ConfigError("synth: --out is required");

    // Disjoint topic words per split: one shuffled pool cut 60/20/20.
    const std::vector<std::string>& pool = default_topics();
    Rng topic_rng(a.seed);
    std::vector<std::size_t> perm = topic_rng.permutation(pool.size());
    std::vector<std::string> shuffled;
    shuffled.reserve(pool.size());
    for (std::size_t i : perm) shuffled.push_back(pool[i]);
    const std::size_t n_train = std::max<std::size_t>(1, pool.size() * 6 / 10);
    const std::size_t n_valid =
        std::max<std::size_t>(1, (pool.size() - n_train) / 2);
    if (n_train + n_valid >= pool.size())
        throw ConfigError("synth: topic pool too small to split");

    const std::size_t valid_contexts = std::max<std::size_t>(1, a.contexts / 4);
    const std::size_t test_contexts = valid_contexts;

    struct Split {
        const char* name;
        std::size_t n;
        std::vector<std::string> topics;
    };
    const Split splits[3] = {
        {"train.txt", a.contexts, slice(shuffled, 0, n_train)},
        {"valid.txt", valid_contexts,
         slice(shuffled, n_train, n_train + n_valid)},
        {"test.txt", test_contexts,
         slice(shuffled, n_train + n_valid, shuffled.size())},
    };

    std::filesystem::create_directories(a.out_dir);
    for (const Split& s : splits)
        require_nonexistent(a.out_dir + "/" + s.name, a.force);
    for (const Split& s : splits) {
        const auto samples =
            generate_synthetic_raw(s.n, a.clusters, a.seed, s.topics);
        write_corpus(a.out_dir + "/" + s.name, samples);
    }

    KvFile run;
    run.set("command", "synth");
    run.set_uint("contexts", a.contexts);
    run.set_uint("clusters", a.clusters);
    run.set_uint("seed", a.seed);
    run.set("out", a.out_dir);
    run.set_bool("force", a.force);
    write_file(a.out_dir + "/run.config", run.serialize());
    return 0;
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
    std::string config_path;
    std::string train_path;
    std::string valid_path;
    std::string out_dir;
    bool mtask = false;
    std::size_t vocab_max = 10000;
    ModelConfig mc;
    TrainConfig tc;
    std::uint64_t seed = 0;
};

int run_train(const TrainArgs& a0, const CLI::App& cmd) {
    TrainArgs a = a0;
    KvFile cfg = load_config_or_empty(a.config_path);
    Resolver r(cfg, {"train", "valid", "out", "regularization_enabled",
                     "hidden_size", "embedding_dim", "num_layers",
                     "noise_sigma", "alpha", "beta", "clip_distance", "radius",
                     "vocab_max", "learning_rate", "batch_size", "max_epochs",
                     "patience", "spike_threshold", "seed"});
    r.resolve(cmd.get_option("--train"), "train", a.train_path);
    r.resolve(cmd.get_option("--valid"), "valid", a.valid_path);
    r.resolve(cmd.get_option("--out"), "out", a.out_dir);
    r.resolve(cmd.get_option("--hidden"), "hidden_size", a.mc.hidden_size);
    r.resolve(cmd.get_option("--embedding"), "embedding_dim",
              a.mc.embedding_dim);
    r.resolve(cmd.get_option("--layers"), "num_layers", a.mc.num_layers);
    r.resolve(cmd.get_option("--sigma"), "noise_sigma", a.mc.noise_sigma);
    r.resolve(cmd.get_option("--alpha"), "alpha", a.mc.alpha);
    r.resolve(cmd.get_option("--beta"), "beta", a.mc.beta);
    r.resolve(cmd.get_option("--clip"), "clip_distance", a.mc.clip_distance);
    r.resolve(cmd.get_option("--radius"), "radius", a.mc.radius);
    r.resolve(cmd.get_option("--vocab-max"), "vocab_max", a.vocab_max);
    r.resolve(cmd.get_option("--lr"), "learning_rate", a.tc.learning_rate);
    r.resolve(cmd.get_option("--batch"), "batch_size", a.tc.batch_size);
    r.resolve(cmd.get_option("--epochs"), "max_epochs", a.tc.max_epochs);
    r.resolve(cmd.get_option("--patience"), "patience", a.tc.patience);
    r.resolve(cmd.get_option("--spike-threshold"), "spike_threshold",
              a.tc.spike_threshold);
    r.resolve(cmd.get_option("--seed"), "seed", a.seed);
    bool regularization = !a.mtask;
    r.resolve(cmd.get_option("--mtask"), "regularization_enabled",
              regularization);
    if (a.train_path.empty() || a.valid_path.empty() || a.out_dir.empty())
        throw ConfigError("train: --train, --valid and --out are required");

    const auto train_raw = read_corpus_file(a.train_path);
    if (train_raw.empty()) throw DataError(a.train_path + ": empty corpus");
    const Vocabulary vocab = build_vocab(collect_texts(train_raw), a.vocab_max);
    const auto train_samples = encode_samples(train_raw, vocab);
    const auto valid_samples = load_corpus(a.valid_path, vocab);

    a.mc.vocab_size = vocab.size();
    a.mc.regularization_enabled = regularization;
    a.mc.seed = a.seed;
    a.tc.seed = a.seed;

    SpaceFusionModel model(a.mc);
    const TrainResult result = train(model, train_samples, valid_samples, a.tc);

    CheckpointMeta meta;
    meta.tc = a.tc;
    meta.epoch = result.best_epoch;
    meta.valid_loss = result.best_valid;
    save_checkpoint(a.out_dir, model, vocab, meta);
    write_file(a.out_dir + "/loss_log.csv", loss_log_csv(result.log));

    KvFile run;
    run.set("command", "train");
    run.set("train", a.train_path);
    run.set("valid", a.valid_path);
    run.set("out", a.out_dir);
    run.set_uint("hidden_size", a.mc.hidden_size);
    run.set_uint("embedding_dim", a.mc.embedding_dim);
    run.set_uint("num_layers", a.mc.num_layers);
    run.set_double("noise_sigma", a.mc.noise_sigma);
    run.set_double("alpha", a.mc.alpha);
    run.set_double("beta", a.mc.beta);
    run.set_double("clip_distance", a.mc.clip_distance);
    run.set_double("radius", a.mc.radius);
    run.set_bool("regularization_enabled", regularization);
    run.set_uint("vocab_max", a.vocab_max);
    run.set_double("learning_rate", a.tc.learning_rate);
    run.set_uint("batch_size", a.tc.batch_size);
    run.set_uint("max_epochs", a.tc.max_epochs);
    run.set_uint("patience", a.tc.patience);
    run.set_double("spike_threshold", a.tc.spike_threshold);
    run.set_uint("seed", a.seed);
    write_file(a.out_dir + "/run.config", run.serialize());
    return 0;
}

// ---- generate ---------------------------------------------------------------

struct GenerateArgs {
    std::string config_path;
    std::string ckpt_dir;
    std::string input_path;
    std::string out_path;
    std::size_t pool_size = 100;
    std::size_t n_best = 1;
    double radius = std::numeric_limits<double>::quiet_NaN();  // manifest's
    double lambda = 0.0;
    bool with_scores = false;
    bool dedup = true;
    std::uint64_t seed = 0;
};

int run_generate(const GenerateArgs& a0, const CLI::App& cmd) {
    GenerateArgs a = a0;
    KvFile cfg = load_config_or_empty(a.config_path);
    Resolver r(cfg, {"ckpt", "input", "out", "pool_size", "n_best", "radius",
                     "lambda", "with_scores", "dedup", "seed"});
    r.resolve(cmd.get_option("--ckpt"), "ckpt", a.ckpt_dir);
    r.resolve(cmd.get_option("--input"), "input", a.input_path);
    r.resolve(cmd.get_option("--out"), "out", a.out_path);
    r.resolve(cmd.get_option("--pool"), "pool_size", a.pool_size);
    r.resolve(cmd.get_option("--n"), "n_best", a.n_best);
    r.resolve(cmd.get_option("--radius"), "radius", a.radius);
    r.resolve(cmd.get_option("--lambda"), "lambda", a.lambda);
    r.resolve(cmd.get_option("--with-scores"), "with_scores", a.with_scores);
    r.resolve(cmd.get_option("--dedup"), "dedup", a.dedup);
    r.resolve(cmd.get_option("--seed"), "seed", a.seed);
    if (a.ckpt_dir.empty() || a.input_path.empty() || a.out_path.empty())
        throw ConfigError("generate: --ckpt, --input and --out are required");
    if (a.n_best < 1) throw ConfigError("generate: --n must be >= 1");

    LoadedCheckpoint ckpt = load_checkpoint(a.ckpt_dir);
    if (!std::isnan(a.radius)) ckpt.model.mutable_config().radius = a.radius;

    const auto raw = read_corpus_file(a.input_path);
    RankerConfig rc;
    rc.lambda = a.lambda;
    rc.pool_size = a.pool_size;
    rc.dedup = a.dedup;

    Rng master(a.seed);
    std::string out;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const std::vector<int> ctx = tokenize(raw[i].context, ckpt.vocab);
        Rng ctx_rng = master.split(i);
        const auto pool = generate_pool(ckpt.model, ctx, rc, ctx_rng);
        const Selection sel = select_top(pool, a.n_best, a.lambda);
        out += format_generation_line(raw[i].context, sel.hypotheses,
                                      ckpt.vocab, a.with_scores, a.lambda);
        out += '\n';
    }
    write_file(a.out_path, out);

    KvFile run;
    run.set("command", "generate");
    run.set("ckpt", a.ckpt_dir);
    run.set("input", a.input_path);
    run.set("out", a.out_path);
    run.set_uint("pool_size", a.pool_size);
    run.set_uint("n_best", a.n_best);
    run.set_double("radius", ckpt.model.config().radius);
    run.set_double("lambda", a.lambda);
    run.set_bool("with_scores", a.with_scores);
    run.set_bool("dedup", a.dedup);
    run.set_uint("seed", a.seed);
    write_file(a.out_path + ".config", run.serialize());
    return 0;
}

// ---- eval -------------------------------------------------------------------

struct EvalArgs {
    std::string config_path;
    std::string ckpt_dir;
    std::string test_path;
    std::string valid_path;
    std::string out_path;
    double lambda = std::numeric_limits<double>::quiet_NaN();  // NaN = tune
    std::size_t pool_size = 100;
    double target_len = 0.0;  // 0 = mean validation reference length
    double tolerance = 0.5;
    std::uint64_t seed = 0;
};

int run_eval(const EvalArgs& a0, const CLI::App& cmd) {
    EvalArgs a = a0;
    KvFile cfg = load_config_or_empty(a.config_path);
    Resolver r(cfg, {"ckpt", "test", "valid", "out", "lambda", "pool_size",
                     "target_len", "tolerance", "seed"});
    r.resolve(cmd.get_option("--ckpt"), "ckpt", a.ckpt_dir);
    r.resolve(cmd.get_option("--test"), "test", a.test_path);
    r.resolve(cmd.get_option("--valid"), "valid", a.valid_path);
    r.resolve(cmd.get_option("--out"), "out", a.out_path);
    r.resolve(cmd.get_option("--lambda"), "lambda", a.lambda);
    r.resolve(cmd.get_option("--pool"), "pool_size", a.pool_size);
    r.resolve(cmd.get_option("--target-len"), "target_len", a.target_len);
    r.resolve(cmd.get_option("--tolerance"), "tolerance", a.tolerance);
    r.resolve(cmd.get_option("--seed"), "seed", a.seed);
    if (a.ckpt_dir.empty() || a.test_path.empty() || a.out_path.empty())
        throw ConfigError("eval: --ckpt, --test and --out are required");

    LoadedCheckpoint ckpt = load_checkpoint(a.ckpt_dir);
    const auto test_samples = load_corpus(a.test_path, ckpt.vocab);

    std::size_t skipped = 0;
    for (const MultiRefSample& s : test_samples)
        if (s.responses.empty()) ++skipped;
    if (skipped)
        std::cerr << "warning: skipping " << skipped
                  << " test sample(s) with zero references\n";

    RankerConfig rc;
    rc.pool_size = a.pool_size;
    rc.dedup = true;

    bool tuned = false;
    LambdaTuning tuning;
    if (std::isnan(a.lambda)) {
        if (a.valid_path.empty())
            throw ConfigError("eval: --valid is required unless --lambda given");
        const auto valid_samples = load_corpus(a.valid_path, ckpt.vocab);
        double target = a.target_len;
        if (target <= 0.0) {
            double total = 0.0;
            std::size_t count = 0;
            for (const MultiRefSample& s : valid_samples)
                for (const std::vector<int>& y : s.responses) {
                    total += static_cast<double>(y.size()) - 1.0;  // drop EOS
                    ++count;
                }
            if (count == 0)
                throw DataError(a.valid_path + ": no references to average");
            target = total / static_cast<double>(count);
        }
        tuning = tune_lambda(ckpt.model, valid_samples, target, a.tolerance,
                             rc, a.seed);
        if (!tuning.attained)
            std::cerr << "warning: lambda tuning missed target length ("
                      << "achieved " << tuning.achieved_mean_length << ")\n";
        rc.lambda = tuning.lambda;
        tuned = true;
    } else {
        rc.lambda = a.lambda;
    }

    const EvalReport report = evaluate_corpus(ckpt.model, test_samples, rc,
                                              a.seed);
    std::string out = "lambda_tuned=";
    out += tuned ? "true" : "false";
    out += '\n';
    out += format_eval_report(report);
    write_file(a.out_path, out);

    KvFile run;
    run.set("command", "eval");
    run.set("ckpt", a.ckpt_dir);
    run.set("test", a.test_path);
    run.set("valid", a.valid_path);
    run.set("out", a.out_path);
    run.set("lambda", std::isnan(a.lambda) ? "nan" : format_double(a.lambda));
    run.set_uint("pool_size", a.pool_size);
    run.set_double("target_len", a.target_len);
    run.set_double("tolerance", a.tolerance);
    run.set_uint("seed", a.seed);
    write_file(a.out_path + ".config", run.serialize());
    return 0;
}

// ---- diagnose ---------------------------------------------------------------

struct DiagnoseArgs {
    std::string config_path;
    std::string ckpt_dir;
    std::string corpus_path;
    std::string out_dir;
    std::size_t max_contexts = 1000;
    std::size_t max_pairs = 1000;
    std::size_t table_context = 0;
    std::size_t table_target = 0;
    std::uint64_t seed = 0;
};

int run_diagnose(const DiagnoseArgs& a0, const CLI::App& cmd) {
    DiagnoseArgs a = a0;
    KvFile cfg = load_config_or_empty(a.config_path);
    Resolver r(cfg, {"ckpt", "corpus", "out", "max_contexts", "max_pairs",
                     "table_context", "table_target", "seed"});
    r.resolve(cmd.get_option("--ckpt"), "ckpt", a.ckpt_dir);
    r.resolve(cmd.get_option("--corpus"), "corpus", a.corpus_path);
    r.resolve(cmd.get_option("--out"), "out", a.out_dir);
    r.resolve(cmd.get_option("--max-contexts"), "max_contexts", a.max_contexts);
    r.resolve(cmd.get_option("--max-pairs"), "max_pairs", a.max_pairs);
    r.resolve(cmd.get_option("--table-context"), "table_context",
              a.table_context);
    r.resolve(cmd.get_option("--table-target"), "table_target", a.table_target);
    r.resolve(cmd.get_option("--seed"), "seed", a.seed);
    if (a.ckpt_dir.empty() || a.corpus_path.empty() || a.out_dir.empty())
        throw ConfigError("diagnose: --ckpt, --corpus and --out are required");

    LoadedCheckpoint ckpt = load_checkpoint(a.ckpt_dir);
    const auto samples = load_corpus(a.corpus_path, ckpt.vocab);

    std::size_t multi_ref = 0;
    for (const MultiRefSample& s : samples)
        if (s.responses.size() >= 2) ++multi_ref;
    if (multi_ref == 0)
        throw DataError(a.corpus_path +
                        ": diagnostics need at least one sample with 2 or "
                        "more references");

    if (a.table_context >= samples.size())
        throw ConfigError("diagnose: --table-context out of range");
    if (a.table_target >= samples[a.table_context].responses.size())
        throw ConfigError("diagnose: --table-target out of range");

    std::filesystem::create_directories(a.out_dir);
    const std::vector<double> grid = default_u_grid();

    const Histogram hist = direction_cosines(ckpt.model, samples,
                                             a.max_contexts);
    write_file(a.out_dir + "/cosine_hist.csv", format_cosine_hist_csv(hist));

    const SweepCurve curve = interpolation_perplexity(ckpt.model, samples,
                                                      grid, a.max_pairs);
    write_file(a.out_dir + "/perp_curve.csv", format_perp_curve_csv(curve));

    const FusionScatter scatter = fusion_scatter(ckpt.model, samples,
                                                 a.max_pairs, a.seed);
    write_file(a.out_dir + "/fusion_scatter.csv",
               format_fusion_scatter_csv(scatter));

    const auto table = interpolation_table(
        ckpt.model, ckpt.vocab, samples[a.table_context].context,
        samples[a.table_context].responses[a.table_target], grid);
    write_file(a.out_dir + "/interp_table.csv", format_interp_table_csv(table));

    KvFile run;
    run.set("command", "diagnose");
    run.set("ckpt", a.ckpt_dir);
    run.set("corpus", a.corpus_path);
    run.set("out", a.out_dir);
    run.set_uint("max_contexts", a.max_contexts);
    run.set_uint("max_pairs", a.max_pairs);
    run.set_uint("table_context", a.table_context);
    run.set_uint("table_target", a.table_target);
    run.set_uint("seed", a.seed);
    write_file(a.out_dir + "/run.config", run.serialize());
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    if (const char* prec = std::getenv("SPACEFUSION_PRECISION")) {
        if (std::string(prec) != "double") {
            std::cerr << "error: SPACEFUSION_PRECISION=" << prec
                      << " unsupported; this build computes in double\n";
            return 2;
        }
    }

    CLI::App app{"SpaceFusion dialogue model: training, generation, "
                 "evaluation, and latent-space diagnostics"};
    app.require_subcommand(1);

    SynthArgs sy;
    CLI::App* synth = app.add_subcommand(
        "synth", "Write synthetic train/valid/test corpora");
    synth->add_option("--config", sy.config_path, "key=value config file");
    synth->add_option("--contexts", sy.contexts, "training contexts");
    synth->add_option("--clusters", sy.clusters, "response clusters per context");
    synth->add_option("--seed", sy.seed, "random seed");
    synth->add_option("--out", sy.out_dir, "output directory");
    synth->add_flag("--force", sy.force, "overwrite existing files");

    TrainArgs tr;
    CLI::App* train_cmd = app.add_subcommand("train", "Train a model");
    train_cmd->add_option("--config", tr.config_path, "key=value config file");
    train_cmd->add_option("--train", tr.train_path, "training corpus");
    train_cmd->add_option("--valid", tr.valid_path, "validation corpus");
    train_cmd->add_option("--out", tr.out_dir, "checkpoint directory");
    train_cmd->add_flag("--mtask", tr.mtask,
                        "disable the interpolation and fusion regularizers");
    train_cmd->add_option("--hidden", tr.mc.hidden_size, "GRU hidden units");
    train_cmd->add_option("--embedding", tr.mc.embedding_dim,
                          "word embedding dimension");
    train_cmd->add_option("--layers", tr.mc.num_layers, "GRU layers");
    train_cmd->add_option("--sigma", tr.mc.noise_sigma, "encoder noise sigma");
    train_cmd->add_option("--alpha", tr.mc.alpha, "interpolation loss weight");
    train_cmd->add_option("--beta", tr.mc.beta, "fusion loss weight");
    train_cmd->add_option("--clip", tr.mc.clip_distance,
                          "pairwise distance clip");
    train_cmd->add_option("--radius", tr.mc.radius,
                          "inference sampling radius");
    train_cmd->add_option("--vocab-max", tr.vocab_max, "vocabulary cap");
    train_cmd->add_option("--lr", tr.tc.learning_rate, "Adam learning rate");
    train_cmd->add_option("--batch", tr.tc.batch_size, "batch size");
    train_cmd->add_option("--epochs", tr.tc.max_epochs, "max epochs");
    train_cmd->add_option("--patience", tr.tc.patience,
                          "early stopping patience");
    train_cmd->add_option("--spike-threshold", tr.tc.spike_threshold,
                          "abort when |loss| exceeds this");
    train_cmd->add_option("--seed", tr.seed, "random seed");

    GenerateArgs ge;
    CLI::App* gen_cmd = app.add_subcommand("generate", "Generate responses");
    gen_cmd->add_option("--config", ge.config_path, "key=value config file");
    gen_cmd->add_option("--ckpt", ge.ckpt_dir, "checkpoint directory");
    gen_cmd->add_option("--input", ge.input_path, "corpus file with contexts");
    gen_cmd->add_option("--out", ge.out_path, "output file");
    gen_cmd->add_option("--pool", ge.pool_size, "hypothesis pool size");
    gen_cmd->add_option("--n", ge.n_best, "responses per context");
    gen_cmd->add_option("--radius", ge.radius,
                        "sampling radius (default: checkpoint value)");
    gen_cmd->add_option("--lambda", ge.lambda, "length bonus weight");
    gen_cmd->add_flag("--with-scores", ge.with_scores,
                      "append ^score to each hypothesis");
    gen_cmd->add_flag("--dedup,!--no-dedup", ge.dedup,
                      "merge duplicate hypotheses");
    gen_cmd->add_option("--seed", ge.seed, "random seed");

    EvalArgs ev;
    CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
    eval_cmd->add_option("--config", ev.config_path, "key=value config file");
    eval_cmd->add_option("--ckpt", ev.ckpt_dir, "checkpoint directory");
    eval_cmd->add_option("--test", ev.test_path, "multi-reference test corpus");
    eval_cmd->add_option("--valid", ev.valid_path,
                         "validation corpus for lambda tuning");
    eval_cmd->add_option("--out", ev.out_path, "report file");
    eval_cmd->add_option("--lambda", ev.lambda,
                         "length bonus weight (skips tuning)");
    eval_cmd->add_option("--pool", ev.pool_size, "hypothesis pool size");
    eval_cmd->add_option("--target-len", ev.target_len,
                         "tuning target length (0 = mean reference length)");
    eval_cmd->add_option("--tolerance", ev.tolerance,
                         "tuning tolerance in tokens");
    eval_cmd->add_option("--seed", ev.seed, "random seed");

    DiagnoseArgs di;
    CLI::App* diag_cmd = app.add_subcommand(
        "diagnose", "Latent-space diagnostics CSV bundle");
    diag_cmd->add_option("--config", di.config_path, "key=value config file");
    diag_cmd->add_option("--ckpt", di.ckpt_dir, "checkpoint directory");
    diag_cmd->add_option("--corpus", di.corpus_path,
                         "multi-reference corpus");
    diag_cmd->add_option("--out", di.out_dir, "output directory");
    diag_cmd->add_option("--max-contexts", di.max_contexts,
                         "contexts for the cosine histogram");
    diag_cmd->add_option("--max-pairs", di.max_pairs,
                         "pairs for the perplexity curve and scatter");
    diag_cmd->add_option("--table-context", di.table_context,
                         "sample index for the interpolation table");
    diag_cmd->add_option("--table-target", di.table_target,
                         "response index for the interpolation table");
    diag_cmd->add_option("--seed", di.seed, "random seed");

    try {
        app.parse(argc, const_cast<char**>(argv));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*synth) return run_synth(sy, *synth);
        if (*train_cmd) return run_train(tr, *train_cmd);
        if (*gen_cmd) return run_generate(ge, *gen_cmd);
        if (*eval_cmd) return run_eval(ev, *eval_cmd);
        if (*diag_cmd) return run_diagnose(di, *diag_cmd);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
}

}  // namespace spacefusion
