#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace spacefusion {

// Token inventory. Ids 0..3 are reserved in this exact order.
struct Vocabulary {
    static constexpr int kPad = 0;
    static constexpr int kBos = 1;
    static constexpr int kEos = 2;
    static constexpr int kUnk = 3;

    std::vector<std::string> id_to_token;
    std::unordered_map<std::string, int> token_to_id;

    std::size_t size() const { return id_to_token.size(); }
    int lookup(const std::string& tok) const;
    const std::string& token(int id) const;
};

// Sequences longer than this keep their first 32 content tokens; EOS is
// appended after truncation, so encoded length is at most 33.
constexpr std::size_t kMaxContentTokens = 32;

// Lowercase whitespace split. No punctuation handling.
std::vector<std::string> split_lower(const std::string& text);

// Tokens ranked by frequency, ties broken lexicographically; at most max_size
// entries including the four reserved ids.
Vocabulary build_vocab(const std::vector<std::string>& texts,
                       std::size_t max_size);

// Encode to ids: lowercase, split, truncate, map unknowns to UNK, append EOS.
// Empty text encodes to [EOS].
std::vector<int> tokenize(const std::string& text, const Vocabulary& vocab);

// Tokens before the first EOS, space joined.
std::string detokenize(const std::vector<int>& ids, const Vocabulary& vocab);

struct RawSample {
    std::string context;
    std::vector<std::string> responses;
    std::vector<int> labels;  // empty when the file has no label field
};

struct MultiRefSample {
    std::vector<int> context;
    std::vector<std::vector<int>> responses;
    std::vector<int> cluster_labels;
};

// One sample per line: `context TAB resp_1|...|resp_k [TAB label_1|...|label_k]`.
std::vector<RawSample> read_corpus_file(const std::string& path);
void write_corpus(const std::string& path, const std::vector<RawSample>& samples);

// Contexts followed by responses, sample order. Feed to build_vocab.
std::vector<std::string> collect_texts(const std::vector<RawSample>& samples);

std::vector<MultiRefSample> encode_samples(const std::vector<RawSample>& raw,
                                           const Vocabulary& vocab);
std::vector<MultiRefSample> load_corpus(const std::string& path,
                                        const Vocabulary& vocab);

// Synthetic one-to-many corpus: templated single-turn questions about a topic
// word, K responses per context from K fixed semantic clusters.
const std::vector<std::string>& default_topics();
std::size_t max_clusters();

std::vector<RawSample> generate_synthetic_raw(
    std::size_t num_contexts, std::size_t clusters, std::uint64_t seed,
    const std::vector<std::string>& topics = default_topics());

struct SyntheticCorpus {
    std::vector<RawSample> raw;
    Vocabulary vocab;
    std::vector<MultiRefSample> samples;
};
SyntheticCorpus generate_synthetic(std::size_t num_contexts,
                                   std::size_t clusters, std::uint64_t seed);

// Padded id matrices for one training step. PAD-right; row i's true lengths in
// ctx_len / resp_len, response length counts the EOS.
struct Batch {
    std::size_t n = 0;
    std::size_t t_ctx = 0;
    std::size_t t_resp = 0;
    std::vector<int> ctx;   // n * t_ctx, row-major
    std::vector<int> resp;  // n * t_resp
    std::vector<std::size_t> ctx_len;
    std::vector<std::size_t> resp_len;

    int ctx_at(std::size_t i, std::size_t t) const { return ctx[i * t_ctx + t]; }
    int resp_at(std::size_t i, std::size_t t) const { return resp[i * t_resp + t]; }
};

enum class Pairing { kFlatten, kSampleOne };

// Flatten expands every sample into N_r (context, response) rows before the
// shuffle; sample-one draws one response per context per call. A trailing
// batch of size 1 is dropped: the fusion term divides by n^2 - n.
std::vector<Batch> make_batches(const std::vector<MultiRefSample>& samples,
                                std::size_t batch_size, Pairing pairing,
                                std::uint64_t seed);

Batch make_batch_from_pairs(
    const std::vector<std::pair<const std::vector<int>*,
                                const std::vector<int>*>>& rows);

}  // namespace spacefusion
