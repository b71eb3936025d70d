#include "spacefusion/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <limits>
#include <map>
#include <utility>

#include "spacefusion/errors.hpp"
#include "spacefusion/rng.hpp"

namespace spacefusion {

int Vocabulary::lookup(const std::string& tok) const {
    auto it = token_to_id.find(tok);
    return it == token_to_id.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= id_to_token.size())
        throw DataError("token id out of range: " + std::to_string(id));
    return id_to_token[static_cast<std::size_t>(id)];
}

std::vector<std::string> split_lower(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            if (!cur.empty()) {
                out.push_back(cur);
                cur.clear();
            }
        } else {
            cur.push_back(static_cast<char>(
                std::tolower(static_cast<unsigned char>(ch))));
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

Vocabulary build_vocab(const std::vector<std::string>& texts,
                       std::size_t max_size) {
    if (texts.empty()) throw ConfigError("build_vocab: empty corpus");
    if (max_size < 4) throw ConfigError("build_vocab: max_size must be >= 4");
    std::map<std::string, std::size_t> freq;
    for (const std::string& t : texts)
        for (const std::string& tok : split_lower(t)) ++freq[tok];

    std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(),
                                                            freq.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocabulary v;
    v.id_to_token = {"<pad>", "<bos>", "<eos>", "<unk>"};
    for (const auto& [tok, n] : ranked) {
        (void)n;
        if (v.id_to_token.size() >= max_size) break;
        v.id_to_token.push_back(tok);
    }
    for (std::size_t i = 0; i < v.id_to_token.size(); ++i)
        v.token_to_id[v.id_to_token[i]] = static_cast<int>(i);
    return v;
}

std::vector<int> tokenize(const std::string& text, const Vocabulary& vocab) {
    std::vector<std::string> toks = split_lower(text);
    if (toks.size() > kMaxContentTokens) toks.resize(kMaxContentTokens);
    std::vector<int> ids;
    ids.reserve(toks.size() + 1);
    for (const std::string& t : toks) ids.push_back(vocab.lookup(t));
    ids.push_back(Vocabulary::kEos);
    return ids;
}

std::string detokenize(const std::vector<int>& ids, const Vocabulary& vocab) {
    std::string out;
    for (int id : ids) {
        if (id == Vocabulary::kEos) break;
        if (!out.empty()) out.push_back(' ');
        out += vocab.token(id);
    }
    return out;
}

static std::vector<std::string> split_on(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char ch : s) {
        if (ch == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    parts.push_back(cur);
    return parts;
}

std::vector<RawSample> read_corpus_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open corpus file: " + path);
    std::vector<RawSample> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields = split_on(line, '\t');
        if (fields.size() < 2 || fields.size() > 3)
            throw DataError(path + ":" + std::to_string(lineno) +
                            ": expected 2 or 3 tab-separated fields, got " +
                            std::to_string(fields.size()));
        RawSample s;
        s.context = fields[0];
        s.responses = split_on(fields[1], '|');
        if (s.responses.empty())
            throw DataError(path + ":" + std::to_string(lineno) +
                            ": no responses");
        if (fields.size() == 3) {
            for (const std::string& l : split_on(fields[2], '|')) {
                try {
                    std::size_t pos = 0;
                    int v = std::stoi(l, &pos);
                    if (pos != l.size()) throw std::invalid_argument(l);
                    s.labels.push_back(v);
                } catch (const std::exception&) {
                    throw DataError(path + ":" + std::to_string(lineno) +
                                    ": bad cluster label '" + l + "'");
                }
            }
            if (s.labels.size() != s.responses.size())
                throw DataError(path + ":" + std::to_string(lineno) +
                                ": label count != response count");
        }
        out.push_back(std::move(s));
    }
    return out;
}

static void check_writable_field(const std::string& s, const char* what) {
    for (char ch : s) {
        if (ch == '|')
            throw DataError(std::string("write_corpus: '|' inside ") + what +
                            ": " + s);
        if (ch == '\t' || ch == '\n' || ch == '\r')
            throw DataError(std::string("write_corpus: control char inside ") +
                            what + ": " + s);
    }
}

void write_corpus(const std::string& path,
                  const std::vector<RawSample>& samples) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for write: " + path);
    for (const RawSample& s : samples) {
        check_writable_field(s.context, "context");
        if (s.responses.empty()) throw DataError("write_corpus: no responses");
        if (!s.labels.empty() && s.labels.size() != s.responses.size())
            throw DataError("write_corpus: label count != response count");
        out << s.context << '\t';
        for (std::size_t i = 0; i < s.responses.size(); ++i) {
            check_writable_field(s.responses[i], "response");
            if (i) out << '|';
            out << s.responses[i];
        }
        if (!s.labels.empty()) {
            out << '\t';
            for (std::size_t i = 0; i < s.labels.size(); ++i) {
                if (i) out << '|';
                out << s.labels[i];
            }
        }
        out << '\n';
    }
    if (!out) throw DataError("write failed: " + path);
}

std::vector<std::string> collect_texts(const std::vector<RawSample>& samples) {
    std::vector<std::string> texts;
    for (const RawSample& s : samples) {
        texts.push_back(s.context);
        for (const std::string& r : s.responses) texts.push_back(r);
    }
    return texts;
}

std::vector<MultiRefSample> encode_samples(const std::vector<RawSample>& raw,
                                           const Vocabulary& vocab) {
    std::vector<MultiRefSample> out;
    out.reserve(raw.size());
    for (const RawSample& s : raw) {
        MultiRefSample m;
        m.context = tokenize(s.context, vocab);
        for (const std::string& r : s.responses)
            m.responses.push_back(tokenize(r, vocab));
        m.cluster_labels = s.labels;
        out.push_back(std::move(m));
    }
    return out;
}

std::vector<MultiRefSample> load_corpus(const std::string& path,
                                        const Vocabulary& vocab) {
    return encode_samples(read_corpus_file(path), vocab);
}

const std::vector<std::string>& default_topics() {
    static const std::vector<std::string> topics = {
        "chess",      "poker",      "tennis",    "soccer",    "golf",
        "darts",      "trivia",     "bingo",     "bridge",    "checkers",
        "basketball", "baseball",   "hockey",    "cricket",   "rugby",
        "badminton",  "squash",     "bowling",   "billiards", "karaoke",
        "yoga",       "pilates",    "boxing",    "fencing",   "archery",
        "climbing",   "hiking",     "camping",   "fishing",   "kayaking",
        "surfing",    "skiing",     "snowboarding", "skating", "cycling",
        "running",    "swimming",   "rowing",    "sailing",   "diving",
        "painting",   "pottery",    "knitting",  "origami",   "calligraphy",
        "photography", "gardening", "baking",    "cooking",   "brewing",
        "mahjong",    "sudoku",     "scrabble",  "monopoly",  "charades",
        "dominoes",   "backgammon", "solitaire", "hearts",    "spades",
        "volleyball", "handball",   "softball",  "lacrosse",  "curling",
        "judo",       "karate",     "taekwondo", "aikido",    "wrestling",
        "pinball",    "foosball",   "airhockey", "skeeball",  "minigolf",
        "juggling",   "magic",      "improv",    "sketching", "sculpting",
        "astronomy",  "birdwatching", "geocaching", "puzzles", "riddles",
        "crosswords", "quizzes",    "debate",    "chemistry", "robotics",
        "coding",     "blogging",   "podcasting", "filming",  "animation",
        "dancing"};
    return topics;
}

namespace {

const std::vector<std::string>& context_templates() {
    static const std::vector<std::string> t = {
        "anyone want to start %s",
        "do you want to try %s",
        "shall we play %s together",
        "are you free for %s tonight"};
    return t;
}

// One template per semantic cluster: accept, decline, ask-when, defer,
// novice, enthusiastic. Lengths differ on purpose so length-aware reranking
// has something to trade off.
const std::vector<std::string>& cluster_templates() {
    static const std::vector<std::string> t = {
        "yes i would love to play %s with you",
        "no i am not interested in %s",
        "when will %s start",
        "maybe after work if i have time",
        "i have never tried %s before",
        "sure %s sounds fun"};
    return t;
}

std::string fill_template(const std::string& tmpl, const std::string& topic) {
    std::string out;
    for (std::size_t i = 0; i < tmpl.size(); ++i) {
        if (tmpl[i] == '%' && i + 1 < tmpl.size() && tmpl[i + 1] == 's') {
            out += topic;
            ++i;
        } else {
            out.push_back(tmpl[i]);
        }
    }
    return out;
}

}  // namespace

std::size_t max_clusters() { return cluster_templates().size(); }

std::vector<RawSample> generate_synthetic_raw(
    std::size_t num_contexts, std::size_t clusters, std::uint64_t seed,
    const std::vector<std::string>& topics) {
    if (clusters < 2 || clusters > max_clusters())
        throw ConfigError("clusters must be in [2, " +
                          std::to_string(max_clusters()) + "]");
    if (num_contexts < 1) throw ConfigError("num_contexts must be >= 1");
    if (topics.empty()) throw ConfigError("empty topic pool");

    Rng rng(seed);
    std::vector<std::size_t> perm = rng.permutation(topics.size());

    std::vector<RawSample> out;
    out.reserve(num_contexts);
    for (std::size_t i = 0; i < num_contexts; ++i) {
        const std::string& topic = topics[perm[i % topics.size()]];
        RawSample s;
        s.context = fill_template(
            context_templates()[i % context_templates().size()], topic);
        for (std::size_t k = 0; k < clusters; ++k) {
            s.responses.push_back(fill_template(cluster_templates()[k], topic));
            s.labels.push_back(static_cast<int>(k));
        }
        out.push_back(std::move(s));
    }
    return out;
}

SyntheticCorpus generate_synthetic(std::size_t num_contexts,
                                   std::size_t clusters, std::uint64_t seed) {
    SyntheticCorpus c;
    c.raw = generate_synthetic_raw(num_contexts, clusters, seed);
    c.vocab = build_vocab(collect_texts(c.raw),
                          std::numeric_limits<std::size_t>::max());
    c.samples = encode_samples(c.raw, c.vocab);
    return c;
}

Batch make_batch_from_pairs(
    const std::vector<std::pair<const std::vector<int>*,
                                const std::vector<int>*>>& rows) {
    Batch b;
    b.n = rows.size();
    for (const auto& [c, r] : rows) {
        b.t_ctx = std::max(b.t_ctx, c->size());
        b.t_resp = std::max(b.t_resp, r->size());
    }
    b.ctx.assign(b.n * b.t_ctx, Vocabulary::kPad);
    b.resp.assign(b.n * b.t_resp, Vocabulary::kPad);
    for (std::size_t i = 0; i < b.n; ++i) {
        const std::vector<int>& c = *rows[i].first;
        const std::vector<int>& r = *rows[i].second;
        b.ctx_len.push_back(c.size());
        b.resp_len.push_back(r.size());
        std::copy(c.begin(), c.end(), b.ctx.begin() + i * b.t_ctx);
        std::copy(r.begin(), r.end(), b.resp.begin() + i * b.t_resp);
    }
    return b;
}

std::vector<Batch> make_batches(const std::vector<MultiRefSample>& samples,
                                std::size_t batch_size, Pairing pairing,
                                std::uint64_t seed) {
    if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
    Rng rng(seed);

    using Row = std::pair<const std::vector<int>*, const std::vector<int>*>;
    std::vector<Row> rows;
    if (pairing == Pairing::kFlatten) {
        for (const MultiRefSample& s : samples)
            for (const std::vector<int>& r : s.responses)
                rows.emplace_back(&s.context, &r);
    } else {
        for (const MultiRefSample& s : samples) {
            const std::size_t k = static_cast<std::size_t>(
                rng.uniform_int(0, s.responses.size() - 1));
            rows.emplace_back(&s.context, &s.responses[k]);
        }
    }

    std::vector<std::size_t> perm = rng.permutation(rows.size());
    std::vector<Batch> out;
    for (std::size_t start = 0; start < rows.size(); start += batch_size) {
        const std::size_t end = std::min(rows.size(), start + batch_size);
        if (end - start < 2) break;  // fusion term needs n >= 2
        std::vector<Row> chunk;
        for (std::size_t i = start; i < end; ++i) chunk.push_back(rows[perm[i]]);
        out.push_back(make_batch_from_pairs(chunk));
    }
    return out;
}

}  // namespace spacefusion
