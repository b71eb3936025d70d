#include "spacefusion/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "spacefusion/errors.hpp"
#include "spacefusion/io.hpp"

namespace spacefusion {

namespace {

// Count of n-gram matches clipped by reference counts, plus the number of
// candidate n-grams, for one order.
void ngram_stats(const std::vector<int>& ref, const std::vector<int>& hyp,
                 std::size_t order, std::size_t& matches,
                 std::size_t& candidates) {
    matches = 0;
    candidates = hyp.size() + 1 >= order ? hyp.size() + 1 - order : 0;
    if (candidates == 0) return;
    std::map<std::vector<int>, std::size_t> ref_counts;
    if (ref.size() + 1 >= order)
        for (std::size_t i = 0; i + order <= ref.size(); ++i)
            ++ref_counts[std::vector<int>(ref.begin() + i,
                                          ref.begin() + i + order)];
    for (std::size_t i = 0; i + order <= hyp.size(); ++i) {
        auto it = ref_counts.find(
            std::vector<int>(hyp.begin() + i, hyp.begin() + i + order));
        if (it != ref_counts.end() && it->second > 0) {
            ++matches;
            --it->second;
        }
    }
}

}  // namespace

double bleu4(const std::vector<int>& reference,
             const std::vector<int>& hypothesis) {
    if (hypothesis.empty()) return 0.0;
    if (reference.empty()) return 0.0;

    double log_sum = 0.0;
    for (std::size_t order = 1; order <= 4; ++order) {
        std::size_t matches = 0, candidates = 0;
        ngram_stats(reference, hypothesis, order, matches, candidates);
        double p;
        if (order == 1) {
            p = static_cast<double>(matches) / static_cast<double>(candidates);
        } else {
            p = (static_cast<double>(matches) + 1.0) /
                (static_cast<double>(candidates) + 1.0);
        }
        if (p == 0.0) return 0.0;
        log_sum += std::log(p);
    }
    const double geo = std::exp(log_sum / 4.0);
    double bp = 1.0;
    if (hypothesis.size() < reference.size())
        bp = std::exp(1.0 - static_cast<double>(reference.size()) /
                                static_cast<double>(hypothesis.size()));
    return bp * geo;
}

double precision(const std::vector<std::vector<int>>& references,
                 const std::vector<std::vector<int>>& hypotheses) {
    if (references.empty() || hypotheses.empty())
        throw ConfigError("precision: empty reference or hypothesis list");
    double total = 0.0;
    for (const std::vector<int>& h : hypotheses) {
        double best = 0.0;
        for (const std::vector<int>& r : references)
            best = std::max(best, bleu4(r, h));
        total += best;
    }
    return total / static_cast<double>(hypotheses.size());
}

double recall(const std::vector<std::vector<int>>& references,
              const std::vector<std::vector<int>>& hypotheses) {
    return precision(hypotheses, references);
}

double f1(double precision_value, double recall_value) {
    if (precision_value < 0.0 || recall_value < 0.0)
        throw ConfigError("f1: inputs must be >= 0");
    const double s = precision_value + recall_value;
    if (s == 0.0) return 0.0;
    return 2.0 * precision_value * recall_value / s;
}

namespace {

// Content tokens only: everything before the first EOS.
std::vector<int> strip_eos(const std::vector<int>& seq) {
    std::vector<int> out;
    for (int t : seq) {
        if (t == Vocabulary::kEos) break;
        out.push_back(t);
    }
    return out;
}

}  // namespace

EvalReport evaluate_corpus(const SpaceFusionModel& model,
                           const std::vector<MultiRefSample>& test_samples,
                           const RankerConfig& cfg, std::uint64_t seed) {
    if (test_samples.empty()) throw ConfigError("evaluate_corpus: empty test set");
    Rng master(seed);

    EvalReport report;
    report.lambda = cfg.lambda;
    double hyp_len_total = 0.0, ref_len_total = 0.0;
    std::size_t hyp_count = 0, ref_count = 0;

    for (std::size_t i = 0; i < test_samples.size(); ++i) {
        const MultiRefSample& s = test_samples[i];
        const std::size_t n_refs = s.responses.size();
        if (n_refs == 0) continue;

        Rng ctx_rng = master.split(i);
        const std::vector<Hypothesis> pool =
            generate_pool(model, s.context, cfg, ctx_rng);
        const Selection sel = select_top(pool, n_refs, cfg.lambda);

        std::vector<std::vector<int>> hyps, refs;
        for (const Hypothesis& h : sel.hypotheses) {
            hyps.push_back(strip_eos(h.tokens));
            hyp_len_total += static_cast<double>(h.length);
            ++hyp_count;
        }
        while (hyps.size() < n_refs) hyps.emplace_back();  // shortfall padding
        for (const std::vector<int>& r : s.responses) {
            refs.push_back(strip_eos(r));
            ref_len_total += static_cast<double>(refs.back().size());
            ++ref_count;
        }

        ContextEval row;
        row.index = i;
        row.n_refs = n_refs;
        row.precision = precision(refs, hyps);
        row.recall = recall(refs, hyps);
        row.shortfall = sel.shortfall;
        report.rows.push_back(row);

        report.precision += row.precision;
        report.recall += row.recall;
    }

    if (report.rows.empty())
        throw ConfigError("evaluate_corpus: no sample has references");
    const double n = static_cast<double>(report.rows.size());
    report.precision /= n;
    report.recall /= n;
    report.f1 = f1(report.precision, report.recall);
    report.mean_hyp_length =
        hyp_count ? hyp_len_total / static_cast<double>(hyp_count) : 0.0;
    report.mean_ref_length =
        ref_count ? ref_len_total / static_cast<double>(ref_count) : 0.0;
    return report;
}

std::string format_eval_report(const EvalReport& report) {
    std::string out;
    out += "precision=" + format_double(report.precision * 100.0) + '\n';
    out += "recall=" + format_double(report.recall * 100.0) + '\n';
    out += "f1=" + format_double(report.f1 * 100.0) + '\n';
    out += "lambda=" + format_double(report.lambda) + '\n';
    out += "mean_hyp_length=" + format_double(report.mean_hyp_length) + '\n';
    out += "mean_ref_length=" + format_double(report.mean_ref_length) + '\n';
    out += "context,n_refs,precision,recall,shortfall\n";
    for (const ContextEval& r : report.rows) {
        out += std::to_string(r.index);
        out += ',' + std::to_string(r.n_refs);
        out += ',' + format_double(r.precision * 100.0);
        out += ',' + format_double(r.recall * 100.0);
        out += ',';
        out += r.shortfall ? '1' : '0';
        out += '\n';
    }
    return out;
}

}  // namespace spacefusion
