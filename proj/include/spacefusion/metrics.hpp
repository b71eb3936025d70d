#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spacefusion/corpus.hpp"
#include "spacefusion/inference.hpp"
#include "spacefusion/model.hpp"

namespace spacefusion {

// Sentence-level 4-gram BLEU in [0,1]. Inputs are content tokens (no EOS or
// PAD). Geometric mean of clipped n-gram precisions, orders 1-4; orders 2-4
// use add-one smoothing ((matches+1)/(candidates+1)), order 1 is unsmoothed;
// brevity penalty exp(1 - |r|/|h|) when the hypothesis is shorter. An empty
// hypothesis scores 0.
double bleu4(const std::vector<int>& reference,
             const std::vector<int>& hypothesis);

// Mean over hypotheses of each one's best BLEU against any reference.
double precision(const std::vector<std::vector<int>>& references,
                 const std::vector<std::vector<int>>& hypotheses);

// Defined as precision with the roles swapped, making the duality
// recall(R, H) == precision(H, R) exact by construction.
double recall(const std::vector<std::vector<int>>& references,
              const std::vector<std::vector<int>>& hypotheses);

// Harmonic mean; 0 when both inputs are 0.
double f1(double precision_value, double recall_value);

struct ContextEval {
    std::size_t index = 0;
    std::size_t n_refs = 0;
    double precision = 0.0;
    double recall = 0.0;
    bool shortfall = false;
};

struct EvalReport {
    double precision = 0.0;  // corpus mean over contexts, in [0,1]
    double recall = 0.0;
    double f1 = 0.0;  // harmonic mean of the corpus precision and recall
    double lambda = 0.0;
    double mean_hyp_length = 0.0;
    double mean_ref_length = 0.0;
    std::vector<ContextEval> rows;
};

// Per context: pool -> select_top(N_r) -> precision/recall against the
// references. Hypothesis shortfalls are padded with empty hypotheses so a
// collapsed model scores low instead of crashing. Samples without references
// are skipped. Per-context pool rngs are split from seed by context index.
EvalReport evaluate_corpus(const SpaceFusionModel& model,
                           const std::vector<MultiRefSample>& test_samples,
                           const RankerConfig& cfg, std::uint64_t seed);

// UTF-8 report: key=value header (metrics scaled to [0,100]) followed by
// per-context CSV rows on the same scale.
std::string format_eval_report(const EvalReport& report);

}  // namespace spacefusion
