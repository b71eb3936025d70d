#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spacefusion/corpus.hpp"
#include "spacefusion/model.hpp"

namespace spacefusion {

struct TrainConfig {
    double learning_rate = 0.001;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 40;
    std::size_t patience = 3;
    std::uint64_t seed = 0;
    double spike_threshold = 1e6;

    void validate() const;
};

struct EpochStats {
    std::size_t epoch = 0;  // 1-based
    double train_total = 0.0;
    double rec_s2s = 0.0;
    double rec_ae = 0.0;
    double interp = 0.0;
    double fuse = 0.0;
    double valid_total = 0.0;
};

struct TrainResult {
    std::vector<EpochStats> log;
    std::size_t best_epoch = 0;  // 0 when no epoch ran
    double best_valid = 0.0;
};

// Adam over shuffled flattened batches; per-epoch validation total loss with
// draws fixed once per run so epochs compare like-for-like; patience early
// stopping on validation; best-validation parameters restored at the end.
// Non-finite or above-threshold loss aborts with NumericError.
TrainResult train(SpaceFusionModel& model,
                  const std::vector<MultiRefSample>& train_samples,
                  const std::vector<MultiRefSample>& valid_samples,
                  const TrainConfig& tc);

// CSV: epoch,train_total,rec_s2s,rec_ae,interp,fuse,valid_total. Doubles are
// %.17g so identical runs write identical bytes.
std::string loss_log_csv(const std::vector<EpochStats>& log);

struct CheckpointMeta {
    TrainConfig tc;
    std::size_t epoch = 0;
    double valid_loss = 0.0;
};

// Checkpoint directory layout: manifest.txt (key=value, first line pins the
// format version), params.bin (named raw tensors), vocab.txt (one token per
// line). The manifest records content hashes of the other two files; loading
// refuses version or hash mismatches.
void save_checkpoint(const std::string& dir, const SpaceFusionModel& model,
                     const Vocabulary& vocab, const CheckpointMeta& meta);

struct LoadedCheckpoint {
    SpaceFusionModel model;
    Vocabulary vocab;
    CheckpointMeta meta;
};
LoadedCheckpoint load_checkpoint(const std::string& dir);

}  // namespace spacefusion
