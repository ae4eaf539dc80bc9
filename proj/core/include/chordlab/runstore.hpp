#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chordlab/metrics.hpp"
#include "chordlab/model.hpp"

namespace chordlab {

struct FoldMetrics {
    int fold = 0;
    MetricReport metrics;
};

// One persisted experiment outcome; a line in the append-only runs.jsonl store.
struct RunRecord {
    std::string run_id;  // ULID
    std::string kind;
    std::string dataset;
    std::string status = "ok";  // ok | failed
    std::uint64_t seed = 0;
    int k = 0;
    int trial = -1;
    Hyperparams hp;
    double lr = 0;
    int batch = 0;
    int max_epochs = 0;
    int patience = 0;
    double clip_norm = 0;
    std::vector<FoldMetrics> folds;
    MetricReport mean;    // arithmetic mean over folds
    MetricReport stddev;  // population stddev over folds
    double wall_time_s = 0;
    std::vector<std::string> checkpoints;
};

// 26-char Crockford-base32 ULID (48-bit ms timestamp + 80 random bits).
std::string new_ulid();

// Recomputes mean/stddev from the fold metrics.
void aggregate_folds(RunRecord& record);

void record_run(const RunRecord& record, const std::string& store_path);

struct RunFilter {
    std::string kind;     // empty = any
    std::string dataset;  // empty = any
};

// Throws StoreCorrupt naming the first malformed line.
std::vector<RunRecord> list_runs(const std::string& store_path, const RunFilter& filter = {});

}  // namespace chordlab
