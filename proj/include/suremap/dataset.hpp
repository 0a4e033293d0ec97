#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "suremap/model.hpp"

namespace suremap {

// Raw per-record data together with the attribute space it lives in.
//
// Two kinds of record are supported. Metric records carry one real value per
// row and are summarized by group means. AUC records carry a classifier score
// and a binary label per row and are summarized by per-group AUC with
// Mann-Whitney variances.
struct Dataset {
    AttributeSpace space;
    RecordBatch batch;
    // 0/1 label per row; empty for metric records.
    std::vector<int> labels;

    bool is_auc() const { return !labels.empty(); }
    int task_count() const;
    std::vector<std::string> task_ids() const;
    // Row indices of each task, in file order.
    std::vector<std::vector<std::size_t>> rows_by_task() const;
    // New dataset holding the given rows (repeats allowed) with the same space and tasks.
    Dataset select(std::span<const std::size_t> rows) const;
};

struct CsvOptions {
    // Fixes attribute order and level labels. Without it, attributes follow
    // the header order and levels are the sorted distinct labels.
    std::optional<AttributeSpace> space;
    // Expect `label` and `score` columns instead of `value`.
    bool auc = false;
};

// Header row names the columns: `value` (or `label` and `score`), optional
// `task`, and one column per attribute. Fields may be double-quoted.
// Malformed input raises DataError with the offending line number.
Dataset parse_csv(std::istream& in, const CsvOptions& options = {});
Dataset read_csv_file(const std::string& path, const CsvOptions& options = {});
void write_csv(std::ostream& out, const Dataset& data);

// Mann-Whitney AUC of scores against 0/1 labels, ties counted one half.
double auc_value(std::span<const double> scores, std::span<const int> labels);

// One summary per task. Metric records give group means with sigma2 pooled
// over all tasks. AUC records give group AUCs whose variance comes from
// auc_group_variance; groups lacking either class are treated as empty.
std::vector<TaskSummary> summarize_dataset(const Dataset& data, const SummarizeOptions& options = {});

// Per-task reference values from all rows, excluding groups below `threshold`
// rows (and, for AUC records, groups lacking either class).
std::vector<GroundTruth> dataset_truth(const Dataset& data, int threshold = 40);

// Per-task row counts of every group.
std::vector<Eigen::VectorXi> group_counts(const Dataset& data);

}  // namespace suremap
