#include "suremap/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "suremap/error.hpp"
#include "suremap/io.hpp"

namespace suremap {

int Dataset::task_count() const {
    return std::max<int>(batch.task_count(), static_cast<int>(batch.task_names.size()));
}

std::vector<std::string> Dataset::task_ids() const {
    std::vector<std::string> ids(task_count());
    for (int t = 0; t < task_count(); ++t)
        ids[t] = t < static_cast<int>(batch.task_names.size()) ? batch.task_names[t] : std::to_string(t);
    return ids;
}

std::vector<std::vector<std::size_t>> Dataset::rows_by_task() const {
    std::vector<std::vector<std::size_t>> rows(task_count());
    for (std::size_t i = 0; i < batch.size(); ++i) rows[batch.task(i)].push_back(i);
    return rows;
}

Dataset Dataset::select(std::span<const std::size_t> rows) const {
    Dataset out;
    out.space = space;
    out.batch.task_names = batch.task_names;
    out.batch.reserve(rows.size());
    if (is_auc()) out.labels.reserve(rows.size());
    for (std::size_t i : rows) {
        out.batch.add(batch.group(i), batch.value(i), batch.task(i));
        if (is_auc()) out.labels.push_back(labels[i]);
    }
    return out;
}

namespace {

struct Record {
    std::vector<std::string> fields;
    int line = 0;
};

// Splits CSV text into records. Quoted fields may contain commas, doubled
// quotes and line breaks; blank lines are skipped.
std::vector<Record> split_records(const std::string& text) {
    std::vector<Record> records;
    Record current;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    int line = 1;
    current.line = 1;

    auto end_record = [&]() {
        const bool blank = current.fields.empty() && field.empty() && !field_started;
        if (!blank) {
            current.fields.push_back(field);
            records.push_back(std::move(current));
        }
        current = Record{};
        field.clear();
        field_started = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        if (current.fields.empty() && field.empty() && !field_started) current.line = line;
        if (c == '"') {
            if (!field.empty())
                throw DataError("line " + std::to_string(line) + ": quote inside an unquoted field");
            in_quotes = true;
            field_started = true;
        } else if (c == ',') {
            current.fields.push_back(field);
            field.clear();
            field_started = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            end_record();
            ++line;
        } else {
            field.push_back(c);
        }
    }
    if (in_quotes) throw DataError("line " + std::to_string(current.line) + ": unterminated quoted field");
    end_record();
    return records;
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

double parse_number(const std::string& raw, int line, const std::string& column) {
    const std::string s = trim(raw);
    double v = 0.0;
    const char* begin = s.data();
    if (!s.empty() && s[0] == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
        throw DataError("line " + std::to_string(line) + ": column '" + column + "' is not a finite number: '" +
                        raw + "'");
    return v;
}

int parse_label(const std::string& raw, int line) {
    const std::string s = trim(raw);
    if (s == "0") return 0;
    if (s == "1") return 1;
    throw DataError("line " + std::to_string(line) + ": column 'label' must be 0 or 1, got '" + raw + "'");
}

}  // namespace

Dataset parse_csv(std::istream& in, const CsvOptions& options) {
    std::ostringstream buffer;
    buffer << in.rdbuf();
    const auto records = split_records(buffer.str());
    if (records.empty()) throw DataError("CSV input is empty");

    const auto& header = records[0].fields;
    std::map<std::string, int> column_of;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string name = trim(header[c]);
        if (name.empty()) throw DataError("line 1: empty column name in header");
        if (!column_of.emplace(name, static_cast<int>(c)).second)
            throw DataError("line 1: duplicate column '" + name + "'");
    }
    const std::vector<std::string> value_columns =
        options.auc ? std::vector<std::string>{"label", "score"} : std::vector<std::string>{"value"};
    for (const auto& name : value_columns)
        if (!column_of.count(name)) throw DataError("line 1: missing required column '" + name + "'");
    const int task_col = column_of.count("task") ? column_of["task"] : -1;

    std::vector<int> attr_cols;
    std::vector<std::string> attr_names;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string name = trim(header[c]);
        if (name == "task" || std::find(value_columns.begin(), value_columns.end(), name) != value_columns.end())
            continue;
        attr_cols.push_back(static_cast<int>(c));
        attr_names.push_back(name);
    }
    if (attr_cols.empty()) throw DataError("line 1: no attribute columns in header");

    for (std::size_t r = 1; r < records.size(); ++r)
        if (records[r].fields.size() != header.size())
            throw DataError("line " + std::to_string(records[r].line) + ": expected " +
                            std::to_string(header.size()) + " fields, found " +
                            std::to_string(records[r].fields.size()));

    Dataset data;
    // Column of each space attribute, in space order.
    std::vector<int> column_for_attr;
    if (options.space) {
        data.space = *options.space;
        if (data.space.k() != static_cast<int>(attr_names.size()))
            throw DataError("line 1: header has " + std::to_string(attr_names.size()) +
                            " attribute columns but the space declares " + std::to_string(data.space.k()));
        for (int a = 0; a < data.space.k(); ++a) {
            const auto it = std::find(attr_names.begin(), attr_names.end(), data.space.attribute(a).name);
            if (it == attr_names.end())
                throw DataError("line 1: attribute '" + data.space.attribute(a).name + "' missing from header");
            column_for_attr.push_back(attr_cols[it - attr_names.begin()]);
        }
    } else {
        std::vector<Attribute> attrs;
        for (std::size_t a = 0; a < attr_cols.size(); ++a) {
            std::set<std::string> levels;
            for (std::size_t r = 1; r < records.size(); ++r) levels.insert(trim(records[r].fields[attr_cols[a]]));
            attrs.push_back({attr_names[a], std::vector<std::string>(levels.begin(), levels.end())});
        }
        if (records.size() < 2) throw DataError("CSV input has a header but no rows");
        data.space = AttributeSpace(std::move(attrs));
        column_for_attr = attr_cols;
    }

    // Task ids are numbered in sorted order so that row order does not matter.
    std::map<std::string, int> task_index;
    if (task_col >= 0) {
        for (std::size_t r = 1; r < records.size(); ++r) task_index.emplace(trim(records[r].fields[task_col]), 0);
        int t = 0;
        for (auto& [id, idx] : task_index) {
            idx = t++;
            data.batch.task_names.push_back(id);
        }
    } else {
        data.batch.task_names = {"all"};
    }

    data.batch.reserve(records.size() - 1);
    std::vector<int> classes(data.space.k());
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        for (int a = 0; a < data.space.k(); ++a) {
            try {
                classes[a] = data.space.level_index(a, trim(rec.fields[column_for_attr[a]]));
            } catch (const DomainError& e) {
                throw DataError("line " + std::to_string(rec.line) + ": " + e.what());
            }
        }
        const int task = task_col >= 0 ? task_index.at(trim(rec.fields[task_col])) : 0;
        if (options.auc) {
            data.labels.push_back(parse_label(rec.fields[column_of["label"]], rec.line));
            data.batch.add(data.space, classes, parse_number(rec.fields[column_of["score"]], rec.line, "score"), task);
        } else {
            data.batch.add(data.space, classes, parse_number(rec.fields[column_of["value"]], rec.line, "value"), task);
        }
    }
    if (data.batch.empty()) throw DataError("CSV input has a header but no rows");
    return data;
}

Dataset read_csv_file(const std::string& path, const CsvOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    return parse_csv(in, options);
}

namespace {

std::string quote_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

void write_csv(std::ostream& out, const Dataset& data) {
    for (const auto& attr : data.space.attributes()) out << quote_field(attr.name) << ',';
    out << "task," << (data.is_auc() ? "label,score" : "value") << '\n';
    const auto ids = data.task_ids();
    for (std::size_t i = 0; i < data.batch.size(); ++i) {
        const auto classes = data.space.group_classes(data.batch.group(i));
        for (int a = 0; a < data.space.k(); ++a) out << quote_field(data.space.attribute(a).levels[classes[a]]) << ',';
        out << quote_field(ids[data.batch.task(i)]) << ',';
        if (data.is_auc()) out << data.labels[i] << ',';
        out << format_number(data.batch.value(i)) << '\n';
    }
}

double auc_value(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw DomainError("scores and labels differ in length");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double positive_rank_sum = 0.0;
    std::int64_t n1 = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
        for (std::size_t m = i; m < j; ++m)
            if (labels[order[m]] == 1) {
                positive_rank_sum += rank;
                ++n1;
            }
        i = j;
    }
    const std::int64_t n0 = static_cast<std::int64_t>(n) - n1;
    if (n0 == 0 || n1 == 0) throw DomainError("AUC needs both classes");
    const double u = positive_rank_sum - 0.5 * static_cast<double>(n1) * static_cast<double>(n1 + 1);
    return u / (static_cast<double>(n0) * static_cast<double>(n1));
}

namespace {

struct GroupAuc {
    double auc = 0.0;
    std::int64_t rows = 0;
    std::int64_t positives = 0;
    bool valid() const { return positives > 0 && positives < rows; }
};

std::vector<std::vector<GroupAuc>> group_aucs(const Dataset& data) {
    const int d = data.space.d();
    const int tc = data.task_count();
    std::vector<std::vector<std::vector<std::size_t>>> rows(tc, std::vector<std::vector<std::size_t>>(d));
    for (std::size_t i = 0; i < data.batch.size(); ++i) rows[data.batch.task(i)][data.batch.group(i)].push_back(i);
    std::vector<std::vector<GroupAuc>> out(tc, std::vector<GroupAuc>(d));
    std::vector<double> scores;
    std::vector<int> labels;
    for (int t = 0; t < tc; ++t)
        for (int g = 0; g < d; ++g) {
            auto& cell = out[t][g];
            scores.clear();
            labels.clear();
            for (std::size_t i : rows[t][g]) {
                scores.push_back(data.batch.value(i));
                labels.push_back(data.labels[i]);
                cell.positives += data.labels[i];
            }
            cell.rows = static_cast<std::int64_t>(rows[t][g].size());
            if (cell.valid()) cell.auc = auc_value(scores, labels);
        }
    return out;
}

}  // namespace

std::vector<TaskSummary> summarize_dataset(const Dataset& data, const SummarizeOptions& options) {
    if (!data.is_auc()) return summarize_multi(data.batch, data.space, options);
    if (data.batch.empty()) throw DataError("cannot summarize an empty batch");
    const int d = data.space.d();
    const auto cells = group_aucs(data);
    const auto ids = data.task_ids();
    std::vector<TaskSummary> out(cells.size());
    for (std::size_t t = 0; t < cells.size(); ++t) {
        auto& s = out[t];
        s.id = ids[t];
        s.y = Eigen::VectorXd::Zero(d);
        s.n = Eigen::VectorXi::Zero(d);
        s.group_variance = Eigen::VectorXd::Ones(d);
        s.sigma2 = 1.0;
        for (int g = 0; g < d; ++g) {
            const auto& c = cells[t][g];
            if (!c.valid()) continue;
            s.y[g] = c.auc;
            s.n[g] = static_cast<int>(c.rows);
            s.group_variance[g] = auc_group_variance(c.rows, c.rows - c.positives, c.positives);
        }
    }
    return out;
}

std::vector<GroundTruth> dataset_truth(const Dataset& data, int threshold) {
    std::vector<GroundTruth> out;
    if (!data.is_auc()) {
        for (int t = 0; t < data.task_count(); ++t)
            out.push_back(ground_truth(data.batch.task_slice(t), data.space, threshold));
        return out;
    }
    const int d = data.space.d();
    for (const auto& task : group_aucs(data)) {
        GroundTruth truth{Eigen::VectorXd::Zero(d), std::vector<bool>(d, false)};
        for (int g = 0; g < d; ++g) {
            truth.mu[g] = task[g].auc;
            truth.included[g] = task[g].valid() && task[g].rows >= threshold;
        }
        out.push_back(std::move(truth));
    }
    return out;
}

std::vector<Eigen::VectorXi> group_counts(const Dataset& data) {
    std::vector<Eigen::VectorXi> counts(data.task_count(), Eigen::VectorXi::Zero(data.space.d()));
    for (std::size_t i = 0; i < data.batch.size(); ++i) ++counts[data.batch.task(i)][data.batch.group(i)];
    return counts;
}

}  // namespace suremap
