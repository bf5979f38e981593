#include "mmldf/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include "mmldf/errors.hpp"
#include "mmldf/random.hpp"

namespace mmldf {

namespace {

bool parse_double_strict(std::string_view s, double& out) {
    if (s.empty()) return false;
    // from_chars does not accept a leading '+'.
    if (s.front() == '+') s.remove_prefix(1);
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    auto res = std::from_chars(begin, end, out);
    return res.ec == std::errc() && res.ptr == end && std::isfinite(out);
}

bool parse_int_strict(std::string_view s, long& out) {
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    auto res = std::from_chars(begin, end, out);
    return res.ec == std::errc() && res.ptr == end;
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            out.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    out.push_back(field);
    return out;
}

bool is_blank(const std::string& line) {
    return line.find_first_not_of(" \t\r") == std::string::npos;
}

// Builds labels / label_map from raw per-sample tokens. Classes are keyed by
// numeric value when every token is numeric (so "1" and "+1" coincide), by
// the literal token otherwise; either way the map is sorted ascending.
void remap_labels(const std::vector<std::string>& tokens, std::vector<int>& labels,
                  std::vector<std::string>& label_map) {
    std::vector<double> values(tokens.size());
    bool numeric = true;
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (!parse_double_strict(tokens[i], values[i])) {
            numeric = false;
            break;
        }
    }
    labels.resize(tokens.size());
    label_map.clear();
    if (numeric) {
        std::map<double, std::string> classes;  // value -> first-seen token
        for (size_t i = 0; i < tokens.size(); ++i) classes.emplace(values[i], tokens[i]);
        std::map<double, int> index;
        for (const auto& [value, token] : classes) {
            index[value] = static_cast<int>(label_map.size());
            label_map.push_back(token);
        }
        for (size_t i = 0; i < tokens.size(); ++i) labels[i] = index[values[i]];
    } else {
        std::map<std::string, int> index;
        for (const auto& token : tokens) index.emplace(token, 0);
        for (auto& [token, idx] : index) {
            idx = static_cast<int>(label_map.size());
            label_map.push_back(token);
        }
        for (size_t i = 0; i < tokens.size(); ++i) labels[i] = index[tokens[i]];
    }
}

}  // namespace

LabeledDataset parse_libsvm(std::istream& in, std::optional<int> expected_dim) {
    std::vector<std::string> label_tokens;
    std::vector<std::vector<std::pair<long, double>>> rows;
    long max_index = 0;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank(line)) continue;
        auto tokens = split_ws(line);
        double label_value;
        if (!parse_double_strict(tokens[0], label_value)) {
            throw ParseError("non-numeric label token '" + std::string(tokens[0]) + "'", line_no);
        }
        label_tokens.push_back(std::string(tokens[0]));
        std::vector<std::pair<long, double>> entries;
        long prev_index = 0;
        for (size_t t = 1; t < tokens.size(); ++t) {
            auto tok = tokens[t];
            auto colon = tok.find(':');
            if (colon == std::string_view::npos) {
                throw ParseError("malformed feature token '" + std::string(tok) + "'", line_no);
            }
            long index;
            double value;
            if (!parse_int_strict(tok.substr(0, colon), index)) {
                throw ParseError("non-numeric index in token '" + std::string(tok) + "'", line_no);
            }
            if (!parse_double_strict(tok.substr(colon + 1), value)) {
                throw ParseError("non-numeric value in token '" + std::string(tok) + "'", line_no);
            }
            if (index < 1) {
                throw ParseError("index " + std::to_string(index) + " is not 1-based", line_no);
            }
            if (index <= prev_index) {
                throw ParseError("non-ascending index", line_no);
            }
            if (expected_dim && index > *expected_dim) {
                throw ParseError("index " + std::to_string(index) + " exceeds expected dimension " +
                                     std::to_string(*expected_dim),
                                 line_no);
            }
            prev_index = index;
            entries.emplace_back(index, value);
        }
        max_index = std::max(max_index, prev_index);
        rows.push_back(std::move(entries));
    }
    if (rows.empty()) {
        throw ParseError("empty input", line_no == 0 ? 1 : line_no);
    }
    const long d = std::max<long>(max_index, expected_dim.value_or(0));
    LabeledDataset ds;
    ds.features = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), d);
    for (size_t i = 0; i < rows.size(); ++i) {
        for (const auto& [index, value] : rows[i]) {
            ds.features(static_cast<Eigen::Index>(i), index - 1) = value;
        }
    }
    remap_labels(label_tokens, ds.labels, ds.label_map);
    return ds;
}

LabeledDataset parse_libsvm(const std::string& text, std::optional<int> expected_dim) {
    std::istringstream in(text);
    return parse_libsvm(in, expected_dim);
}

void serialize_libsvm(const LabeledDataset& ds, std::ostream& out) {
    char buf[64];
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
        out << ds.label_map[ds.labels[static_cast<size_t>(i)]];
        for (Eigen::Index j = 0; j < ds.d(); ++j) {
            const double v = ds.features(i, j);
            if (v == 0.0) continue;
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            out << ' ' << (j + 1) << ':' << buf;
        }
        out << '\n';
    }
}

LabeledDataset parse_csv(std::istream& in, const std::string& label_column, bool has_header) {
    std::string line;
    long line_no = 0;
    std::vector<std::string> header;
    long label_idx = -1;
    size_t width = 0;

    if (has_header) {
        while (std::getline(in, line)) {
            ++line_no;
            if (!is_blank(line)) break;
        }
        if (is_blank(line)) throw ParseError("empty input", std::max<long>(line_no, 1));
        header = split_csv_line(line);
        width = header.size();
        for (size_t j = 0; j < header.size(); ++j) {
            if (header[j] == label_column) {
                label_idx = static_cast<long>(j);
                break;
            }
        }
    }
    if (label_idx < 0) {
        long idx;
        if (parse_int_strict(label_column, idx)) {
            label_idx = idx;
        } else {
            throw ParseError("label column '" + label_column + "' not found",
                             has_header ? line_no : 1);
        }
    }

    std::vector<std::string> label_tokens;
    std::vector<std::vector<double>> rows;
    long data_row = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank(line)) continue;
        ++data_row;
        auto fields = split_csv_line(line);
        if (width == 0) width = fields.size();
        if (fields.size() != width) {
            throw ParseError("ragged row: expected " + std::to_string(width) + " fields, got " +
                                 std::to_string(fields.size()),
                             line_no);
        }
        if (label_idx >= static_cast<long>(width)) {
            throw ParseError("label column index " + std::to_string(label_idx) +
                                 " out of range for " + std::to_string(width) + " columns",
                             line_no);
        }
        std::vector<double> row;
        row.reserve(width - 1);
        for (size_t j = 0; j < fields.size(); ++j) {
            if (static_cast<long>(j) == label_idx) continue;
            double v;
            if (!parse_double_strict(fields[j], v)) {
                throw ParseError("non-numeric feature cell row " + std::to_string(data_row) +
                                     " col " + std::to_string(j + 1),
                                 line_no);
            }
            row.push_back(v);
        }
        label_tokens.push_back(fields[static_cast<size_t>(label_idx)]);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("empty input", std::max<long>(line_no, 1));

    LabeledDataset ds;
    ds.features.resize(static_cast<Eigen::Index>(rows.size()),
                       static_cast<Eigen::Index>(rows[0].size()));
    for (size_t i = 0; i < rows.size(); ++i) {
        for (size_t j = 0; j < rows[i].size(); ++j) {
            ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    remap_labels(label_tokens, ds.labels, ds.label_map);
    return ds;
}

LabeledDataset parse_csv(const std::string& text, const std::string& label_column,
                         bool has_header) {
    std::istringstream in(text);
    return parse_csv(in, label_column, has_header);
}

StandardizationStats fit_standardize(const LabeledDataset& ds) {
    StandardizationStats stats;
    const double n = static_cast<double>(ds.n());
    stats.mean = ds.features.colwise().mean();
    Eigen::MatrixXd centered = ds.features.rowwise() - stats.mean.transpose();
    stats.stddev = (centered.array().square().colwise().sum() / n).sqrt();
    return stats;
}

LabeledDataset apply_standardize(const LabeledDataset& ds, const StandardizationStats& stats) {
    if (stats.mean.size() != ds.d()) {
        throw ConfigError("apply_standardize: stats have dimension " +
                          std::to_string(stats.mean.size()) + ", dataset has " +
                          std::to_string(ds.d()));
    }
    LabeledDataset out = ds;
    out.features.rowwise() -= stats.mean.transpose();
    for (Eigen::Index j = 0; j < out.d(); ++j) {
        const double sd = stats.stddev(j);
        if (sd >= 1e-12) out.features.col(j) /= sd;  // constant columns: center only
    }
    return out;
}

namespace {

LabeledDataset take_rows(const LabeledDataset& ds, const std::vector<int>& idx) {
    LabeledDataset out;
    out.features.resize(static_cast<Eigen::Index>(idx.size()), ds.d());
    out.labels.resize(idx.size());
    out.label_map = ds.label_map;
    for (size_t i = 0; i < idx.size(); ++i) {
        out.features.row(static_cast<Eigen::Index>(i)) = ds.features.row(idx[i]);
        out.labels[i] = ds.labels[static_cast<size_t>(idx[i])];
    }
    return out;
}

}  // namespace

std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& ds, int train_count,
                                                std::uint64_t seed) {
    const long n = static_cast<long>(ds.n());
    const int k = ds.num_classes();
    if (train_count <= 0 || train_count >= n) {
        throw ConfigError("split: train_count " + std::to_string(train_count) +
                          " out of range (0, " + std::to_string(n) + ")");
    }
    if (train_count < k) {
        throw ConfigError("split: cannot stratify " + std::to_string(train_count) +
                          " train samples over " + std::to_string(k) + " classes");
    }

    std::vector<std::vector<int>> groups(static_cast<size_t>(k));
    for (size_t i = 0; i < ds.labels.size(); ++i) {
        groups[static_cast<size_t>(ds.labels[i])].push_back(static_cast<int>(i));
    }

    // Largest-remainder quotas, then bump empty classes from the fullest one.
    std::vector<int> quota(static_cast<size_t>(k));
    std::vector<std::pair<double, int>> rema;
    int assigned = 0;
    for (int c = 0; c < k; ++c) {
        const double exact =
            static_cast<double>(train_count) * static_cast<double>(groups[c].size()) / n;
        quota[c] = static_cast<int>(exact);
        assigned += quota[c];
        rema.emplace_back(exact - quota[c], c);
    }
    std::sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (int i = 0; i < train_count - assigned; ++i) quota[rema[static_cast<size_t>(i)].second]++;
    for (int c = 0; c < k; ++c) {
        while (quota[c] == 0) {
            int donor = static_cast<int>(std::max_element(quota.begin(), quota.end()) -
                                         quota.begin());
            quota[donor]--;
            quota[c]++;
        }
    }

    std::vector<int> train_idx, test_idx;
    for (int c = 0; c < k; ++c) {
        std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
        std::vector<int> order = groups[c];
        std::shuffle(order.begin(), order.end(), rng);
        for (size_t i = 0; i < order.size(); ++i) {
            (static_cast<int>(i) < quota[c] ? train_idx : test_idx).push_back(order[i]);
        }
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());
    return {take_rows(ds, train_idx), take_rows(ds, test_idx)};
}

void SynthSpec::validate() const {
    if (classes < 1 || samples_per_class < 1 || informative_dims < 1 || noise_dims < 0 ||
        redundant_dims < 0) {
        throw ConfigError("synth_blobs: counts must be positive (noise/redundant may be 0)");
    }
    if (!(class_separation >= 0.0) || !(noise_scale >= 0.0)) {
        throw ConfigError("synth_blobs: separation and noise_scale must be non-negative");
    }
}

LabeledDataset synth_blobs(const SynthSpec& spec, std::uint64_t seed) {
    spec.validate();
    const int k = spec.classes;
    const int per = spec.samples_per_class;
    const int di = spec.informative_dims;
    const int dn = spec.noise_dims;
    const int dr = spec.redundant_dims;
    const int d = spec.total_dims();
    const Eigen::Index n = static_cast<Eigen::Index>(k) * per;

    std::mt19937_64 rng(splitmix64(seed));
    std::normal_distribution<double> normal(0.0, 1.0);

    // Seeded unit direction per class on the informative block.
    Eigen::MatrixXd means = Eigen::MatrixXd::Zero(k, di);
    for (int c = 0; c < k; ++c) {
        Eigen::VectorXd u(di);
        double norm = 0.0;
        do {
            for (int j = 0; j < di; ++j) u(j) = normal(rng);
            norm = u.norm();
        } while (norm < 1e-12);
        means.row(c) = spec.class_separation * (u / norm).transpose();
    }

    // Each redundant dim mixes the informative block with fixed seeded weights.
    Eigen::MatrixXd mix(dr, di);
    for (int j = 0; j < dr; ++j) {
        for (int i = 0; i < di; ++i) mix(j, i) = normal(rng) / std::sqrt(static_cast<double>(di));
    }
    constexpr double kRedundantJitter = 0.01;

    LabeledDataset ds;
    ds.features.resize(n, d);
    ds.labels.resize(static_cast<size_t>(n));
    for (int c = 0; c < k; ++c) ds.label_map.push_back(std::to_string(c));

    Eigen::Index row = 0;
    for (int c = 0; c < k; ++c) {
        for (int s = 0; s < per; ++s, ++row) {
            ds.labels[static_cast<size_t>(row)] = c;
            Eigen::VectorXd info(di);
            for (int j = 0; j < di; ++j) info(j) = means(c, j) + normal(rng);
            ds.features.row(row).head(di) = info.transpose();
            for (int j = 0; j < dn; ++j) ds.features(row, di + j) = spec.noise_scale * normal(rng);
            for (int j = 0; j < dr; ++j) {
                ds.features(row, di + dn + j) =
                    mix.row(j).dot(info) + kRedundantJitter * normal(rng);
            }
        }
    }
    return ds;
}

LabeledDataset align_labels(const LabeledDataset& ds,
                            const std::vector<std::string>& reference_map) {
    std::map<std::string, int> index;
    for (size_t k = 0; k < reference_map.size(); ++k) {
        index[reference_map[k]] = static_cast<int>(k);
    }
    LabeledDataset out = ds;
    out.label_map = reference_map;
    for (size_t i = 0; i < ds.labels.size(); ++i) {
        const std::string& token = ds.label_map[static_cast<size_t>(ds.labels[i])];
        auto it = index.find(token);
        if (it == index.end()) {
            throw ConfigError("align_labels: label '" + token + "' not present in reference");
        }
        out.labels[i] = it->second;
    }
    return out;
}

std::string dataset_digest(const LabeledDataset& ds) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](const void* data, size_t size) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (size_t i = 0; i < size; ++i) {
            h ^= p[i];
            h *= 0x100000001b3ULL;
        }
    };
    const std::int64_t shape[3] = {ds.n(), ds.d(), ds.num_classes()};
    mix(shape, sizeof(shape));
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
        for (Eigen::Index j = 0; j < ds.d(); ++j) {
            const double v = ds.features(i, j);
            mix(&v, sizeof(v));
        }
    }
    for (int label : ds.labels) {
        const std::int32_t l = label;
        mix(&l, sizeof(l));
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace mmldf
