#include "autogm/graph.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "autogm/rng.hpp"

namespace autogm {

namespace {

[[noreturn]] void fail(const std::string& file, std::int64_t line, const std::string& what) {
    throw DatasetError(file + ":" + std::to_string(line) + ": " + what);
}

[[noreturn]] void fail(const std::string& file, const std::string& what) {
    throw DatasetError(file + ": " + what);
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DatasetError(path.filename().string() + ": missing file (" + path.string() + ")");
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    // A single trailing blank line is treated as a terminator, not a record.
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

std::vector<std::string_view> split_tabs(const std::string& line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find('\t', start);
        if (pos == std::string::npos) {
            out.emplace_back(line.data() + start, line.size() - start);
            break;
        }
        out.emplace_back(line.data() + start, pos - start);
        start = pos + 1;
    }
    return out;
}

std::int64_t parse_int(std::string_view tok, const std::string& file, std::int64_t line) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        fail(file, line, "expected integer, got \"" + std::string(tok) + "\"");
    }
    return v;
}

double parse_real(std::string_view tok, const std::string& file, std::int64_t line) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        fail(file, line, "non-numeric feature token \"" + std::string(tok) + "\"");
    }
    return v;
}

}  // namespace

const char* to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

SparseGraph SparseGraph::from_edges(
    std::int64_t node_count,
    const std::vector<std::pair<std::int32_t, std::int32_t>>& edges) {
    std::set<std::pair<std::int32_t, std::int32_t>> unique_edges;
    for (auto [u, v] : edges) {
        if (u == v) continue;
        unique_edges.emplace(std::min(u, v), std::max(u, v));
    }

    std::vector<std::int64_t> deg(node_count, 0);
    for (auto [u, v] : unique_edges) {
        ++deg[u];
        ++deg[v];
    }

    SparseGraph g;
    g.node_count = node_count;
    g.edge_count = static_cast<std::int64_t>(unique_edges.size());
    g.row_offsets.assign(node_count + 1, 0);
    for (std::int64_t i = 0; i < node_count; ++i) {
        g.row_offsets[i + 1] = g.row_offsets[i] + deg[i];
    }
    g.col_indices.resize(2 * g.edge_count);
    std::vector<std::int64_t> cursor(g.row_offsets.begin(), g.row_offsets.end() - 1);
    for (auto [u, v] : unique_edges) {
        g.col_indices[cursor[u]++] = v;
        g.col_indices[cursor[v]++] = u;
    }
    for (std::int64_t i = 0; i < node_count; ++i) {
        std::sort(g.col_indices.begin() + g.row_offsets[i],
                  g.col_indices.begin() + g.row_offsets[i + 1]);
    }
    return g;
}

void SparseGraph::validate() const {
    if (node_count < 0 || edge_count < 0) throw std::logic_error("negative graph size");
    if (static_cast<std::int64_t>(row_offsets.size()) != node_count + 1) {
        throw std::logic_error("row_offsets size mismatch");
    }
    if (row_offsets.front() != 0 || row_offsets.back() != 2 * edge_count) {
        throw std::logic_error("row_offsets endpoints invalid");
    }
    if (static_cast<std::int64_t>(col_indices.size()) != 2 * edge_count) {
        throw std::logic_error("col_indices size mismatch");
    }
    std::set<std::pair<std::int32_t, std::int32_t>> seen;
    for (std::int64_t u = 0; u < node_count; ++u) {
        if (row_offsets[u + 1] < row_offsets[u]) throw std::logic_error("row_offsets decreasing");
        for (std::int64_t e = row_offsets[u]; e < row_offsets[u + 1]; ++e) {
            std::int32_t v = col_indices[e];
            if (v < 0 || v >= node_count) throw std::logic_error("column index out of range");
            if (v == u) throw std::logic_error("self-loop present");
            if (e > row_offsets[u] && col_indices[e - 1] >= v) {
                throw std::logic_error("columns not strictly increasing");
            }
            seen.emplace(static_cast<std::int32_t>(u), v);
        }
    }
    for (auto [u, v] : seen) {
        if (!seen.count({v, u})) throw std::logic_error("adjacency not symmetric");
    }
}

std::vector<std::int64_t> Dataset::split_indices(Split s) const {
    std::vector<std::int64_t> out;
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(split.size()); ++i) {
        if (split[i] == s) out.push_back(i);
    }
    return out;
}

void Dataset::validate() const {
    graph.validate();
    const std::int64_t n = graph.node_count;
    if (features.rows() != n) throw std::logic_error("feature row count != n");
    if (static_cast<std::int64_t>(labels.size()) != n) throw std::logic_error("label count != n");
    if (static_cast<std::int64_t>(split.size()) != n) throw std::logic_error("split count != n");
    if (class_count < 2) throw std::logic_error("class_count < 2");
    for (auto l : labels) {
        if (l < 0 || l >= class_count) throw std::logic_error("label out of range");
    }
    std::array<std::int64_t, 3> counts{0, 0, 0};
    for (auto s : split) ++counts[static_cast<std::size_t>(s)];
    for (auto c : counts) {
        if (c == 0) throw std::logic_error("empty split");
    }
    if (!features.allFinite()) throw std::logic_error("non-finite feature");
}

Dataset load_dataset(const std::filesystem::path& dir) {
    const auto features_path = dir / "features.tsv";
    const auto graph_path = dir / "graph.tsv";
    const auto labels_path = dir / "labels.tsv";
    const auto splits_path = dir / "splits.tsv";

    // features.tsv fixes n and d0.
    auto feature_lines = read_lines(features_path);
    const std::int64_t n = static_cast<std::int64_t>(feature_lines.size());
    if (n == 0) fail("features.tsv", "no feature rows");

    std::int64_t d0 = -1;
    Eigen::MatrixXd features;
    for (std::int64_t i = 0; i < n; ++i) {
        auto toks = split_tabs(feature_lines[i]);
        if (d0 < 0) {
            d0 = static_cast<std::int64_t>(toks.size());
            features.resize(n, d0);
        }
        if (static_cast<std::int64_t>(toks.size()) != d0) {
            fail("features.tsv", i + 1,
                 "expected " + std::to_string(d0) + " columns, got " + std::to_string(toks.size()));
        }
        for (std::int64_t j = 0; j < d0; ++j) {
            features(i, j) = parse_real(toks[j], "features.tsv", i + 1);
        }
    }

    auto graph_lines = read_lines(graph_path);
    std::vector<std::pair<std::int32_t, std::int32_t>> edges;
    edges.reserve(graph_lines.size());
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(graph_lines.size()); ++i) {
        if (graph_lines[i].empty()) continue;
        auto toks = split_tabs(graph_lines[i]);
        if (toks.size() != 2) fail("graph.tsv", i + 1, "expected \"u<TAB>v\"");
        std::int64_t u = parse_int(toks[0], "graph.tsv", i + 1);
        std::int64_t v = parse_int(toks[1], "graph.tsv", i + 1);
        if (u < 0 || u >= n || v < 0 || v >= n) fail("graph.tsv", i + 1, "node index out of range");
        if (u == v) {
            std::cerr << "graph.tsv:" << (i + 1) << ": warning: self-loop on node " << u
                      << " dropped\n";
            continue;
        }
        edges.emplace_back(static_cast<std::int32_t>(u), static_cast<std::int32_t>(v));
    }

    auto label_lines = read_lines(labels_path);
    if (static_cast<std::int64_t>(label_lines.size()) != n) {
        fail("labels.tsv", "row-count mismatch: " + std::to_string(label_lines.size()) +
                               " rows vs " + std::to_string(n) + " feature rows");
    }
    std::vector<std::int32_t> labels(n);
    std::int32_t max_label = -1;
    for (std::int64_t i = 0; i < n; ++i) {
        std::int64_t l = parse_int(label_lines[i], "labels.tsv", i + 1);
        if (l < 0) fail("labels.tsv", i + 1, "negative label");
        labels[i] = static_cast<std::int32_t>(l);
        max_label = std::max(max_label, labels[i]);
    }
    if (max_label < 1) fail("labels.tsv", "fewer than two classes present");

    auto split_lines = read_lines(splits_path);
    if (static_cast<std::int64_t>(split_lines.size()) != n) {
        fail("splits.tsv", "row-count mismatch: " + std::to_string(split_lines.size()) +
                               " rows vs " + std::to_string(n) + " feature rows");
    }
    std::vector<Split> split(n);
    for (std::int64_t i = 0; i < n; ++i) {
        const std::string& tag = split_lines[i];
        if (tag == "train") split[i] = Split::train;
        else if (tag == "val") split[i] = Split::val;
        else if (tag == "test") split[i] = Split::test;
        else fail("splits.tsv", i + 1, "unknown split tag \"" + tag + "\"");
    }
    for (Split s : {Split::train, Split::val, Split::test}) {
        if (std::count(split.begin(), split.end(), s) == 0) {
            fail("splits.tsv", std::string("empty split \"") + to_string(s) + "\"");
        }
    }

    Dataset dataset;
    dataset.graph = SparseGraph::from_edges(n, edges);
    dataset.features = std::move(features);
    dataset.labels = std::move(labels);
    dataset.class_count = max_label + 1;
    dataset.split = std::move(split);
    dataset.validate();
    return dataset;
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const std::int64_t n = dataset.node_count();

    {
        std::ofstream out(dir / "graph.tsv");
        for (std::int64_t u = 0; u < n; ++u) {
            for (std::int64_t e = dataset.graph.row_offsets[u]; e < dataset.graph.row_offsets[u + 1];
                 ++e) {
                std::int32_t v = dataset.graph.col_indices[e];
                if (u < v) out << u << '\t' << v << '\n';
            }
        }
    }
    {
        std::ofstream out(dir / "features.tsv");
        char buf[64];
        for (std::int64_t i = 0; i < n; ++i) {
            for (std::int64_t j = 0; j < dataset.features.cols(); ++j) {
                std::snprintf(buf, sizeof(buf), "%.17g", dataset.features(i, j));
                if (j) out << '\t';
                out << buf;
            }
            out << '\n';
        }
    }
    {
        std::ofstream out(dir / "labels.tsv");
        for (std::int64_t i = 0; i < n; ++i) out << dataset.labels[i] << '\n';
    }
    {
        std::ofstream out(dir / "splits.tsv");
        for (std::int64_t i = 0; i < n; ++i) out << to_string(dataset.split[i]) << '\n';
    }
}

std::vector<std::int64_t> degree_vector(const SparseGraph& graph) {
    std::vector<std::int64_t> deg(graph.node_count);
    for (std::int64_t i = 0; i < graph.node_count; ++i) deg[i] = graph.degree(i);
    return deg;
}

Dataset generate_sbm(std::int64_t node_count, std::int32_t communities, double p_in, double p_out,
                     std::int32_t feature_dim, double noise, std::uint64_t seed) {
    if (communities < 2 || node_count < communities) {
        throw std::invalid_argument("generate_sbm: need node_count >= communities >= 2");
    }
    if (!(p_out >= 0.0 && p_out <= p_in && p_in <= 1.0)) {
        throw std::invalid_argument("generate_sbm: need 0 <= p_out <= p_in <= 1");
    }
    if (feature_dim < 1 || noise < 0.0) {
        throw std::invalid_argument("generate_sbm: feature_dim >= 1 and noise >= 0 required");
    }

    auto rng = make_rng(seed);

    // Contiguous balanced blocks: sizes differ by at most one.
    std::vector<std::int32_t> labels(node_count);
    for (std::int64_t i = 0; i < node_count; ++i) {
        labels[i] = static_cast<std::int32_t>(i * communities / node_count);
    }

    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::vector<std::pair<std::int32_t, std::int32_t>> edges;
    for (std::int64_t u = 0; u < node_count; ++u) {
        for (std::int64_t v = u + 1; v < node_count; ++v) {
            const double p = labels[u] == labels[v] ? p_in : p_out;
            if (coin(rng) < p) {
                edges.emplace_back(static_cast<std::int32_t>(u), static_cast<std::int32_t>(v));
            }
        }
    }

    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd features(node_count, feature_dim);
    for (std::int64_t i = 0; i < node_count; ++i) {
        for (std::int32_t j = 0; j < feature_dim; ++j) {
            const double one_hot = (j == labels[i] % feature_dim) ? 1.0 : 0.0;
            features(i, j) = one_hot + (noise > 0.0 ? noise * gauss(rng) : 0.0);
        }
    }

    // 20/30/50 stratified by label.
    std::vector<Split> split(node_count, Split::test);
    for (std::int32_t c = 0; c < communities; ++c) {
        std::vector<std::int64_t> members;
        for (std::int64_t i = 0; i < node_count; ++i) {
            if (labels[i] == c) members.push_back(i);
        }
        std::shuffle(members.begin(), members.end(), rng);
        const auto sz = static_cast<std::int64_t>(members.size());
        const auto n_train = static_cast<std::int64_t>(std::llround(0.2 * sz));
        const auto n_val = static_cast<std::int64_t>(std::llround(0.3 * sz));
        for (std::int64_t i = 0; i < sz; ++i) {
            if (i < n_train) split[members[i]] = Split::train;
            else if (i < n_train + n_val) split[members[i]] = Split::val;
        }
    }
    // Tiny graphs can leave a split empty after rounding; reassign from test.
    for (Split s : {Split::train, Split::val}) {
        if (std::count(split.begin(), split.end(), s) == 0) {
            auto it = std::find(split.begin(), split.end(), Split::test);
            if (it != split.end()) *it = s;
        }
    }

    Dataset dataset;
    dataset.graph = SparseGraph::from_edges(node_count, edges);
    dataset.features = std::move(features);
    dataset.labels = std::move(labels);
    dataset.class_count = communities;
    dataset.split = std::move(split);
    dataset.validate();
    return dataset;
}

}  // namespace autogm
