#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace autogm {

// Immutable undirected binary adjacency in CSR form. Each undirected edge is
// stored in both directions; no self-loops; column indices strictly
// increasing within each row.
struct SparseGraph {
    std::int64_t node_count = 0;  // n
    std::int64_t edge_count = 0;  // m, undirected
    std::vector<std::int64_t> row_offsets;  // size n+1
    std::vector<std::int32_t> col_indices;  // size 2m

    std::int64_t degree(std::int64_t u) const { return row_offsets[u + 1] - row_offsets[u]; }

    // Builds from an edge list: symmetrizes, deduplicates, drops self-loops.
    static SparseGraph from_edges(std::int64_t node_count,
                                  const std::vector<std::pair<std::int32_t, std::int32_t>>& edges);

    // Checks all structural invariants; throws std::logic_error on violation.
    void validate() const;

    bool operator==(const SparseGraph&) const = default;
};

enum class Split : std::uint8_t { train = 0, val = 1, test = 2 };

const char* to_string(Split s);

struct Dataset {
    SparseGraph graph;
    Eigen::MatrixXd features;           // n x d0
    std::vector<std::int32_t> labels;   // values in [0, class_count)
    std::int32_t class_count = 0;
    std::vector<Split> split;           // per-node tag

    std::int64_t node_count() const { return graph.node_count; }
    std::int64_t feature_dim() const { return features.cols(); }
    std::vector<std::int64_t> split_indices(Split s) const;

    void validate() const;

    bool operator==(const Dataset& o) const {
        return graph == o.graph && features == o.features && labels == o.labels &&
               class_count == o.class_count && split == o.split;
    }
};

// Raised for any malformed or inconsistent dataset directory. The message
// carries the file name and, where applicable, the 1-based line number.
struct DatasetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Reads graph.tsv, features.tsv, labels.tsv, splits.tsv from `dir`.
Dataset load_dataset(const std::filesystem::path& dir);

// Writes the four-file directory format; load_dataset round-trips it exactly.
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);

std::vector<std::int64_t> degree_vector(const SparseGraph& graph);

// Stochastic-block-model fixture. Balanced community labels, one-hot
// community indicator features plus Gaussian noise, 20/30/50 train/val/test
// split stratified by label. Byte-identical output for equal arguments.
Dataset generate_sbm(std::int64_t node_count, std::int32_t communities, double p_in,
                     double p_out, std::int32_t feature_dim, double noise, std::uint64_t seed);

}  // namespace autogm
