#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace specfed {

struct Dataset {
  std::vector<double> inputs;  // n x in_dim, row-major
  std::vector<int> labels;
  int in_dim = 0;
  int num_classes = 0;

  std::size_t size() const { return labels.size(); }
};

enum class SyntheticKind { gaussian_blobs, two_spirals };

// Deterministic synthetic classification data. Class counts are balanced to
// within one sample of n / num_classes.
Dataset gen_synthetic(SyntheticKind kind, std::size_t n, int num_classes,
                      int in_dim, double noise, std::uint64_t seed);

// Numeric CSV with optional header (auto-detected when the first row is not
// numeric). The label column is chosen by name (requires a header) or by
// 0-based index. Labels are re-indexed densely from 0 in sorted order.
Dataset load_csv(const std::string& path, const std::string& label_column);

struct Partition {
  std::vector<std::vector<int>> client_indices;  // disjoint cover of [0, n)
  double alpha = 0.0;
  std::uint64_t seed = 0;
};

// Per-class Dirichlet(alpha) allocation across clients with largest-remainder
// rounding; empty clients are repaired by moving samples from the most-loaded
// client.
Partition dirichlet_partition(const Dataset& ds, int n_clients, double alpha,
                              std::uint64_t seed);

struct LocalSplit {
  std::vector<Dataset> train;          // one per client
  std::vector<Dataset> test;           // one per client, matched distribution
  Dataset global_test;                 // union of local test sets
  std::vector<int> fallback_clients;   // clients where stratification fell back
};

// Per-client stratified train/test split plus the global test union.
LocalSplit split_local(const Partition& partition, const Dataset& ds,
                       double test_fraction, std::uint64_t seed);

// Label histogram (length num_classes) of a dataset or an index subset.
std::vector<std::size_t> label_histogram(const Dataset& ds);
std::vector<std::size_t> label_histogram(const Dataset& ds,
                                         const std::vector<int>& indices);

// Total-variation distance between two histograms, each normalized to sum 1.
double total_variation(const std::vector<std::size_t>& a,
                       const std::vector<std::size_t>& b);

}  // namespace specfed
