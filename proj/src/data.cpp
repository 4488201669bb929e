#include "specfed/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "specfed/rng.hpp"

namespace specfed {

namespace {

std::vector<std::size_t> balanced_class_counts(std::size_t n, int num_classes) {
  std::vector<std::size_t> counts(num_classes, n / num_classes);
  for (std::size_t c = 0; c < n % num_classes; ++c) counts[c] += 1;
  return counts;
}

bool parse_double(const std::string& cell, double& out) {
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) cells.push_back(trim(cur));
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

// Largest-remainder rounding of total * props[i] to integer counts summing to
// total. Ties go to the lower index.
std::vector<std::size_t> largest_remainder(const std::vector<double>& props,
                                           std::size_t total) {
  const std::size_t n = props.size();
  std::vector<std::size_t> counts(n);
  std::vector<std::pair<double, std::size_t>> fracs(n);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double target = props[i] * static_cast<double>(total);
    counts[i] = static_cast<std::size_t>(std::floor(target));
    fracs[i] = {target - static_cast<double>(counts[i]), i};
    assigned += counts[i];
  }
  std::stable_sort(fracs.begin(), fracs.end(), [](const auto& a, const auto& b) {
    return a.first > b.first;
  });
  std::size_t rem = total - assigned;
  for (std::size_t k = 0; rem > 0; k = (k + 1) % n) {
    counts[fracs[k].second] += 1;
    --rem;
  }
  return counts;
}

}  // namespace

Dataset gen_synthetic(SyntheticKind kind, std::size_t n, int num_classes,
                      int in_dim, double noise, std::uint64_t seed) {
  if (num_classes < 1) throw std::invalid_argument("gen_synthetic: num_classes must be >= 1");
  if (n < static_cast<std::size_t>(num_classes)) {
    throw std::invalid_argument("gen_synthetic: n must be >= num_classes");
  }
  if (in_dim < 2) throw std::invalid_argument("gen_synthetic: in_dim must be >= 2");
  if (noise < 0.0) throw std::invalid_argument("gen_synthetic: noise must be >= 0");

  Dataset ds;
  ds.in_dim = in_dim;
  ds.num_classes = num_classes;
  ds.inputs.reserve(n * static_cast<std::size_t>(in_dim));
  ds.labels.reserve(n);

  Rng rng(seed);
  const auto counts = balanced_class_counts(n, num_classes);

  if (kind == SyntheticKind::gaussian_blobs) {
    std::vector<double> centers(static_cast<std::size_t>(num_classes) * in_dim);
    for (auto& c : centers) c = rng.uniform(-2.0, 2.0);
    for (int c = 0; c < num_classes; ++c) {
      const double* center = centers.data() + static_cast<std::size_t>(c) * in_dim;
      for (std::size_t s = 0; s < counts[c]; ++s) {
        for (int dim = 0; dim < in_dim; ++dim) {
          ds.inputs.push_back(center[dim] + noise * rng.normal());
        }
        ds.labels.push_back(c);
      }
    }
  } else {
    const double two_pi = 6.283185307179586476925286766559;
    for (int c = 0; c < num_classes; ++c) {
      const double offset = two_pi * c / num_classes;
      for (std::size_t s = 0; s < counts[c]; ++s) {
        const double t = rng.uniform01();
        const double r = 0.5 + 2.5 * t;
        const double theta = offset + 1.5 * two_pi * t;
        std::vector<double> row(in_dim, 0.0);
        row[0] = r * std::cos(theta);
        row[1] = r * std::sin(theta);
        for (int dim = 0; dim < in_dim; ++dim) {
          ds.inputs.push_back(row[dim] + noise * rng.normal());
        }
        ds.labels.push_back(c);
      }
    }
  }
  return ds;
}

Dataset load_csv(const std::string& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open '" + path + "'");

  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) lines.push_back(line);
  }
  if (lines.empty()) throw std::runtime_error("load_csv: '" + path + "' is empty");

  // Header auto-detection: any non-numeric cell in the first row.
  const auto first_cells = split_csv_line(lines.front());
  if (first_cells.empty()) throw std::runtime_error("load_csv: first row is empty");
  bool has_header = false;
  for (const auto& cell : first_cells) {
    double tmp;
    if (!parse_double(cell, tmp)) {
      has_header = true;
      break;
    }
  }

  const std::size_t n_cols = first_cells.size();
  std::size_t label_idx = n_cols;
  int parsed_idx = -1;
  {
    double as_num;
    if (parse_double(label_column, as_num) && as_num == std::floor(as_num) &&
        as_num >= 0) {
      parsed_idx = static_cast<int>(as_num);
    }
  }
  if (parsed_idx >= 0) {
    label_idx = static_cast<std::size_t>(parsed_idx);
    if (label_idx >= n_cols) {
      throw std::runtime_error("load_csv: label column index out of range");
    }
  } else {
    if (!has_header) {
      throw std::runtime_error(
          "load_csv: label column '" + label_column + "' needs a header row");
    }
    for (std::size_t i = 0; i < n_cols; ++i) {
      if (first_cells[i] == label_column) {
        label_idx = i;
        break;
      }
    }
    if (label_idx == n_cols) {
      throw std::runtime_error("load_csv: label column '" + label_column + "' not found");
    }
  }

  Dataset ds;
  ds.in_dim = static_cast<int>(n_cols) - 1;
  if (ds.in_dim < 1) throw std::runtime_error("load_csv: need at least one feature column");

  std::vector<long long> raw_labels;
  const std::size_t start = has_header ? 1 : 0;
  if (start >= lines.size()) throw std::runtime_error("load_csv: no data rows");
  for (std::size_t r = start; r < lines.size(); ++r) {
    const auto cells = split_csv_line(lines[r]);
    const std::string row_name = std::to_string(r + 1);
    if (cells.size() != n_cols) {
      throw std::runtime_error("load_csv: row " + row_name + " has " +
                               std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(n_cols));
    }
    for (std::size_t c = 0; c < n_cols; ++c) {
      double value;
      if (!parse_double(cells[c], value)) {
        throw std::runtime_error("load_csv: malformed cell '" + cells[c] +
                                 "' at row " + row_name);
      }
      if (c == label_idx) {
        if (value != std::floor(value)) {
          throw std::runtime_error("load_csv: non-integer label at row " + row_name);
        }
        raw_labels.push_back(static_cast<long long>(value));
      } else {
        ds.inputs.push_back(value);
      }
    }
  }

  // Dense re-indexing from 0, in sorted label order.
  std::map<long long, int> remap;
  for (long long l : raw_labels) remap.emplace(l, 0);
  int next = 0;
  for (auto& [raw, dense] : remap) dense = next++;
  ds.labels.reserve(raw_labels.size());
  for (long long l : raw_labels) ds.labels.push_back(remap[l]);
  ds.num_classes = next;
  return ds;
}

Partition dirichlet_partition(const Dataset& ds, int n_clients, double alpha,
                              std::uint64_t seed) {
  if (n_clients < 1) throw std::invalid_argument("dirichlet_partition: n_clients must be >= 1");
  if (!(alpha > 0.0)) throw std::invalid_argument("dirichlet_partition: alpha must be > 0");
  if (ds.size() < static_cast<std::size_t>(n_clients)) {
    throw std::invalid_argument("dirichlet_partition: dataset smaller than n_clients");
  }

  Partition part;
  part.alpha = alpha;
  part.seed = seed;
  part.client_indices.assign(n_clients, {});

  Rng rng(seed);
  std::vector<std::vector<int>> by_class(ds.num_classes);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    by_class[ds.labels[i]].push_back(static_cast<int>(i));
  }

  for (auto& idx : by_class) {
    if (idx.empty()) continue;
    rng.shuffle(idx);
    const auto props = rng.dirichlet(alpha, static_cast<std::size_t>(n_clients));
    const auto counts = largest_remainder(props, idx.size());
    std::size_t pos = 0;
    for (int k = 0; k < n_clients; ++k) {
      for (std::size_t s = 0; s < counts[k]; ++s) {
        part.client_indices[k].push_back(idx[pos++]);
      }
    }
  }

  // Empty-client repair: move one sample at a time from the most-loaded
  // client. When data permits, bring every client up to 2 samples so a
  // train/test split is possible downstream.
  const std::size_t floor_per_client =
      ds.size() >= 2 * static_cast<std::size_t>(n_clients) ? 2 : 1;
  for (;;) {
    int needy = -1;
    for (int k = 0; k < n_clients; ++k) {
      if (part.client_indices[k].size() < floor_per_client) {
        needy = k;
        break;
      }
    }
    if (needy < 0) break;
    int donor = 0;
    for (int k = 1; k < n_clients; ++k) {
      if (part.client_indices[k].size() > part.client_indices[donor].size()) donor = k;
    }
    part.client_indices[needy].push_back(part.client_indices[donor].back());
    part.client_indices[donor].pop_back();
  }
  return part;
}

LocalSplit split_local(const Partition& partition, const Dataset& ds,
                       double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0) || !(test_fraction < 0.5)) {
    throw std::invalid_argument("split_local: test_fraction must be in (0, 0.5)");
  }

  LocalSplit out;
  const int n_clients = static_cast<int>(partition.client_indices.size());
  out.train.resize(n_clients);
  out.test.resize(n_clients);
  out.global_test.in_dim = ds.in_dim;
  out.global_test.num_classes = ds.num_classes;

  auto copy_rows = [&](Dataset& dst, const std::vector<int>& rows) {
    dst.in_dim = ds.in_dim;
    dst.num_classes = ds.num_classes;
    for (int r : rows) {
      const double* src = ds.inputs.data() + static_cast<std::size_t>(r) * ds.in_dim;
      dst.inputs.insert(dst.inputs.end(), src, src + ds.in_dim);
      dst.labels.push_back(ds.labels[r]);
    }
  };

  for (int k = 0; k < n_clients; ++k) {
    const auto& owned = partition.client_indices[k];
    const std::size_t n = owned.size();
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(k)));

    std::vector<std::vector<int>> by_class(ds.num_classes);
    for (int r : owned) by_class[ds.labels[r]].push_back(r);

    bool stratifiable = n >= 2;
    for (const auto& lst : by_class) {
      if (lst.size() == 1) stratifiable = false;
    }

    std::vector<int> test_rows, train_rows;
    if (stratifiable) {
      const std::size_t target =
          std::max<std::size_t>(1, static_cast<std::size_t>(
              std::llround(test_fraction * static_cast<double>(n))));
      std::vector<double> props;
      std::vector<int> present;
      for (int c = 0; c < ds.num_classes; ++c) {
        if (!by_class[c].empty()) {
          present.push_back(c);
          props.push_back(static_cast<double>(by_class[c].size()) /
                          static_cast<double>(n));
        }
      }
      auto per_class = largest_remainder(props, target);
      for (std::size_t ci = 0; ci < present.size(); ++ci) {
        auto& rows = by_class[present[ci]];
        rng.shuffle(rows);
        // Never strand a class with zero train samples.
        const std::size_t take = std::min(per_class[ci], rows.size() - 1);
        test_rows.insert(test_rows.end(), rows.begin(), rows.begin() + take);
        train_rows.insert(train_rows.end(), rows.begin() + take, rows.end());
      }
    } else {
      out.fallback_clients.push_back(k);
      std::vector<int> rows = owned;
      rng.shuffle(rows);
      std::size_t take = static_cast<std::size_t>(
          std::llround(test_fraction * static_cast<double>(n)));
      if (n >= 2) take = std::min(std::max<std::size_t>(take, 1), n - 1);
      else take = 0;  // single sample: keep it for training
      test_rows.assign(rows.begin(), rows.begin() + take);
      train_rows.assign(rows.begin() + take, rows.end());
    }

    std::sort(test_rows.begin(), test_rows.end());
    std::sort(train_rows.begin(), train_rows.end());
    copy_rows(out.train[k], train_rows);
    copy_rows(out.test[k], test_rows);
    copy_rows(out.global_test, test_rows);
  }
  return out;
}

std::vector<std::size_t> label_histogram(const Dataset& ds) {
  std::vector<std::size_t> h(ds.num_classes, 0);
  for (int l : ds.labels) h[l] += 1;
  return h;
}

std::vector<std::size_t> label_histogram(const Dataset& ds,
                                         const std::vector<int>& indices) {
  std::vector<std::size_t> h(ds.num_classes, 0);
  for (int i : indices) h[ds.labels[i]] += 1;
  return h;
}

double total_variation(const std::vector<std::size_t>& a,
                       const std::vector<std::size_t>& b) {
  const double na = static_cast<double>(std::accumulate(a.begin(), a.end(), std::size_t{0}));
  const double nb = static_cast<double>(std::accumulate(b.begin(), b.end(), std::size_t{0}));
  if (na == 0.0 || nb == 0.0) throw std::invalid_argument("total_variation: empty histogram");
  double tv = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    tv += std::abs(static_cast<double>(a[i]) / na - static_cast<double>(b[i]) / nb);
  }
  return 0.5 * tv;
}

}  // namespace specfed
