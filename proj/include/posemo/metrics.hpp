#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace posemo {

// Example-based multi-label scores: per-sample Jaccard accuracy, precision,
// recall and F1, averaged over samples. Undefined ratios count as 0 except
// that an empty prediction of an empty truth scores 1 everywhere.
struct MultilabelScores {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

MultilabelScores sample_scores(std::span<const std::size_t> pred, std::span<const std::size_t> truth);

// Label ids per sample; duplicates are ignored. Throws LengthMismatch.
MultilabelScores multilabel_scores(std::span<const std::vector<std::size_t>> pred,
                                   std::span<const std::vector<std::size_t>> truth);

// Fraction of exact matches. Throws LengthMismatch.
double binary_accuracy(std::span<const std::size_t> pred, std::span<const std::size_t> truth);

// A labelled grid of numbers rendered as CSV or an aligned text table.
// Numbers are printed with a fixed number of decimals so equal runs give equal
// bytes.
struct MetricsTable {
  std::vector<std::string> columns;  // first column names the row labels
  std::vector<std::vector<std::string>> rows;

  void add(std::string label, std::span<const double> values, int decimals = 4);
  std::string csv() const;
  std::string text() const;
};

std::string format_fixed(double v, int decimals);

}  // namespace posemo
