#include "posemo/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "posemo/error.hpp"

namespace posemo {

MultilabelScores sample_scores(std::span<const std::size_t> pred, std::span<const std::size_t> truth) {
  std::vector<std::size_t> p(pred.begin(), pred.end()), t(truth.begin(), truth.end());
  std::sort(p.begin(), p.end());
  p.erase(std::unique(p.begin(), p.end()), p.end());
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  if (p.empty() && t.empty()) return {1.0, 1.0, 1.0, 1.0};
  std::vector<std::size_t> inter;
  std::set_intersection(p.begin(), p.end(), t.begin(), t.end(), std::back_inserter(inter));
  const auto i = static_cast<double>(inter.size());
  const double uni = static_cast<double>(p.size() + t.size()) - i;
  MultilabelScores s;
  s.accuracy = i / uni;
  s.precision = p.empty() ? 0.0 : i / static_cast<double>(p.size());
  s.recall = t.empty() ? 0.0 : i / static_cast<double>(t.size());
  s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

MultilabelScores multilabel_scores(std::span<const std::vector<std::size_t>> pred,
                                   std::span<const std::vector<std::size_t>> truth) {
  if (pred.size() != truth.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(pred.size()) + " predictions for " +
                                               std::to_string(truth.size()) + " ground-truth samples");
  }
  MultilabelScores m;
  if (pred.empty()) return m;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto s = sample_scores(pred[i], truth[i]);
    m.accuracy += s.accuracy;
    m.precision += s.precision;
    m.recall += s.recall;
    m.f1 += s.f1;
  }
  const auto n = static_cast<double>(pred.size());
  return {m.accuracy / n, m.precision / n, m.recall / n, m.f1 / n};
}

double binary_accuracy(std::span<const std::size_t> pred, std::span<const std::size_t> truth) {
  if (pred.size() != truth.size()) throw Error(ErrorCode::LengthMismatch, "prediction and truth lengths differ");
  if (pred.empty()) return 0.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) ok += pred[i] == truth[i];
  return static_cast<double>(ok) / static_cast<double>(pred.size());
}

std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

void MetricsTable::add(std::string label, std::span<const double> values, int decimals) {
  std::vector<std::string> row{std::move(label)};
  for (double v : values) row.push_back(format_fixed(v, decimals));
  rows.push_back(std::move(row));
}

std::string MetricsTable::csv() const {
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  line(columns);
  for (const auto& r : rows) line(r);
  return out.str();
}

std::string MetricsTable::text() const {
  std::vector<std::size_t> width(columns.size(), 0);
  auto grow = [&](const std::vector<std::string>& cells) {
    if (cells.size() > width.size()) width.resize(cells.size(), 0);
    for (std::size_t i = 0; i < cells.size(); ++i) width[i] = std::max(width[i], cells[i].size());
  };
  grow(columns);
  for (const auto& r : rows) grow(r);
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto pad = width[i] - cells[i].size();
      if (i == 0) {
        out << cells[i] << std::string(pad, ' ');
      } else {
        out << "  " << std::string(pad, ' ') << cells[i];
      }
    }
    out << '\n';
  };
  line(columns);
  std::size_t total = 0;
  for (auto w : width) total += w + 2;
  out << std::string(total > 2 ? total - 2 : 0, '-') << '\n';
  for (const auto& r : rows) line(r);
  return out.str();
}

}  // namespace posemo
