#include "modmi/infotheory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>

#include <spdlog/spdlog.h>

#include "modmi/error.hpp"

namespace modmi {

namespace {

constexpr double kClampTolerance = 1e-12;

struct Column {
  std::span<const std::uint32_t> symbols;
  std::uint32_t alphabet;
};

using Rows = std::vector<std::size_t>;

void check_aligned(const StreamRefs& streams) {
  if (streams.empty()) throw Error(ErrorKind::Precondition, "no streams given");
  const LabelSequence& first = streams.front();
  for (const LabelSequence& s : streams) {
    if (s.rows() != first.rows())
      throw Error(ErrorKind::Alignment, "misaligned streams: " + std::to_string(s.rows()) +
                                            " vs " + std::to_string(first.rows()) + " frames");
    if (s.sample_rate_hz() != first.sample_rate_hz())
      throw Error(ErrorKind::Alignment, "misaligned streams: sample rates differ");
  }
}

std::vector<Column> columns(const StreamRefs& streams) {
  std::vector<Column> cols;
  for (const LabelSequence& s : streams) cols.push_back({s.symbols(), s.alphabet_size()});
  return cols;
}

Rows all_rows(std::size_t n) {
  Rows rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

bool radix_fits(const std::vector<Column>& cols) {
  unsigned __int128 product = 1;
  for (const auto& c : cols) {
    product *= c.alphabet;
    if (product > UINT64_MAX) return false;
  }
  return true;
}

// Counts of each observed tuple over `rows`, in lexicographic tuple order.
// Calls emit(first_row_of_group, count) once per tuple.
template <typename Emit>
void for_each_tuple(const std::vector<Column>& cols, const Rows& rows, Emit&& emit) {
  if (rows.empty()) return;
  if (radix_fits(cols)) {
    std::vector<std::pair<std::uint64_t, std::size_t>> keys(rows.size());
    for (std::size_t m = 0; m < rows.size(); ++m) {
      std::uint64_t key = 0;
      for (const auto& c : cols) key = key * c.alphabet + c.symbols[rows[m]];
      keys[m] = {key, rows[m]};
    }
    std::sort(keys.begin(), keys.end());
    std::size_t begin = 0;
    for (std::size_t m = 1; m <= keys.size(); ++m) {
      if (m == keys.size() || keys[m].first != keys[begin].first) {
        emit(keys[begin].second, static_cast<std::uint64_t>(m - begin));
        begin = m;
      }
    }
    return;
  }
  auto less = [&](std::size_t a, std::size_t b) {
    for (const auto& c : cols)
      if (c.symbols[a] != c.symbols[b]) return c.symbols[a] < c.symbols[b];
    return a < b;
  };
  auto same = [&](std::size_t a, std::size_t b) {
    for (const auto& c : cols)
      if (c.symbols[a] != c.symbols[b]) return false;
    return true;
  };
  Rows sorted = rows;
  std::sort(sorted.begin(), sorted.end(), less);
  std::size_t begin = 0;
  for (std::size_t m = 1; m <= sorted.size(); ++m) {
    if (m == sorted.size() || !same(sorted[m], sorted[begin])) {
      emit(sorted[begin], static_cast<std::uint64_t>(m - begin));
      begin = m;
    }
  }
}

double entropy_of(const std::vector<Column>& cols, const Rows& rows, LogBase base) {
  const double total = static_cast<double>(rows.size());
  double h = 0.0;
  for_each_tuple(cols, rows, [&](std::size_t, std::uint64_t count) {
    const double p = static_cast<double>(count) / total;
    h -= p * log_in(p, base);
  });
  return h;
}

double clamp_nonnegative(double raw, const char* what) {
  if (raw < 0.0 && raw >= -kClampTolerance) {
    spdlog::debug("{} {} clamped to 0", what, raw);
    return 0.0;
  }
  return raw;
}

double pairwise_mi(const Column& a, const Column& b, const Rows& rows, LogBase base) {
  const double raw = entropy_of({a}, rows, base) + entropy_of({b}, rows, base) -
                     entropy_of({a, b}, rows, base);
  return clamp_nonnegative(raw, "mutual information");
}

double mmi_over(const std::vector<Column>& cols, const Rows& rows, LogBase base);

// Frames grouped by the conditioning symbol, groups in ascending symbol order.
double cmi_over(const std::vector<Column>& cols, const Column& given, const Rows& rows,
                LogBase base) {
  Rows sorted = rows;
  std::stable_sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
    return given.symbols[a] < given.symbols[b];
  });
  const double total = static_cast<double>(rows.size());
  double sum = 0.0;
  std::size_t begin = 0;
  for (std::size_t m = 1; m <= sorted.size(); ++m) {
    if (m == sorted.size() || given.symbols[sorted[m]] != given.symbols[sorted[begin]]) {
      const Rows group(sorted.begin() + static_cast<std::ptrdiff_t>(begin),
                       sorted.begin() + static_cast<std::ptrdiff_t>(m));
      sum += static_cast<double>(group.size()) / total * mmi_over(cols, group, base);
      begin = m;
    }
  }
  return sum;
}

double mmi_over(const std::vector<Column>& cols, const Rows& rows, LogBase base) {
  if (cols.size() == 2) return pairwise_mi(cols[0], cols[1], rows, base);
  const std::vector<Column> head(cols.begin(), cols.end() - 1);
  return mmi_over(head, rows, base) - cmi_over(head, cols.back(), rows, base);
}

}  // namespace

const char* to_string(LogBase base) {
  switch (base) {
    case LogBase::Two: return "2";
    case LogBase::E: return "e";
    case LogBase::Ten: return "10";
  }
  return "2";
}

LogBase parse_log_base(const std::string& text) {
  if (text == "2") return LogBase::Two;
  if (text == "e") return LogBase::E;
  if (text == "10") return LogBase::Ten;
  throw Error(ErrorKind::Precondition, "log base must be 2, e or 10, got '" + text + "'");
}

double log_in(double x, LogBase base) {
  switch (base) {
    case LogBase::Two: return std::log2(x);
    case LogBase::E: return std::log(x);
    case LogBase::Ten: return std::log10(x);
  }
  return std::log2(x);
}

// --- JointDistribution -----------------------------------------------------------

JointDistribution::JointDistribution(std::size_t arity, std::vector<Cell> cells)
    : arity_(arity), cells_(std::move(cells)) {
  if (arity_ == 0) throw Error(ErrorKind::Data, "joint distribution needs arity >= 1");
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    const auto& c = cells_[i];
    if (c.tuple.size() != arity_) throw Error(ErrorKind::Data, "tuple arity mismatch");
    if (c.count == 0) throw Error(ErrorKind::Data, "zero count cell");
    if (i > 0 && !(cells_[i - 1].tuple < c.tuple))
      throw Error(ErrorKind::Data, "cells must be sorted and unique");
    total_ += c.count;
  }
  if (total_ == 0) throw Error(ErrorKind::Data, "empty joint distribution");
}

std::uint64_t JointDistribution::count(const std::vector<std::uint32_t>& tuple) const {
  const auto it = std::lower_bound(cells_.begin(), cells_.end(), tuple,
                                   [](const Cell& c, const auto& t) { return c.tuple < t; });
  return it != cells_.end() && it->tuple == tuple ? it->count : 0;
}

JointDistribution JointDistribution::marginal(const std::vector<std::size_t>& coords) const {
  for (auto c : coords)
    if (c >= arity_) throw Error(ErrorKind::Precondition, "marginal coordinate out of range");
  std::vector<Cell> projected;
  projected.reserve(cells_.size());
  for (const auto& c : cells_) {
    Cell p;
    for (auto i : coords) p.tuple.push_back(c.tuple[i]);
    p.count = c.count;
    projected.push_back(std::move(p));
  }
  std::sort(projected.begin(), projected.end(),
            [](const Cell& a, const Cell& b) { return a.tuple < b.tuple; });
  std::vector<Cell> merged;
  for (auto& p : projected) {
    if (!merged.empty() && merged.back().tuple == p.tuple)
      merged.back().count += p.count;
    else
      merged.push_back(std::move(p));
  }
  return JointDistribution(coords.size(), std::move(merged));
}

JointDistribution joint_counts(const StreamRefs& streams) {
  check_aligned(streams);
  const auto cols = columns(streams);
  std::vector<JointDistribution::Cell> cells;
  for_each_tuple(cols, all_rows(streams.front().get().rows()),
                 [&](std::size_t row, std::uint64_t count) {
                   JointDistribution::Cell cell;
                   for (const auto& c : cols) cell.tuple.push_back(c.symbols[row]);
                   cell.count = count;
                   cells.push_back(std::move(cell));
                 });
  return JointDistribution(streams.size(), std::move(cells));
}

double entropy(const JointDistribution& d, LogBase base) {
  const double total = static_cast<double>(d.total());
  double h = 0.0;
  for (const auto& c : d.cells()) {
    const double p = static_cast<double>(c.count) / total;
    h -= p * log_in(p, base);
  }
  return h;
}

double joint_entropy(const StreamRefs& streams, LogBase base) {
  check_aligned(streams);
  return entropy_of(columns(streams), all_rows(streams.front().get().rows()), base);
}

double mutual_information(const LabelSequence& a, const LabelSequence& b, LogBase base) {
  check_aligned({a, b});
  return pairwise_mi({a.symbols(), a.alphabet_size()}, {b.symbols(), b.alphabet_size()},
                     all_rows(a.rows()), base);
}

double conditional_entropy(const LabelSequence& a, const StreamRefs& given, LogBase base) {
  StreamRefs all{a};
  all.insert(all.end(), given.begin(), given.end());
  check_aligned(all);
  const Rows rows = all_rows(a.rows());
  const double raw = entropy_of(columns(all), rows, base) - entropy_of(columns(given), rows, base);
  return clamp_nonnegative(raw, "conditional entropy");
}

double conditional_mutual_information(const StreamRefs& streams, const LabelSequence& given,
                                      LogBase base) {
  if (streams.size() < 2)
    throw Error(ErrorKind::Precondition, "conditional MI needs at least 2 streams");
  StreamRefs all = streams;
  all.push_back(given);
  check_aligned(all);
  return cmi_over(columns(streams), {given.symbols(), given.alphabet_size()},
                  all_rows(given.rows()), base);
}

double multivariate_mi_recursive(const StreamRefs& streams, LogBase base) {
  if (streams.size() < 2)
    throw Error(ErrorKind::Precondition, "multivariate MI needs at least 2 streams");
  check_aligned(streams);
  return mmi_over(columns(streams), all_rows(streams.front().get().rows()), base);
}

double trivariate_mmi(const LabelSequence& v, const LabelSequence& t, const LabelSequence& s,
                      LogBase base) {
  check_aligned({v, t, s});
  const auto h = [&](const StreamRefs& group) { return joint_entropy(group, base); };
  return h({v}) + h({t}) + h({s}) - h({t, v}) - h({t, s}) - h({v, s}) + h({v, t, s});
}

InfoQuantities info_diagram(const LabelSequence& v, const LabelSequence& t, const LabelSequence& s,
                            LogBase base) {
  check_aligned({v, t, s});
  InfoQuantities q;
  q.log_base = base;
  q.h_v = joint_entropy({v}, base);
  q.h_t = joint_entropy({t}, base);
  q.h_s = joint_entropy({s}, base);
  q.i_tv = mutual_information(t, v, base);
  q.i_ts = mutual_information(t, s, base);
  q.i_vs = mutual_information(v, s, base);
  q.i_vts = trivariate_mmi(v, t, s, base);

  q.h_s_given_t = conditional_entropy(s, {t}, base);
  q.h_v_given_t = conditional_entropy(v, {t}, base);
  q.h_t_given_s = conditional_entropy(t, {s}, base);
  q.h_t_given_v = conditional_entropy(t, {v}, base);
  q.h_v_given_s = conditional_entropy(v, {s}, base);
  q.h_s_given_v = conditional_entropy(s, {v}, base);

  auto& r = q.regions;
  r.center = q.i_vts;
  r.vt_only = q.i_tv - q.i_vts;
  r.ts_only = q.i_ts - q.i_vts;
  r.vs_only = q.i_vs - q.i_vts;
  r.v_only = q.h_v - (r.vt_only + r.vs_only + r.center);
  r.t_only = q.h_t - (r.vt_only + r.ts_only + r.center);
  r.s_only = q.h_s - (r.ts_only + r.vs_only + r.center);
  return q;
}

std::vector<std::pair<std::string, double>> flatten(const InfoQuantities& q) {
  const auto& r = q.regions;
  return {
      {"H(V)", q.h_v},           {"H(T)", q.h_t},           {"H(S)", q.h_s},
      {"I(T;V)", q.i_tv},        {"I(T;S)", q.i_ts},        {"I(V;S)", q.i_vs},
      {"I(V;T;S)", q.i_vts},     {"H(S|T)", q.h_s_given_t}, {"H(V|T)", q.h_v_given_t},
      {"H(T|S)", q.h_t_given_s}, {"H(T|V)", q.h_t_given_v}, {"H(V|S)", q.h_v_given_s},
      {"H(S|V)", q.h_s_given_v}, {"H(V|T,S)", r.v_only},    {"H(T|V,S)", r.t_only},
      {"H(S|V,T)", r.s_only},    {"I(V;T|S)", r.vt_only},   {"I(T;S|V)", r.ts_only},
      {"I(V;S|T)", r.vs_only},   {"center", r.center},
  };
}

}  // namespace modmi
