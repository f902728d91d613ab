#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "modmi/ingestion.hpp"

namespace modmi {

enum class LogBase { Two, E, Ten };

const char* to_string(LogBase base);
LogBase parse_log_base(const std::string& text);  // "2", "e", "10"
double log_in(double x, LogBase base);

using StreamRefs = std::vector<std::reference_wrapper<const LabelSequence>>;

// Empirical counts over aligned symbol tuples. Cells are sorted by tuple and
// hold only observed tuples.
class JointDistribution {
 public:
  struct Cell {
    std::vector<std::uint32_t> tuple;
    std::uint64_t count = 0;
    friend bool operator==(const Cell&, const Cell&) = default;
  };

  // Throws Error(Data) on a zero count, a tuple of the wrong arity or an
  // unsorted / duplicated cell list.
  JointDistribution(std::size_t arity, std::vector<Cell> cells);

  std::size_t arity() const noexcept { return arity_; }
  std::uint64_t total() const noexcept { return total_; }
  const std::vector<Cell>& cells() const noexcept { return cells_; }
  std::uint64_t count(const std::vector<std::uint32_t>& tuple) const;

  // Distribution of the listed coordinates, in the order given.
  JointDistribution marginal(const std::vector<std::size_t>& coords) const;

 private:
  std::size_t arity_;
  std::vector<Cell> cells_;
  std::uint64_t total_ = 0;
};

// Throws Error(Alignment) if the streams differ in length or rate.
JointDistribution joint_counts(const StreamRefs& streams);

double entropy(const JointDistribution& d, LogBase base = LogBase::Two);
// Joint entropy of the streams taken together.
double joint_entropy(const StreamRefs& streams, LogBase base = LogBase::Two);

// H(a) + H(b) - H(a;b); rounding noise below zero is clamped.
double mutual_information(const LabelSequence& a, const LabelSequence& b,
                          LogBase base = LogBase::Two);

// H(a; given) - H(given).
double conditional_entropy(const LabelSequence& a, const StreamRefs& given,
                           LogBase base = LogBase::Two);

// Sum over observed z of p(z) * MMI(streams | given = z).
double conditional_mutual_information(const StreamRefs& streams, const LabelSequence& given,
                                      LogBase base = LogBase::Two);

// I(X1;...;Xn) = I(X1;...;Xn-1) - I(X1;...;Xn-1 | Xn), bottoming out at
// pairwise MI. May be negative for n >= 3.
double multivariate_mi_recursive(const StreamRefs& streams, LogBase base = LogBase::Two);

// Inclusion-exclusion over the seven joint entropies of (v, t, s).
double trivariate_mmi(const LabelSequence& v, const LabelSequence& t, const LabelSequence& s,
                      LogBase base = LogBase::Two);

// Entropies, pairwise MI, co-information, conditionals and the seven regions
// of the three-circle diagram for video (V), text (T) and speech (S).
struct InfoQuantities {
  LogBase log_base = LogBase::Two;

  double h_v = 0, h_t = 0, h_s = 0;
  double i_tv = 0, i_ts = 0, i_vs = 0;
  double i_vts = 0;

  double h_s_given_t = 0, h_v_given_t = 0;
  double h_t_given_s = 0, h_t_given_v = 0;
  double h_v_given_s = 0, h_s_given_v = 0;

  struct Regions {
    double v_only = 0, t_only = 0, s_only = 0;   // H(X | other two)
    double vt_only = 0, ts_only = 0, vs_only = 0;  // I(X;Y | third)
    double center = 0;                            // I(V;T;S)
  } regions;
};

InfoQuantities info_diagram(const LabelSequence& v, const LabelSequence& t, const LabelSequence& s,
                            LogBase base = LogBase::Two);

// Every scalar of q paired with a stable name, in a fixed order.
std::vector<std::pair<std::string, double>> flatten(const InfoQuantities& q);

}  // namespace modmi
