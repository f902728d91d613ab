#pragma once

#include <string>
#include <vector>

#include "modmi/pipeline.hpp"

namespace modmi {

// Fixed 4 decimals; never prints "-0.0000".
std::string format_value(double v);

// Column names and values of the one-row summary. Three-stream reports use
// H(T) H(S) H(V) I(T;V) I(T;S) I(V;S) I(V;T;S); two-stream reports use the
// stream names: H(a) H(b) I(a;b).
std::vector<std::string> table_columns(const InfoReport& report);
std::vector<double> table_values(const InfoReport& report);

// Header line plus one value line, space separated.
std::string render_table(const InfoReport& report);
// Same layout with a leading "Clusters" column, one row per report.
std::string render_sweep_table(const std::vector<InfoReport>& reports);

// Static Venn-style diagram: three circles with the seven region values, or
// two circles for a two-stream report.
std::string render_svg(const InfoReport& report);

}  // namespace modmi
