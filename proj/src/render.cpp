#include "modmi/render.hpp"

#include <cstdio>
#include <sstream>

#include "modmi/error.hpp"

namespace modmi {

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  std::string s = buf;
  if (s == "-0.0000") s = "0.0000";
  return s;
}

std::vector<std::string> table_columns(const InfoReport& r) {
  if (r.diagram) return {"H(T)", "H(S)", "H(V)", "I(T;V)", "I(T;S)", "I(V;S)", "I(V;T;S)"};
  const auto& a = r.entropies.at(0).first;
  const auto& b = r.entropies.at(1).first;
  return {"H(" + a + ")", "H(" + b + ")", "I(" + a + ";" + b + ")"};
}

std::vector<double> table_values(const InfoReport& r) {
  if (const auto& q = r.diagram) return {q->h_t, q->h_s, q->h_v, q->i_tv, q->i_ts, q->i_vs, q->i_vts};
  return {r.entropies.at(0).second, r.entropies.at(1).second, r.pairwise.at(0).second};
}

namespace {

std::string join_row(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ' ';
    line += cells[i];
  }
  return line + "\n";
}

std::vector<std::string> formatted(const std::vector<double>& values) {
  std::vector<std::string> cells;
  for (double v : values) cells.push_back(format_value(v));
  return cells;
}

std::string cluster_label(const InfoReport& r) {
  if (r.config.clusters_override) return std::to_string(*r.config.clusters_override);
  std::string label;
  for (const auto& s : r.streams) {
    if (!s.k) continue;
    if (!label.empty()) label += '/';
    label += std::to_string(*s.k);
  }
  return label.empty() ? "-" : label;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void text(std::ostringstream& svg, int x, int y, const std::string& body, int size = 14,
          const char* weight = "normal") {
  svg << "  <text x=\"" << x << "\" y=\"" << y << "\" font-size=\"" << size
      << "\" font-weight=\"" << weight << "\" text-anchor=\"middle\">" << xml_escape(body)
      << "</text>\n";
}

void circle(std::ostringstream& svg, int cx, int cy, int r, const char* color) {
  svg << "  <circle cx=\"" << cx << "\" cy=\"" << cy << "\" r=\"" << r << "\" fill=\"" << color
      << "\" fill-opacity=\"0.25\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
}

}  // namespace

std::string render_table(const InfoReport& r) {
  return join_row(table_columns(r)) + join_row(formatted(table_values(r)));
}

std::string render_sweep_table(const std::vector<InfoReport>& reports) {
  if (reports.empty()) throw Error(ErrorKind::Precondition, "no reports to tabulate");
  std::vector<std::string> header{"Clusters"};
  const auto columns = table_columns(reports.front());
  header.insert(header.end(), columns.begin(), columns.end());
  std::string out = join_row(header);
  for (const auto& r : reports) {
    std::vector<std::string> row{cluster_label(r)};
    const auto cells = formatted(table_values(r));
    row.insert(row.end(), cells.begin(), cells.end());
    out += join_row(row);
  }
  return out;
}

std::string render_svg(const InfoReport& r) {
  std::ostringstream svg;
  const std::string unit = std::string("log base ") + to_string(r.log_base);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"600\" height=\"520\" "
         "viewBox=\"0 0 600 520\" font-family=\"sans-serif\">\n";
  svg << "  <rect width=\"600\" height=\"520\" fill=\"white\"/>\n";

  if (const auto& q = r.diagram) {
    const auto& g = q->regions;
    const auto& roles = *r.roles;
    circle(svg, 230, 200, 130, "#1f77b4");  // V
    circle(svg, 370, 200, 130, "#d62728");  // S
    circle(svg, 300, 320, 130, "#2ca02c");  // T
    text(svg, 150, 50, "V: " + roles.v + "  H=" + format_value(q->h_v), 15, "bold");
    text(svg, 450, 50, "S: " + roles.s + "  H=" + format_value(q->h_s), 15, "bold");
    text(svg, 300, 480, "T: " + roles.t + "  H=" + format_value(q->h_t), 15, "bold");
    text(svg, 160, 170, format_value(g.v_only));
    text(svg, 440, 170, format_value(g.s_only));
    text(svg, 300, 410, format_value(g.t_only));
    text(svg, 300, 140, format_value(g.vs_only));
    text(svg, 220, 300, format_value(g.vt_only));
    text(svg, 380, 300, format_value(g.ts_only));
    text(svg, 300, 245, format_value(g.center), 15, "bold");
  } else {
    const auto& [a, ha] = r.entropies.at(0);
    const auto& [b, hb] = r.entropies.at(1);
    const double shared = r.pairwise.at(0).second;
    circle(svg, 230, 260, 150, "#1f77b4");
    circle(svg, 370, 260, 150, "#d62728");
    text(svg, 180, 80, a + "  H=" + format_value(ha), 15, "bold");
    text(svg, 420, 80, b + "  H=" + format_value(hb), 15, "bold");
    text(svg, 160, 265, format_value(ha - shared));
    text(svg, 440, 265, format_value(hb - shared));
    text(svg, 300, 265, format_value(shared), 15, "bold");
  }
  text(svg, 300, 508, unit, 11);
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace modmi
