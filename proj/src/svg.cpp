#include "dpfl/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

namespace dpfl::svg {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out += c;
  }
  return out;
}

}  // namespace

std::string error_bar_chart(const std::string& title,
                            const std::vector<bench::ReportRow>& rows) {
  std::vector<const bench::ReportRow*> sorted;
  for (const auto& r : rows) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(),
            [](const bench::ReportRow* a, const bench::ReportRow* b) { return a->rank < b->rank; });

  const double bar_w = 16, gap = 6, left = 70, top = 40, height = 320, bottom = 110;
  const double width = left + sorted.size() * (bar_w + gap) + 30;

  double lo = 1e300, hi = 1e-300;
  for (const auto* r : sorted)
    if (r->errors) {
      lo = std::min(lo, std::max(1e-12, r->errors->mean));
      hi = std::max(hi, r->errors->max);
    }
  if (lo > hi) {
    lo = 1e-8;
    hi = 1.0;
  }
  const double log_lo = std::floor(std::log10(lo)) - 0.5;
  const double log_hi = std::ceil(std::log10(std::max(hi, lo * 10)));
  auto y_of = [&](double v) {
    const double t = (std::log10(std::max(v, 1e-12)) - log_lo) / (log_hi - log_lo);
    return top + height * (1.0 - t);
  };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" +
       num(top + height + bottom) + "\">\n";
  s += "<text x=\"" + num(left) + "\" y=\"20\" font-size=\"13\" font-family=\"sans-serif\">" +
       esc(title) + "</text>\n";
  // decade gridlines
  for (int d = int(std::ceil(log_lo)); d <= int(log_hi); ++d) {
    const double y = y_of(std::pow(10.0, d));
    s += "<line x1=\"" + num(left - 4) + "\" y1=\"" + num(y) + "\" x2=\"" + num(width - 10) +
         "\" y2=\"" + num(y) + "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    s += "<text x=\"4\" y=\"" + num(y + 4) + "\" font-size=\"10\" font-family=\"sans-serif\">1e" +
         std::to_string(d) + "</text>\n";
  }
  double x = left;
  for (const auto* r : sorted) {
    if (r->errors) {
      const double y_max = y_of(r->errors->max);
      const double y_base = top + height;
      s += "<rect x=\"" + num(x) + "\" y=\"" + num(y_max) + "\" width=\"" + num(bar_w) +
           "\" height=\"" + num(y_base - y_max) + "\" fill=\"#4878a8\"/>\n";
      // white gap marks the mean inside the max-range bar
      const double y_mean = y_of(r->errors->mean);
      s += "<rect x=\"" + num(x) + "\" y=\"" + num(y_mean - 2) + "\" width=\"" + num(bar_w) +
           "\" height=\"4\" fill=\"#ffffff\"/>\n";
    } else {
      s += "<text x=\"" + num(x) + "\" y=\"" + num(top + height - 6) +
           "\" font-size=\"9\" font-family=\"sans-serif\" fill=\"#aa3333\" transform=\"rotate(-90 " +
           num(x + 8) + " " + num(top + height - 6) + ")\">" +
           esc(r->failure ? methods::failure_code_name(r->failure->code) : "?") + "</text>\n";
    }
    s += "<text x=\"" + num(x + bar_w / 2) + "\" y=\"" + num(top + height + 12) +
         "\" font-size=\"9\" font-family=\"sans-serif\" transform=\"rotate(60 " +
         num(x + bar_w / 2) + " " + num(top + height + 12) + ")\">" + esc(r->method_id) +
         "</text>\n";
    x += bar_w + gap;
  }
  s += "</svg>\n";
  return s;
}

std::string ranking_heatmap(const std::string& title, const std::vector<std::string>& methods,
                            const std::vector<std::string>& cases,
                            const std::vector<bench::ReportRow>& rows) {
  std::map<std::pair<std::string, std::string>, const bench::ReportRow*> at;
  int max_rank = 1;
  for (const auto& r : rows) {
    at[{r.method_id, r.case_id}] = &r;
    max_rank = std::max(max_rank, r.rank);
  }
  const double cell = 22, left = 110, top = 90;
  const double width = left + cases.size() * cell + 20;
  const double height = top + methods.size() * cell + 20;

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" +
       num(height) + "\">\n";
  s += "<text x=\"10\" y=\"20\" font-size=\"13\" font-family=\"sans-serif\">" + esc(title) +
       "</text>\n";
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const double x = left + c * cell + cell / 2;
    s += "<text x=\"" + num(x) + "\" y=\"" + num(top - 8) +
         "\" font-size=\"9\" font-family=\"sans-serif\" transform=\"rotate(-60 " + num(x) + " " +
         num(top - 8) + ")\">" + esc(cases[c]) + "</text>\n";
  }
  for (std::size_t m = 0; m < methods.size(); ++m) {
    const double y = top + m * cell;
    s += "<text x=\"6\" y=\"" + num(y + cell - 7) +
         "\" font-size=\"9\" font-family=\"sans-serif\">" + esc(methods[m]) + "</text>\n";
    for (std::size_t c = 0; c < cases.size(); ++c) {
      const double x = left + c * cell;
      const auto it = at.find({methods[m], cases[c]});
      if (it == at.end()) continue;
      const bench::ReportRow* r = it->second;
      if (r->errors) {
        // darker = better rank
        const double t = max_rank > 1 ? double(r->rank - 1) / double(max_rank - 1) : 0.0;
        const int shade = int(30 + 210 * t);
        char color[10];
        std::snprintf(color, sizeof color, "#%02x%02x%02x", shade, shade, 255 - shade / 4);
        s += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(cell - 1) +
             "\" height=\"" + num(cell - 1) + "\" fill=\"" + color + "\"/>\n";
      } else {
        s += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(cell - 1) +
             "\" height=\"" + num(cell - 1) + "\" fill=\"#eeeeee\"/>\n";
        s += "<text x=\"" + num(x + 2) + "\" y=\"" + num(y + cell - 7) +
             "\" font-size=\"7\" font-family=\"sans-serif\" fill=\"#993333\">" +
             esc(r->failure ? methods::failure_code_name(r->failure->code) : "?") + "</text>\n";
      }
    }
  }
  s += "</svg>\n";
  return s;
}

}  // namespace dpfl::svg
