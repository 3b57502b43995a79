#pragma once

#include <string>
#include <vector>

#include "dpfl/evalbench.hpp"

namespace dpfl::svg {

// Log-scale error-bar chart for one (case, response group): the full bar
// spans up to the maximum relative error, with a white gap marking the mean;
// failed methods appear as code labels. Deterministic output.
std::string error_bar_chart(const std::string& title,
                            const std::vector<bench::ReportRow>& rows);

// Ranking heatmap over (method x case); darker cells are better ranks,
// failure cells carry their code.
std::string ranking_heatmap(const std::string& title,
                            const std::vector<std::string>& methods,
                            const std::vector<std::string>& cases,
                            const std::vector<bench::ReportRow>& rows);

}  // namespace dpfl::svg
