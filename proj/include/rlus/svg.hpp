#pragma once

#include <string>
#include <vector>

namespace rlus::svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> err;  // optional symmetric error bars
};

struct Plot {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
};

/// Standalone line plot with markers and error bars. Data values are also
/// embedded as data-* attributes so the file doubles as a table.
std::string render(const Plot& plot);

}  // namespace rlus::svg
