#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace khinchin {

using OrderedJson = nlohmann::ordered_json;

/// Outcome of one verification run. `margin` is the smallest slack observed
/// (negative when the claim fails); `witness` locates it when meaningful.
struct VerdictReport {
    std::string claim;
    OrderedJson params = OrderedJson::object();
    bool pass = false;
    double margin = 0.0;
    std::optional<OrderedJson> witness;
};

/// Rounds to 12 significant digits. Non-finite values pass through.
double round12(double x);

/// {"claim", "params", "pass", "margin", "witness"} in that order, with every
/// floating-point number rounded to 12 significant digits.
OrderedJson to_json(const VerdictReport& report);

/// One object for a single report, an array otherwise. Trailing newline.
std::string render_json(const std::vector<VerdictReport>& reports);

/// Header `claim,pass,margin,<param keys...>,witness`. Param columns are the
/// union of keys in first-seen order; nested values are written as compact
/// JSON, quoted when they contain a comma or quote.
std::string render_csv(const std::vector<VerdictReport>& reports);

/// "%.12g".
std::string format12(double x);

}  // namespace khinchin
