#include "khinchin/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace khinchin {

namespace {

void round_numbers(OrderedJson& j) {
    if (j.is_number_float()) {
        j = round12(j.get<double>());
    } else if (j.is_structured()) {
        for (auto& child : j) round_numbers(child);
    }
}

std::string csv_cell(const OrderedJson& value) {
    std::string text;
    if (value.is_null()) return "";
    if (value.is_string()) {
        text = value.get<std::string>();
    } else if (value.is_number_float()) {
        text = format12(value.get<double>());
    } else {
        text = value.dump();
    }
    if (text.find_first_of(",\"\n") == std::string::npos) return text;
    std::string quoted = "\"";
    for (char c : text) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    return quoted + "\"";
}

}  // namespace

std::string format12(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

double round12(double x) {
    if (!std::isfinite(x)) return x;
    return std::strtod(format12(x).c_str(), nullptr);
}

OrderedJson to_json(const VerdictReport& report) {
    OrderedJson out;
    out["claim"] = report.claim;
    out["params"] = report.params;
    out["pass"] = report.pass;
    // JSON has no infinities; an unbounded margin is written as null.
    out["margin"] = std::isfinite(report.margin) ? OrderedJson(report.margin) : OrderedJson();
    out["witness"] = report.witness ? *report.witness : OrderedJson();
    round_numbers(out);
    return out;
}

std::string render_json(const std::vector<VerdictReport>& reports) {
    OrderedJson out;
    if (reports.size() == 1) {
        out = to_json(reports.front());
    } else {
        out = OrderedJson::array();
        for (const auto& r : reports) out.push_back(to_json(r));
    }
    return out.dump(2) + "\n";
}

std::string render_csv(const std::vector<VerdictReport>& reports) {
    std::vector<std::string> keys;
    for (const auto& r : reports) {
        for (const auto& [key, value] : r.params.items()) {
            if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
        }
    }
    std::ostringstream out;
    out << "claim,pass,margin";
    for (const auto& k : keys) out << ',' << csv_cell(k);
    out << ",witness\n";
    for (const auto& r : reports) {
        const auto j = to_json(r);
        out << csv_cell(j["claim"]) << ',' << (r.pass ? "true" : "false") << ','
            << csv_cell(j["margin"]);
        for (const auto& k : keys) {
            out << ',';
            if (j["params"].contains(k)) out << csv_cell(j["params"][k]);
        }
        out << ',' << csv_cell(j["witness"]) << '\n';
    }
    return out.str();
}

}  // namespace khinchin
