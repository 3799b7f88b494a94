#include "dualtune/numfmt.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

namespace dualtune {

double round2(double value) {
    double r = std::round(value * 100.0) / 100.0;
    if (r == 0.0) r = 0.0;  // fold -0.00 into 0.00
    return r;
}

std::string format_2dp(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", round2(value));
    return buf;
}

std::string format_signed_2dp(double value) {
    double r = round2(value);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%+.2f", r);
    if (r == 0.0) {
        return "0.00";
    }
    return buf;
}

std::string format_shortest(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

std::optional<double> parse_double(std::string_view text) {
    std::string s(text);
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str()) return std::nullopt;
    while (*end == ' ' || *end == '\t') ++end;
    if (*end != '\0') return std::nullopt;
    return v;
}

}  // namespace dualtune
