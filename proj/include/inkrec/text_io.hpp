#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "inkrec/error.hpp"

namespace inkrec::detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) {
            ++i;
        }
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') {
            ++i;
        }
        if (i > start) {
            out.push_back(line.substr(start, i - start));
        }
    }
    return out;
}

inline Error line_error(ErrorCode code, std::size_t line_no, const std::string& what) {
    return Error(code, "line " + std::to_string(line_no) + ": " + what);
}

inline std::string_view value_of(std::string_view token, std::string_view key) {
    if (token.size() <= key.size() || token.substr(0, key.size()) != key || token[key.size()] != '=') {
        return {};
    }
    return token.substr(key.size() + 1);
}

// Reads `count` rows of `dim` numbers off the front of `content`.
inline std::vector<double> read_rows(std::string_view& content, std::size_t count, std::size_t dim,
                                     std::size_t& line_no) {
    std::vector<double> values;
    values.reserve(count * dim);
    while (values.size() < count * dim) {
        if (content.empty()) {
            throw Error(ErrorCode::MalformedLine, "unexpected end of file after line " + std::to_string(line_no));
        }
        const std::size_t nl = content.find('\n');
        std::string_view line = content.substr(0, nl);
        content = nl == std::string_view::npos ? std::string_view{} : content.substr(nl + 1);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        const auto tok = split_ws(line);
        if (tok.empty()) continue;
        if (tok.size() != dim) {
            throw line_error(ErrorCode::MalformedLine, line_no, "expected " + std::to_string(dim) + " values");
        }
        for (auto t : tok) {
            double v = 0.0;
            if (!parse_double(t, v)) {
                throw line_error(ErrorCode::MalformedLine, line_no, "non-numeric value");
            }
            values.push_back(v);
        }
    }
    return values;
}

inline std::string_view take_line(std::string_view& content, std::size_t& line_no) {
    const std::size_t nl = content.find('\n');
    std::string_view line = content.substr(0, nl);
    content = nl == std::string_view::npos ? std::string_view{} : content.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

inline long long header_int(std::string_view token, std::string_view key, long long lo, long long hi,
                            std::size_t line_no) {
    long long v = 0;
    if (!parse_int(value_of(token, key), v) || v < lo || v > hi) {
        throw line_error(ErrorCode::MalformedLine, line_no, "bad header field " + std::string(key));
    }
    return v;
}

}  // namespace inkrec::detail
