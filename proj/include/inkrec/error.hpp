#pragma once

#include <charconv>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>

namespace inkrec {

enum class ErrorCode : std::uint8_t {
    MalformedLine,
    NonMonotoneTime,
    EmptyRecord,
    InconsistentPressureState,
    DegenerateGeometry,
    InvalidParams,
    DimensionMismatch,
    EmptyReferenceSet,
    TooShort,
    EmptyTrainingSet,
    DegenerateStroke,
    CatalogueMismatch,
    NoUsableStrokes,
    WordMismatch,
    EmptyChannel,
    EmptyList,
    MissingModel,
    MissingRecord,
    MissingPhase,
    NoGenuine,
    NoImpostor,
    LengthMismatch,
    AllZeroDifferences,
    TooFewSamples,
    ZeroVariance,
    Io,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::NonMonotoneTime: return "NonMonotoneTime";
    case ErrorCode::EmptyRecord: return "EmptyRecord";
    case ErrorCode::InconsistentPressureState: return "InconsistentPressureState";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyReferenceSet: return "EmptyReferenceSet";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::DegenerateStroke: return "DegenerateStroke";
    case ErrorCode::CatalogueMismatch: return "CatalogueMismatch";
    case ErrorCode::NoUsableStrokes: return "NoUsableStrokes";
    case ErrorCode::WordMismatch: return "WordMismatch";
    case ErrorCode::EmptyChannel: return "EmptyChannel";
    case ErrorCode::EmptyList: return "EmptyList";
    case ErrorCode::MissingModel: return "MissingModel";
    case ErrorCode::MissingRecord: return "MissingRecord";
    case ErrorCode::MissingPhase: return "MissingPhase";
    case ErrorCode::NoGenuine: return "NoGenuine";
    case ErrorCode::NoImpostor: return "NoImpostor";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::AllZeroDifferences: return "AllZeroDifferences";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above; the
/// message adds context such as a line number or a (probe, model) pair.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

namespace detail {

// Shortest decimal text that parses back to the identical double.
inline std::string format_double(double v) {
    char buf[400];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed);
    if (res.ec != std::errc{}) {
        res = std::to_chars(buf, buf + sizeof(buf), v);
    }
    return std::string(buf, res.ptr);
}

inline bool parse_double(std::string_view text, double& out) {
    if (text.empty()) {
        return false;
    }
    if (text.front() == '+') {
        text.remove_prefix(1);
    }
    auto res = std::from_chars(text.data(), text.data() + text.size(), out);
    return res.ec == std::errc{} && res.ptr == text.data() + text.size();
}

inline bool parse_int(std::string_view text, long long& out) {
    auto res = std::from_chars(text.data(), text.data() + text.size(), out);
    return !text.empty() && res.ec == std::errc{} && res.ptr == text.data() + text.size();
}

}  // namespace detail

}  // namespace inkrec
