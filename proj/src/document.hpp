#pragma once
// JSON documents: motive descriptors in, reports out. Used by the C API only.

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"

namespace motper::doc {

using json = nlohmann::json;

inline constexpr const char* kDescriptorSchema = "motper.descriptor/1";
inline constexpr const char* kReportSchema = "motper.report/1";
inline constexpr const char* kVersion = "0.1.0";

// explicit settings win over the document's; unset ones fall back to the document, then defaults
struct RunOptions {
    std::optional<long> bits, guard_bits, confirm_factor;
    std::optional<std::string> max_height;
    std::optional<std::uint64_t> seed;
    std::optional<int> count;
};

struct Outcome {
    json report;
    int exit_code = 1;
};

// text -> json with line/column in the message; throws Error(ParseError)
json parse_text(const std::string& text);
// accepts a bare descriptor, a wrapped input {"descriptor": ...} or a report (its "input" is re-run)
Outcome run(const std::string& command, const json& input, const RunOptions& opts);
// normalized descriptor only (validation); throws Error(ParseError / InvalidArgument)
json normalize_descriptor(const json& j, const RunOptions& opts);

}  // namespace motper::doc
