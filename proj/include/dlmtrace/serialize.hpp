#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "dlmtrace/core.hpp"
#include "dlmtrace/ddm.hpp"
#include "dlmtrace/fingerprint.hpp"
#include "json.hpp"

namespace dlmtrace {

using Json = nlohmann::ordered_json;

/// printf("%.17g"); "inf", "-inf" and "nan" for non-finite values.
std::string format_number(double v);

/// Writes `content` to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Whole file as a string. Throws DataError when it cannot be opened.
std::string read_text_file(const std::filesystem::path& path);

/// Flat row-major array of the entries.
Json matrix_to_json(const Matrix& m);

/// Inverse of matrix_to_json; `what` names the field in error messages.
Matrix matrix_from_json(const Json& values, Eigen::Index rows, Eigen::Index cols,
                        std::string_view what);

Json to_json(const EffectValues& ev);
EffectValues effect_values_from_json(const Json& j);

/// Container with `shape`, `effect_values`, `entries` (row-major) and
/// `source` ({model_id, prompt_id}).
Json to_json(const DirectedDecodingMap& ddm);
DirectedDecodingMap ddm_from_json(const Json& j);

/// Fingerprint file. Besides model_id, shape, granularity, variance_floor,
/// effect_values, n_samples, mu and var it records the feature scheme and
/// tie rule so scoring can refuse maps built differently.
Json to_json(const Fingerprint& fp);
Fingerprint fingerprint_from_json(const Json& j);

void write_fingerprint_file(const std::filesystem::path& path, const Fingerprint& fp);
Fingerprint read_fingerprint_file(const std::filesystem::path& path);

}  // namespace dlmtrace
