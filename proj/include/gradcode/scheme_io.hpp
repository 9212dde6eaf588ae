#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "gradcode/codec.hpp"
#include "gradcode/partial.hpp"

namespace gradcode {

inline constexpr int kSchemeFormatVersion = 1;

// Scheme file: a JSON document with fields, in order,
//   version, kind, n, k, s, h_seed (cyc only), B
// B holds n rows of k numbers printed with 17 significant digits. Plan files
// append alpha, naive_per_worker and naive_assignment.
std::string export_code_text(const GradientCode& code);
GradientCode import_code_text(std::string_view text);

void export_code(const GradientCode& code, const std::filesystem::path& path);
GradientCode import_code(const std::filesystem::path& path);

std::string export_plan_text(const TwoStagePlan& plan);
TwoStagePlan import_plan_text(std::string_view text);

// Shared helpers for the other text writers.
std::string format_real(double v);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace gradcode
