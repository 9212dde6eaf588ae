#include "gradcode/scheme_io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "gradcode/error.hpp"

namespace gradcode {

namespace {

using json = nlohmann::ordered_json;

const std::set<std::string> kCodeFields = {"version", "kind", "n", "k", "s", "h_seed", "B"};
const std::set<std::string> kPlanFields = {"alpha", "naive_per_worker", "naive_assignment"};

[[noreturn]] void parse_fail(const std::string& msg) { throw Error(Errc::ParseError, msg); }

std::size_t line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

// Line on which row `row` of the "B" array opens, or 0 if it cannot be found.
std::size_t line_of_b_row(std::string_view text, std::size_t row) {
  const auto key = text.find("\"B\"");
  if (key == std::string_view::npos) return 0;
  int depth = 0;
  std::size_t seen = 0;
  for (std::size_t i = key + 3; i < text.size(); ++i) {
    if (text[i] == '[') {
      ++depth;
      if (depth == 2 && seen++ == row) return line_of_offset(text, i);
    } else if (text[i] == ']') {
      if (--depth == 0) break;
    }
  }
  return 0;
}

std::string at_line(std::size_t line) {
  return line ? "line " + std::to_string(line) + ": " : std::string{};
}

json parse_document(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    parse_fail(at_line(line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0)) + "malformed JSON: " +
               e.what());
  }
}

const json& require(const json& doc, const char* field) {
  auto it = doc.find(field);
  if (it == doc.end()) parse_fail(std::string("missing field '") + field + "'");
  return *it;
}

std::uint64_t require_count(const json& doc, const char* field) {
  const json& v = require(doc, field);
  if (!v.is_number_unsigned())
    parse_fail(std::string("field '") + field + "' must be a non-negative integer");
  return v.get<std::uint64_t>();
}

void reject_unknown(const json& doc, bool allow_plan) {
  if (!doc.is_object()) parse_fail("scheme document must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (kCodeFields.count(key) || (allow_plan && kPlanFields.count(key))) continue;
    parse_fail("unknown field '" + key + "'");
  }
}

GradientCode code_from_json(const json& doc, std::string_view text) {
  const auto version = require_count(doc, "version");
  if (version != static_cast<std::uint64_t>(kSchemeFormatVersion))
    parse_fail("field 'version': unsupported version " + std::to_string(version));

  const json& kind_v = require(doc, "kind");
  if (!kind_v.is_string()) parse_fail("field 'kind' must be a string");
  const auto kind = parse_code_kind(kind_v.get<std::string>());
  if (!kind) parse_fail("field 'kind': unknown kind '" + kind_v.get<std::string>() + "'");

  const std::size_t n = require_count(doc, "n");
  const std::size_t k = require_count(doc, "k");
  const std::size_t s = require_count(doc, "s");
  if (n == 0 || k == 0) parse_fail("fields 'n' and 'k' must be positive");

  std::optional<std::uint64_t> h_seed;
  if (auto it = doc.find("h_seed"); it != doc.end()) {
    if (!it->is_number_unsigned()) parse_fail("field 'h_seed' must be a non-negative integer");
    h_seed = it->get<std::uint64_t>();
  }

  const json& rows = require(doc, "B");
  if (!rows.is_array() || rows.size() != n)
    parse_fail("field 'B' must be an array of n=" + std::to_string(n) + " rows");
  Mat b(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    const json& row = rows[i];
    const std::string where = at_line(line_of_b_row(text, i)) + "field 'B' row " + std::to_string(i);
    if (!row.is_array() || row.size() != k)
      parse_fail(where + ": expected " + std::to_string(k) + " entries");
    std::size_t nnz = 0;
    for (std::size_t j = 0; j < k; ++j) {
      if (!row[j].is_number()) parse_fail(where + ": entry " + std::to_string(j) + " is not a number");
      b(i, j) = row[j].get<double>();
      if (!std::isfinite(b(i, j))) parse_fail(where + ": entry " + std::to_string(j) + " is not finite");
      nnz += b(i, j) != 0.0;
    }
    const bool replicated = *kind == CodeKind::FracRep || *kind == CodeKind::CycRep;
    if (replicated && nnz != s + 1)
      parse_fail(where + ": has " + std::to_string(nnz) + " non-zeros but s=" + std::to_string(s) +
                 " requires " + std::to_string(s + 1));
  }

  try {
    return GradientCode::from_matrix(*kind, s, std::move(b), h_seed);
  } catch (const Error& e) {
    parse_fail(std::string("scheme violates ") + std::string(code_kind_name(*kind)) +
               " invariants: " + e.what());
  }
}

void write_code_fields(std::ostringstream& out, const GradientCode& code) {
  out << "{\n";
  out << "  \"version\": " << kSchemeFormatVersion << ",\n";
  out << "  \"kind\": \"" << code_kind_name(code.kind()) << "\",\n";
  out << "  \"n\": " << code.workers() << ",\n";
  out << "  \"k\": " << code.partitions() << ",\n";
  out << "  \"s\": " << code.stragglers() << ",\n";
  if (code.h_seed()) out << "  \"h_seed\": " << *code.h_seed() << ",\n";
  out << "  \"B\": [\n";
  const Mat& b = code.encoding();
  for (std::size_t i = 0; i < b.rows(); ++i) {
    out << "    [";
    for (std::size_t j = 0; j < b.cols(); ++j) out << (j ? ", " : "") << format_real(b(i, j));
    out << "]" << (i + 1 < b.rows() ? "," : "") << "\n";
  }
  out << "  ]";
}

}  // namespace

std::string format_real(double v) {
  if (v == 0.0) return "0";  // also folds -0
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string export_code_text(const GradientCode& code) {
  std::ostringstream out;
  write_code_fields(out, code);
  out << "\n}\n";
  return out.str();
}

GradientCode import_code_text(std::string_view text) {
  const json doc = parse_document(text);
  reject_unknown(doc, /*allow_plan=*/false);
  return code_from_json(doc, text);
}

void export_code(const GradientCode& code, const std::filesystem::path& path) {
  write_text_file(path, export_code_text(code));
}

GradientCode import_code(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return import_code_text(text);
  } catch (const Error& e) {
    if (e.code() != Errc::ParseError) throw;
    throw Error(Errc::ParseError, path.string() + ": " + e.what());
  }
}

std::string export_plan_text(const TwoStagePlan& plan) {
  std::ostringstream out;
  write_code_fields(out, plan.coded);
  out << ",\n  \"alpha\": " << format_real(plan.alpha) << ",\n";
  out << "  \"naive_per_worker\": " << plan.naive_per_worker << ",\n";
  out << "  \"naive_assignment\": [\n";
  for (std::size_t w = 0; w < plan.naive_assignment.size(); ++w) {
    out << "    [";
    const auto& parts = plan.naive_assignment[w];
    for (std::size_t j = 0; j < parts.size(); ++j) out << (j ? ", " : "") << parts[j];
    out << "]" << (w + 1 < plan.naive_assignment.size() ? "," : "") << "\n";
  }
  out << "  ]\n}\n";
  return out.str();
}

TwoStagePlan import_plan_text(std::string_view text) {
  const json doc = parse_document(text);
  reject_unknown(doc, /*allow_plan=*/true);
  GradientCode code = code_from_json(doc, text);

  const json& alpha_v = require(doc, "alpha");
  if (!alpha_v.is_number()) parse_fail("field 'alpha' must be a number");
  const double alpha = alpha_v.get<double>();
  const std::size_t per_worker = require_count(doc, "naive_per_worker");

  TwoStagePlan expected = [&] {
    try {
      return plan_partial(code.workers(), code.stragglers(), alpha, code.kind(),
                          code.h_seed().value_or(0));
    } catch (const Error& e) {
      parse_fail(std::string("plan fields are inconsistent: ") + e.what());
    }
  }();
  if (expected.naive_per_worker != per_worker)
    parse_fail("field 'naive_per_worker': expected " + std::to_string(expected.naive_per_worker) +
               " for alpha=" + format_real(alpha));

  const json& assign = require(doc, "naive_assignment");
  std::vector<std::vector<std::size_t>> parsed;
  try {
    parsed = assign.get<std::vector<std::vector<std::size_t>>>();
  } catch (const json::exception&) {
    parse_fail("field 'naive_assignment' must be an array of index arrays");
  }
  if (parsed != expected.naive_assignment)
    parse_fail("field 'naive_assignment' must assign naive partitions contiguously by worker");

  expected.coded = std::move(code);
  return expected;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open '" + path.string() + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error(Errc::IoError, "write to '" + path.string() + "' failed");
}

}  // namespace gradcode
