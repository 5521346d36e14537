#pragma once

// Text formats: CSV matrices and sequences, JSON results and models. Numbers
// are written with 17 significant digits so that they read back exactly.

#include <json.hpp>

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "otc/hmm.hpp"
#include "otc/markov.hpp"
#include "otc/otc_exact.hpp"

namespace otc {

std::string format_double(double value);

/// Comma-separated rows; blank lines and lines starting with '#' are skipped.
/// Every row must have the same number of fields.
Matrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);

/// Nonnegative integers separated by commas and/or whitespace; '#' starts a comment.
std::vector<std::size_t> read_sequence(const std::filesystem::path& path);

/// Writes through a temporary file in the same directory and renames it.
void write_text_atomic(const std::filesystem::path& path, const std::string& contents);

nlohmann::json solution_to_json(const OtcSolution& solution);

nlohmann::json hmm_to_json(const Hmm& model);
Hmm hmm_from_json(const nlohmann::json& j);

nlohmann::json coupled_to_json(const CoupledHmm& model);
CoupledHmm coupled_from_json(const nlohmann::json& j);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

std::string samples_to_csv(const std::vector<SampleRow>& rows);

}  // namespace otc
