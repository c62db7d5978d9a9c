#ifndef STORYREEL_UTIL_HPP_
#define STORYREEL_UTIL_HPP_

#include <filesystem>
#include <string>
#include <vector>

namespace storyreel::util {

// Hex-encoded SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file_hex(const std::filesystem::path& path);

std::string trim(const std::string& s);
std::string to_lower(const std::string& s);

// Canonical form used for name comparison: trimmed, ASCII-casefolded,
// inner whitespace collapsed. Non-ASCII bytes pass through unchanged.
std::string normalize_name(const std::string& s);

// Whitespace-collapsed lowercase form used for substring coverage checks.
std::string normalize_text(const std::string& s);

// True if `token` occurs in `text` as a whole word (case-insensitive,
// boundaries are non-alphanumeric characters; '-' inside a token is literal).
bool contains_word(const std::string& text, const std::string& token);

// Arithmetic mean with half-up rounding at two decimals.
double mean_half_up_2dp(const std::vector<double>& values);

// Write-temp-then-rename. Parent directories are created.
void atomic_write(const std::filesystem::path& path, const std::string& bytes);

std::string read_file(const std::filesystem::path& path);

struct CommandResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr combined
};

// Runs a shell command, capturing combined output.
CommandResult run_command(const std::string& command);

}  // namespace storyreel::util

#endif  // STORYREEL_UTIL_HPP_
