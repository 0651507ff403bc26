#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ceker {

namespace fs = std::filesystem;

// ---- file IO -------------------------------------------------------------

std::string read_file(const fs::path& path);
std::optional<std::string> try_read_file(const fs::path& path);

// Write-temp-then-rename so readers never observe a half-written file.
void write_file_atomic(const fs::path& path, std::string_view content);

void append_line(const fs::path& path, std::string_view line);
void ensure_dir(const fs::path& path);

// ---- strings ---------------------------------------------------------------

std::string trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);
bool starts_with(std::string_view s, std::string_view prefix);
bool ends_with(std::string_view s, std::string_view suffix);
bool contains(std::string_view haystack, std::string_view needle);
bool contains_ci(std::string_view haystack, std::string_view needle);

// Splits on '\n'; a trailing newline does not produce an extra empty element.
std::vector<std::string> split_lines(std::string_view text);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Whitespace-delimited token count (the word-count rule used everywhere).
std::size_t word_count(std::string_view text);

bool is_valid_utf8(std::string_view bytes);

// "0.85" style rendering of a score held in hundredths (0..100).
std::string format_hundredths(int hundredths);

// ---- time ------------------------------------------------------------------

std::string now_iso8601_utc();

// ---- execution ---------------------------------------------------------------

// Runs fn(0..count-1) across up to `parallelism` workers and rethrows the
// first failure after all workers stop.
void parallel_for_each(std::size_t count, int parallelism,
                       const std::function<void(std::size_t)>& fn);

// Crash-test hook: when CEKER_ABORT_AFTER_STEPS=N is set, the N-th completed
// pipeline step throws Aborted, simulating a kill for resumability checks.
void count_completed_step();

// ---- process (test/CLI helpers) ---------------------------------------------

std::string shell_quote(std::string_view arg);

} // namespace ceker
