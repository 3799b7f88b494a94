#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace dualtune::io {

struct NumberedLine {
    std::size_t number = 0;  // 1-based
    std::string text;
};

// Whole file as numbered lines; throws std::runtime_error when unreadable.
std::vector<NumberedLine> read_numbered_lines(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

// Write-to-temp + rename so readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

bool is_blank(std::string_view line);

// Splits one TSV line; no quoting, fields must not contain tabs.
std::vector<std::string> split_tsv(std::string_view line);

std::string join_tsv(const std::vector<std::string>& fields);

}  // namespace dualtune::io
