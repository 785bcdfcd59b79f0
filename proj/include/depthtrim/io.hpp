#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "depthtrim/types.hpp"

namespace depthtrim {

/// Shortest round-trip decimal representation (std::to_chars), locale-free.
/// All CSV/JSON emitters go through this so outputs are byte-reproducible.
std::string format_double(double v);

class CsvParseError : public std::runtime_error {
public:
    CsvParseError(const std::string& msg, std::size_t line)
        : std::runtime_error(msg + " (line " + std::to_string(line) + ")"),
          line_number(line) {}
    std::size_t line_number;
};

/// Reads an n x d numeric CSV. A single leading header row is skipped when
/// its first field does not parse as a number.
Sample read_sample_csv(const std::string& path);

void write_text_file(const std::string& path, std::string_view content);
std::string read_text_file(const std::string& path);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::string& path);

struct RunManifest {
    std::string command;
    std::string config_hash;
    std::map<std::string, std::string> input_digests;  // path -> sha256
    std::uint64_t base_seed = 0;
    std::string version;
    double wall_time_s = 0;
    std::vector<std::pair<std::string, std::string>> outputs;  // file -> sha256
};

/// Writes <dir>/manifest.json; output digests are recomputed from disk.
void write_manifest(const std::string& dir, RunManifest manifest);

}  // namespace depthtrim
