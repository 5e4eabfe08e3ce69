#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace mosaic {

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(const std::string& text);
std::string sha256_file(const std::filesystem::path& path);

/// Writes through a sibling temporary file and renames it into place.
void write_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_atomic(const std::filesystem::path& path, const std::string& text);

struct FileRecord {
    std::string path;
    std::string sha256;
    std::uintmax_t bytes = 0;
};

FileRecord file_record(const std::filesystem::path& path, const std::filesystem::path& base = {});

/// Provenance of one command invocation. Artifact paths are stored relative
/// to the output directory.
class RunManifest {
public:
    RunManifest(std::string command, std::filesystem::path out_dir);

    void set_config(const std::string& effective_config);
    void add_seed(const std::string& name, std::uint64_t value);
    void add_input(const std::filesystem::path& path);
    void add_artifact(const std::filesystem::path& path);
    void add_note(const std::string& key, const std::string& value);

    /// Atomic write to <out>/manifest.json; returns the path.
    std::filesystem::path save() const;
    std::string to_json() const;

    const std::vector<FileRecord>& artifacts() const { return artifacts_; }
    const std::string& config_hash() const { return config_hash_; }

private:
    std::string command_;
    std::filesystem::path out_dir_;
    std::string config_text_;
    std::string config_hash_;
    std::map<std::string, std::uint64_t> seeds_;
    std::map<std::string, std::string> notes_;
    std::vector<FileRecord> inputs_;
    std::vector<FileRecord> artifacts_;
    std::chrono::steady_clock::time_point start_;
};

const char* tool_version();

}  // namespace mosaic
