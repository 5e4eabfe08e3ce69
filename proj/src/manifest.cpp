#include "mosaic/manifest.hpp"

#include "mosaic/error.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <array>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <memory>

#ifndef MOSAIC_VERSION
#define MOSAIC_VERSION "0.0.0"
#endif

namespace mosaic {

namespace {

struct DigestCtx {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx{EVP_MD_CTX_new(), &EVP_MD_CTX_free};
    DigestCtx() {
        if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) fail("sha256: digest init failed");
    }
    void update(const void* data, std::size_t n) {
        if (EVP_DigestUpdate(ctx.get(), data, n) != 1) fail("sha256: digest update failed");
    }
    std::string hex() {
        std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
        unsigned int len = 0;
        if (EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) fail("sha256: digest final failed");
        std::string out;
        char buf[3];
        for (unsigned int i = 0; i < len; ++i) {
            std::snprintf(buf, sizeof buf, "%02x", md[i]);
            out += buf;
        }
        return out;
    }
};

std::atomic<unsigned> g_temp_counter{0};

}  // namespace

const char* tool_version() { return MOSAIC_VERSION; }

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
    DigestCtx d;
    d.update(bytes.data(), bytes.size());
    return d.hex();
}

std::string sha256_hex(const std::string& text) {
    DigestCtx d;
    d.update(text.data(), text.size());
    return d.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open " + path.string());
    DigestCtx d;
    std::array<char, 1 << 16> buf;
    while (in) {
        in.read(buf.data(), buf.size());
        d.update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    return d.hex();
}

void write_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp" + std::to_string(g_temp_counter.fetch_add(1));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail("cannot write " + tmp.string());
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) fail("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void write_atomic(const std::filesystem::path& path, const std::string& text) {
    write_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

FileRecord file_record(const std::filesystem::path& path, const std::filesystem::path& base) {
    FileRecord r;
    r.path = base.empty() ? path.string() : std::filesystem::relative(path, base).generic_string();
    r.sha256 = sha256_file(path);
    r.bytes = std::filesystem::file_size(path);
    return r;
}

RunManifest::RunManifest(std::string command, std::filesystem::path out_dir)
    : command_(std::move(command)), out_dir_(std::move(out_dir)), start_(std::chrono::steady_clock::now()) {}

void RunManifest::set_config(const std::string& effective_config) {
    config_text_ = effective_config;
    config_hash_ = sha256_hex(effective_config);
}

void RunManifest::add_seed(const std::string& name, std::uint64_t value) { seeds_[name] = value; }

void RunManifest::add_input(const std::filesystem::path& path) { inputs_.push_back(file_record(path)); }

void RunManifest::add_artifact(const std::filesystem::path& path) {
    FileRecord r = file_record(path, out_dir_);
    for (auto& a : artifacts_)
        if (a.path == r.path) {
            a = r;
            return;
        }
    artifacts_.push_back(std::move(r));
}

void RunManifest::add_note(const std::string& key, const std::string& value) { notes_[key] = value; }

std::string RunManifest::to_json() const {
    using nlohmann::json;
    json j;
    j["command"] = command_;
    j["tool_version"] = tool_version();
    j["config_hash"] = config_hash_;
    j["config"] = config_text_;
    j["seeds"] = seeds_;
    const auto records = [](const std::vector<FileRecord>& v) {
        json arr = json::array();
        for (const auto& r : v) arr.push_back({{"path", r.path}, {"sha256", r.sha256}, {"bytes", r.bytes}});
        return arr;
    };
    j["inputs"] = records(inputs_);
    j["artifacts"] = records(artifacts_);
    if (!notes_.empty()) j["notes"] = notes_;
    j["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    return j.dump(2) + "\n";
}

std::filesystem::path RunManifest::save() const {
    const auto path = out_dir_ / "manifest.json";
    write_atomic(path, to_json());
    return path;
}

}  // namespace mosaic
