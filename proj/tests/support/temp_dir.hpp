#pragma once

#include <filesystem>
#include <random>
#include <string>

namespace wgs::testing {

/// Unique scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "wgs") {
        static std::mt19937_64 rng(std::random_device{}());
        const auto base = std::filesystem::temp_directory_path();
        for (;;) {
            path_ = base / (tag + "_" + std::to_string(rng()));
            std::error_code ec;
            if (std::filesystem::create_directory(path_, ec)) break;
        }
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

}  // namespace wgs::testing
