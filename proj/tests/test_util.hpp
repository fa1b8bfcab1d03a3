// Copyright (c) 2026 the splitkv authors. All rights reserved.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#pragma once

#include <unistd.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>

namespace splitkv::test {

// Fresh scratch directory per test, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        auto base = std::filesystem::temp_directory_path() / "splitkv-tests";
        std::filesystem::create_directories(base);
        static std::atomic<unsigned> counter{0};
        m_path = base / (tag + "-" + std::to_string(::getpid()) + "-" +
                         std::to_string(counter.fetch_add(1)));
        std::filesystem::remove_all(m_path);
        std::filesystem::create_directories(m_path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(m_path, ec);
    }
    std::string file(const std::string& name) const { return (m_path / name).string(); }
    const std::filesystem::path& path() const { return m_path; }

private:
    std::filesystem::path m_path;
};

inline void truncateFile(const std::string& path, std::uint64_t size) {
    std::filesystem::resize_file(path, size);
}

inline std::uint64_t fileSize(const std::string& path) {
    return std::filesystem::file_size(path);
}

} // namespace splitkv::test
