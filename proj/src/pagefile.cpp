// Copyright (c) 2026 the splitkv authors. All rights reserved.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#include "splitkv/pagefile.hpp"

#include <fcntl.h>
#include <unistd.h>
#include <zlib.h>

#include <algorithm>
#include <cerrno>
#include <cstring>

#include "serde.hpp"

namespace splitkv {

namespace {

constexpr char kFileMagic[8] = {'S', 'P', 'L', 'I', 'T', 'K', 'V', 'P'};
constexpr std::uint32_t kVersion = 1;

std::uint32_t pageCrc(const std::uint8_t* buf, std::uint32_t pageSize) {
    return static_cast<std::uint32_t>(::crc32(0L, buf + 4, pageSize - 4));
}

void putCrc(std::uint8_t* buf, std::uint32_t pageSize) {
    std::uint32_t crc = pageCrc(buf, pageSize);
    std::memcpy(buf, &crc, 4);
}

bool allZero(const std::uint8_t* buf, std::uint32_t n) {
    return std::all_of(buf, buf + n, [](std::uint8_t b) { return b == 0; });
}

} // namespace

PageFile::PageFile(std::string path, PageGeometry geo, bool create)
    : m_path(std::move(path)), m_geo(geo) {
    int flags = O_RDWR | (create ? O_CREAT | O_TRUNC : 0);
    m_fd = ::open(m_path.c_str(), flags, 0644);
    if (m_fd < 0) throw FatalLogError("cannot open page file " + m_path + ": " + std::strerror(errno));

    if (create) {
        m_pageCount = 1;
        if (::ftruncate(m_fd, m_geo.pageSize) != 0) throw FatalLogError("page file grow failed");
        storeMeta();
    } else {
        loadHeader();
    }
}

PageFile::~PageFile() {
    if (m_fd >= 0) ::close(m_fd);
}

void PageFile::loadHeader() {
    off_t size = ::lseek(m_fd, 0, SEEK_END);
    std::vector<std::uint8_t> buf(kDefaultPageSize);
    if (::pread(m_fd, buf.data(), 64, 0) < 64 || std::memcmp(buf.data() + 4, kFileMagic, 8) != 0) {
        throw FatalLogError("not a database file: " + m_path);
    }
    serde::Reader r(buf.data() + 12, 52);
    if (r.getInt<std::uint32_t>() != kVersion) throw FatalLogError("database version mismatch");
    m_geo.pageSize = r.getInt<std::uint32_t>();
    m_geo.payloadSize = r.getInt<std::uint32_t>();
    m_meta.tableId = r.getInt<std::uint32_t>();
    m_meta.rootPid = r.getInt<std::uint32_t>();
    m_meta.height = r.getInt<std::uint32_t>();
    m_meta.metaPLsn = r.getInt<std::uint64_t>();
    m_meta.rowCount = r.getInt<std::uint64_t>();
    m_pageCount = static_cast<Pid>(static_cast<std::uint64_t>(size) / m_geo.pageSize);
}

void PageFile::storeMeta() {
    std::vector<std::uint8_t> buf(m_geo.pageSize, 0);
    std::memcpy(buf.data() + 4, kFileMagic, 8);
    std::vector<std::uint8_t> fields;
    serde::putInt<std::uint32_t>(fields, kVersion);
    serde::putInt<std::uint32_t>(fields, m_geo.pageSize);
    serde::putInt<std::uint32_t>(fields, m_geo.payloadSize);
    serde::putInt<std::uint32_t>(fields, m_meta.tableId);
    serde::putInt<std::uint32_t>(fields, m_meta.rootPid);
    serde::putInt<std::uint32_t>(fields, m_meta.height);
    serde::putInt<std::uint64_t>(fields, m_meta.metaPLsn);
    serde::putInt<std::uint64_t>(fields, m_meta.rowCount);
    std::memcpy(buf.data() + 12, fields.data(), fields.size());
    putCrc(buf.data(), m_geo.pageSize);
    if (::pwrite(m_fd, buf.data(), m_geo.pageSize, 0) != static_cast<ssize_t>(m_geo.pageSize)) {
        throw FatalLogError("header write failed");
    }
}

void PageFile::readPage(Pid pid, std::uint8_t* buf) const {
    if (pid >= m_pageCount) throw PageFaultError("page " + std::to_string(pid) + " out of range");
    ssize_t r = ::pread(m_fd, buf, m_geo.pageSize, static_cast<off_t>(pid) * m_geo.pageSize);
    if (r != static_cast<ssize_t>(m_geo.pageSize)) {
        // Reading into a hole of a sparse file yields zeros; short reads past
        // EOF of an ftruncate-extended file do not happen on POSIX, but keep
        // the check strict.
        throw FatalLogError("page read failed for pid " + std::to_string(pid));
    }
    std::uint32_t crc;
    std::memcpy(&crc, buf, 4);
    if (crc != pageCrc(buf, m_geo.pageSize) && !allZero(buf, m_geo.pageSize)) {
        throw IntegrityError("page checksum mismatch on pid " + std::to_string(pid));
    }
}

void PageFile::writePage(Pid pid, std::uint8_t* buf) {
    if (pid >= m_pageCount) throw PageFaultError("page " + std::to_string(pid) + " out of range");
    putCrc(buf, m_geo.pageSize);
    if (::pwrite(m_fd, buf, m_geo.pageSize, static_cast<off_t>(pid) * m_geo.pageSize) !=
        static_cast<ssize_t>(m_geo.pageSize)) {
        throw FatalLogError("page write failed for pid " + std::to_string(pid));
    }
}

Pid PageFile::allocPage() {
    Pid pid = m_pageCount;
    ensurePage(pid);
    return pid;
}

void PageFile::ensurePage(Pid pid) {
    if (pid < m_pageCount) return;
    m_pageCount = pid + 1;
    if (::ftruncate(m_fd, static_cast<off_t>(m_pageCount) * m_geo.pageSize) != 0) {
        throw FatalLogError("page file grow failed");
    }
}

} // namespace splitkv
