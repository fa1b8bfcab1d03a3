// Copyright (c) 2026 the splitkv authors. All rights reserved.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#include "splitkv/wal.hpp"

#include <fcntl.h>
#include <unistd.h>
#include <zlib.h>

#include <cerrno>
#include <cstring>

#include "serde.hpp"

namespace splitkv {

namespace {

constexpr std::uint16_t kFrameMagic = 0x4C52; // "RL"
constexpr char kFileMagic[8] = {'S', 'P', 'L', 'I', 'T', 'K', 'V', 'L'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kMaxRecordBytes = 16u << 20;

std::uint32_t crcOf(const std::uint8_t* p, std::size_t n) {
    return static_cast<std::uint32_t>(::crc32(0L, p, static_cast<uInt>(n)));
}

bool preadAll(int fd, void* buf, std::size_t n, std::uint64_t off) {
    auto* p = static_cast<std::uint8_t*>(buf);
    while (n > 0) {
        ssize_t r = ::pread(fd, p, n, static_cast<off_t>(off));
        if (r <= 0) return false;
        p += r;
        off += static_cast<std::uint64_t>(r);
        n -= static_cast<std::size_t>(r);
    }
    return true;
}

} // namespace

Wal::Wal(std::string path, std::uint32_t pageSize, bool create)
    : m_path(std::move(path)), m_pageSize(pageSize) {
    int flags = O_RDWR | (create ? O_CREAT | O_TRUNC : 0);
    m_fd = ::open(m_path.c_str(), flags, 0644);
    if (m_fd < 0) throw FatalLogError("cannot open log file " + m_path + ": " + std::strerror(errno));

    if (create) {
        std::vector<std::uint8_t> hdr;
        serde::putBytes(hdr, reinterpret_cast<const std::uint8_t*>(kFileMagic), 8);
        serde::putInt<std::uint32_t>(hdr, kVersion);
        serde::putInt<std::uint32_t>(hdr, m_pageSize);
        if (::pwrite(m_fd, hdr.data(), hdr.size(), 0) != static_cast<ssize_t>(hdr.size())) {
            ioFail("log header write failed");
        }
        return;
    }

    std::uint8_t hdr[kHeaderSize];
    if (!preadAll(m_fd, hdr, sizeof hdr, 0) || std::memcmp(hdr, kFileMagic, 8) != 0) {
        throw FatalLogError("not a log file: " + m_path);
    }
    serde::Reader r(hdr + 8, 8);
    if (r.getInt<std::uint32_t>() != kVersion) throw FatalLogError("log version mismatch");
    m_pageSize = r.getInt<std::uint32_t>();

    // Recover the stable end: walk whole frames until the torn tail.
    off_t fileSize = ::lseek(m_fd, 0, SEEK_END);
    Cursor c(m_fd, kHeaderSize, static_cast<std::uint64_t>(fileSize), KindMask::all(), false);
    while (auto rec = c.next()) {
        m_lastStable = rec->lsn;
    }
    m_stableEnd = c.m_off;
    m_appendEnd = m_stableEnd;
    m_lastAppended = m_lastStable;
    if (static_cast<std::uint64_t>(fileSize) != m_stableEnd) {
        if (::ftruncate(m_fd, static_cast<off_t>(m_stableEnd)) != 0) ioFail("log truncate failed");
    }
}

Wal::~Wal() {
    if (m_fd >= 0) ::close(m_fd);
}

void Wal::ioFail(const std::string& what) {
    m_failed = true;
    throw FatalLogError(what + ": " + std::strerror(errno));
}

Lsn Wal::append(const RecordBody& body) {
    if (m_failed) throw FatalLogError("log is in failed state; appends halted");
    auto payload = encodeRecordBody(body);
    if (payload.size() > kMaxRecordBytes) throw FatalLogError("log record too large");

    const Lsn lsn = m_appendEnd;
    serde::putInt<std::uint16_t>(m_buf, kFrameMagic);
    serde::putInt<std::uint32_t>(m_buf, static_cast<std::uint32_t>(payload.size()));
    serde::putInt<std::uint32_t>(m_buf, crcOf(payload.data(), payload.size()));
    serde::putBytes(m_buf, payload.data(), payload.size());
    m_appendEnd += kFrameOverhead + payload.size();
    m_lastAppended = lsn;

    if (m_buf.size() >= m_pageSize) flushBuffer();
    return lsn;
}

void Wal::flushBuffer() {
    if (m_buf.empty()) return;
    if (::pwrite(m_fd, m_buf.data(), m_buf.size(), static_cast<off_t>(m_stableEnd)) !=
        static_cast<ssize_t>(m_buf.size())) {
        ioFail("log flush failed");
    }
    m_stableEnd += m_buf.size();
    m_lastStable = m_lastAppended;
    m_buf.clear();
}

Lsn Wal::forceTo(Lsn lsn) {
    if (m_failed) throw FatalLogError("log is in failed state");
    if (lsn == kNullLsn) return m_lastStable;
    if (lsn > m_lastAppended) throw ContractError("forceTo target beyond append position");
    if (lsn > m_lastStable) flushBuffer();
    return m_lastStable;
}

void Wal::dropVolatile() {
    m_buf.clear();
    m_appendEnd = m_stableEnd;
    m_lastAppended = m_lastStable;
}

Wal::Cursor::Cursor(int fd, std::uint64_t from, std::uint64_t end, KindMask mask, bool first)
    : m_fd(fd), m_off(from), m_end(end), m_mask(mask), m_firstFrame(first) {}

bool Wal::Cursor::readFrame(LogRecord& out) {
    if (m_off + kFrameOverhead > m_end) {
        if (m_firstFrame && m_off + 2 <= m_end) {
            std::uint8_t m[2];
            if (preadAll(m_fd, m, 2, m_off)) {
                std::uint16_t magic = static_cast<std::uint16_t>(m[0] | (m[1] << 8));
                if (magic != kFrameMagic) throw ScanError("scan start is not a record boundary");
            }
        }
        return false;
    }
    std::uint8_t hdr[kFrameOverhead];
    if (!preadAll(m_fd, hdr, sizeof hdr, m_off)) return false;
    serde::Reader r(hdr, sizeof hdr);
    const auto magic = r.getInt<std::uint16_t>();
    const auto len = r.getInt<std::uint32_t>();
    const auto crc = r.getInt<std::uint32_t>();
    if (magic != kFrameMagic) {
        if (m_firstFrame) throw ScanError("scan start is not a record boundary");
        return false;
    }
    if (len > kMaxRecordBytes || m_off + kFrameOverhead + len > m_end) return false;
    std::vector<std::uint8_t> payload(len);
    if (len > 0 && !preadAll(m_fd, payload.data(), len, m_off + kFrameOverhead)) return false;
    if (crcOf(payload.data(), payload.size()) != crc) return false;

    out.lsn = m_off;
    try {
        out.body = decodeRecordBody(payload.data(), payload.size());
    } catch (const std::exception&) {
        return false; // undecodable payload is treated like a torn frame
    }
    m_off += kFrameOverhead + len;
    m_firstFrame = false;
    return true;
}

std::optional<LogRecord> Wal::Cursor::next() {
    LogRecord rec;
    while (readFrame(rec)) {
        if (m_mask.accepts(rec.kind())) return rec;
    }
    return std::nullopt;
}

Wal::Cursor Wal::scan(Lsn from, KindMask mask) const {
    std::uint64_t start = (from == kNullLsn) ? kHeaderSize : from;
    if (start < kHeaderSize || start > m_stableEnd) throw ScanError("scan start out of range");
    return Cursor(m_fd, start, m_stableEnd, mask, start < m_stableEnd);
}

std::vector<LogRecord> Wal::scanAll(Lsn from, KindMask mask) const {
    std::vector<LogRecord> out;
    auto c = scan(from, mask);
    while (auto rec = c.next()) out.push_back(std::move(*rec));
    return out;
}

Lsn Wal::findRedoScanStart() const {
    Lsn completed = kNullLsn;
    auto c = scan(kNullLsn, KindMask{RecordKind::BeginCheckpoint, RecordKind::EndCheckpoint});
    while (auto rec = c.next()) {
        if (rec->is<EndCheckpointRecord>()) {
            const auto b = rec->as<EndCheckpointRecord>().bCkptLsn;
            if (b > completed) completed = b;
        }
    }
    return completed == kNullLsn ? startLsn() : completed;
}

} // namespace splitkv
