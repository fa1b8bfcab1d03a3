// Copyright (c) 2026 the splitkv authors. All rights reserved.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "splitkv/log_record.hpp"
#include "splitkv/types.hpp"

namespace splitkv {

// Single shared append-only log. Both TC records (updates, commits,
// checkpoint markers) and DC records (delta, BW, SMO, rssp markers) live
// here, distinguished by a kind tag.
//
// On-disk layout: fixed header (magic, version, page size), then framed
// records. Each frame is [magic u16][len u32][crc32 u32][payload]. A record's
// Lsn is the byte offset of its frame start. The crash-truncated tail is
// detected by frame checksum failure.
//
// Single-writer append; scans run against the stable prefix only.
class Wal {
public:
    static constexpr std::uint64_t kHeaderSize = 16;
    static constexpr std::uint64_t kFrameOverhead = 10;

    // Opens or creates a log file. When opening an existing file, the stable
    // end is recovered by scanning to the last whole frame; trailing garbage
    // from a torn write is truncated away.
    Wal(std::string path, std::uint32_t pageSize, bool create);
    ~Wal();

    Wal(const Wal&) = delete;
    Wal& operator=(const Wal&) = delete;

    // Frames and buffers the record; returns its Lsn. The buffer is flushed
    // to stable storage when it exceeds one log page.
    Lsn append(const RecordBody& body);

    // Makes every record with Lsn <= lsn durable. Returns the new stable-log
    // end: the Lsn of the last record on stable storage (the value EOSL
    // carries). forceTo(kNullLsn) changes nothing.
    Lsn forceTo(Lsn lsn);
    Lsn forceAll() { return forceTo(m_lastAppended); }

    // Lsn of the last record on stable storage; kNullLsn when the log is empty.
    Lsn stableLsn() const { return m_lastStable; }
    Lsn lastAppendedLsn() const { return m_lastAppended; }
    // Byte offset one past the last stable frame (the recovery scan limit).
    std::uint64_t stableEndOffset() const { return m_stableEnd; }
    // Position of the first record.
    Lsn startLsn() const { return kHeaderSize; }
    std::uint32_t pageSize() const { return m_pageSize; }
    const std::string& path() const { return m_path; }

    // Discards the unforced buffered tail (crash injection).
    void dropVolatile();

    class Cursor {
    public:
        // Yields records in Lsn order, stopping at the first torn or
        // checksum-failing frame.
        std::optional<LogRecord> next();

    private:
        friend class Wal;
        Cursor(int fd, std::uint64_t from, std::uint64_t end, KindMask mask, bool first);

        bool readFrame(LogRecord& out);

        int m_fd;
        std::uint64_t m_off;
        std::uint64_t m_end;
        KindMask m_mask;
        bool m_firstFrame;
        std::vector<std::uint8_t> m_buf;
        std::uint64_t m_bufOff = 0;
    };

    // from == kNullLsn means the log start. Throws ScanError when from is not
    // a record boundary.
    Cursor scan(Lsn from, KindMask mask = KindMask::all()) const;

    // Convenience: materialize a scan.
    std::vector<LogRecord> scanAll(Lsn from, KindMask mask = KindMask::all()) const;

    // Lsn of the bCkpt of the most recent completed checkpoint, or the log
    // start when no completed checkpoint exists.
    Lsn findRedoScanStart() const;

private:
    void flushBuffer();
    void ioFail(const std::string& what);

    std::string m_path;
    int m_fd = -1;
    std::uint32_t m_pageSize;
    std::uint64_t m_stableEnd = kHeaderSize; // file offset after last stable frame
    Lsn m_lastStable = kNullLsn;
    Lsn m_lastAppended = kNullLsn;
    std::uint64_t m_appendEnd = kHeaderSize; // next frame offset (incl. buffered)
    std::vector<std::uint8_t> m_buf;
    bool m_failed = false;
};

} // namespace splitkv
