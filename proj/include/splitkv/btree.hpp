// Copyright (c) 2026 the splitkv authors. All rights reserved.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "splitkv/buffer_pool.hpp"
#include "splitkv/log_record.hpp"
#include "splitkv/pagefile.hpp"
#include "splitkv/types.hpp"

namespace splitkv {

// Clustered B-tree over fixed-length records. All leaves at equal depth;
// splits are physiological SMOs logged through the injected append hook and
// are redo-only. The same insert sequence always produces the same page
// allocation and split points.
class BTree {
public:
    // Appends an SMO record to the shared log and returns its Lsn.
    using SmoLogFn = std::function<Lsn(const SmoRecord&)>;

    BTree(PageFile& file, BufferPool& pool) : m_file(file), m_pool(pool) {}

    void setSmoLog(SmoLogFn fn) { m_smoLog = std::move(fn); }

    // Leaf pid whose key range covers key. Traversal charges index-page
    // fetches for uncached internal pages; the leaf itself is not fetched.
    Pid find(Key key);

    // Normal-execution write path, phase 1: locate the covering leaf and run
    // any split needed to make room, logging each SMO before its effects.
    Pid prepareUpsert(Key key);

    // Phase 2: write the value into the covering leaf under lsn.
    // Also the redo-time apply. Inserts when the key is absent.
    void applyValue(Pid leafPid, Key key, std::span<const std::uint8_t> value, Lsn lsn);

    // Physiological redo of a split: each affected page is re-applied iff its
    // pLsn predates the record.
    void redoSmo(const SmoRecord& rec, Lsn lsn);

    // Loads all internal pages; returns how many. Root-is-leaf trees load 0.
    std::uint32_t preloadIndex();

    // Structural integrity audit (sortedness, separators, uniform depth).
    // Reads directly, bypassing the pool's counters. Throws IntegrityError.
    void audit() const;

    // FNV-1a over (key, payload) of every row in key order. Sees cached
    // (possibly dirty) pages first, stable pages otherwise; uncounted.
    std::uint64_t contentDigest() const;

    // Row visitor in key order (uncounted reads), for oracle comparisons.
    void visitRows(const std::function<void(Key, std::span<const std::uint8_t>)>& fn) const;

    Pid rootPid() const { return m_file.meta().rootPid; }
    std::uint32_t height() const { return m_file.meta().height; }

    struct LoadStats {
        std::uint64_t rows = 0;
        Pid leafPages = 0;
        Pid indexPages = 0;
        std::uint32_t height = 0;
    };

    // Bulk-loads rows 0..rowCount-1 in key order, packing leaves full and
    // building the index bottom-up. Pages are written directly; nothing is
    // logged. The tree must be empty.
    static LoadStats bulkLoad(PageFile& file, std::uint64_t rowCount,
                              const std::function<void(Key, std::span<std::uint8_t>)>& fillPayload);

private:
    struct PathEntry {
        Pid pid;
        std::uint16_t slot;
    };

    std::vector<PathEntry> descend(Key key);
    // Splits the full page at path[depth]; ancestors must have room.
    void splitAt(const std::vector<PathEntry>& path, std::size_t depth);
    void readStable(Pid pid, std::vector<std::uint8_t>& buf) const;
    void auditNode(Pid pid, std::uint32_t depth, bool hasLo, Key lo, bool hasHi, Key hi,
                   std::uint32_t expectLeafDepth) const;

    PageFile& m_file;
    BufferPool& m_pool;
    SmoLogFn m_smoLog;
};

} // namespace splitkv
