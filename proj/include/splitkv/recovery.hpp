// Copyright (c) 2026 the splitkv authors. All rights reserved.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "splitkv/btree.hpp"
#include "splitkv/buffer_pool.hpp"
#include "splitkv/dpt.hpp"
#include "splitkv/io_clock.hpp"
#include "splitkv/wal.hpp"

namespace splitkv {

enum class Method { Log0, Log1, Log2, Sql1, Sql2 };
enum class DptMode { Standard, Perfect, Reduced };

const char* methodName(Method m);
std::optional<Method> methodFromName(const std::string& name);

bool methodUsesPrefetch(Method m);
bool methodIsLogical(Method m);

// Flat counter record; one CSV row per recovery run.
struct RecoveryStats {
    Method method = Method::Log0;
    DptMode dptMode = DptMode::Standard;
    std::uint64_t recordsScanned = 0; // update records in the redo scan
    std::uint64_t redoApplied = 0;
    std::uint64_t redoSkippedFilter = 0; // dpt/rLsn filter, no fetch
    std::uint64_t redoSkippedPlsn = 0;   // fetched, pLSN test failed
    std::uint64_t tailRecords = 0;
    std::uint64_t dptSize = 0;
    std::uint64_t pfListSize = 0;
    std::uint64_t deltaRecords = 0;
    std::uint64_t bwRecords = 0;
    std::uint64_t indexPagesPreloaded = 0;
    std::uint64_t dataPagesFetched = 0;
    std::uint64_t indexPagesFetched = 0;
    std::uint64_t logPagesRead = 0;
    std::uint64_t syncStalls = 0;
    std::uint64_t prefetchIssued = 0;
    std::uint64_t prefetchHits = 0;
    std::uint64_t undoCount = 0;
    std::uint64_t simTime = 0; // simulated elapsed time, redo+undo
    std::uint64_t digest = 0;  // leaf content digest after recovery
    std::vector<Pid> dataFetchSet;

    static std::string csvHeader();
    std::string csvRow() const;
};

// --- Analysis passes (pure functions over materialized records) ---

struct SqlAnalysisResult {
    Dpt dpt;
    std::uint64_t bwRecords = 0;
};

// ARIES-style analysis: update records populate the table, BW records prune
// it (remove when lastLsn <= fwLsn, else raise rLsn to fwLsn).
SqlAnalysisResult sqlAnalysis(const std::vector<LogRecord>& records, Lsn bCkptLsn);

struct DcAnalysisResult {
    Dpt dpt;
    Lsn lastDeltaTcLsn = kNullLsn; // seeded with rsspLsn when no delta qualifies
    std::vector<Pid> pfList;
    std::uint64_t deltaRecords = 0;
};

// Delta-record analysis. Only delta records with tcLsn > rsspSeed are
// consulted; dirty-set entries before firstDirty get the previous delta's
// tcLsn as their rLsn candidate, later ones get the record's fwLsn; the
// written set prunes entries with lastLsn < fwLsn. Perfect mode replays the
// per-update lsns exactly as sqlAnalysis would; reduced mode ignores
// fwLsn/firstDirty and assigns the previous delta's tcLsn throughout.
DcAnalysisResult dcAnalysis(const std::vector<LogRecord>& records, Lsn rsspSeed, DptMode mode);

// --- Cost model ---

struct CostInputs {
    std::uint64_t records = 0;
    std::uint64_t distinctPages = 0;
    std::uint64_t dptSize = 0;
    std::uint64_t tailRecords = 0;
    std::uint64_t tailDistinctPages = 0;
    std::uint64_t logPages = 0;
    std::uint64_t indexPages = 0;
};

// Predicted total page fetches for the method; nullopt for the prefetching
// methods, whose behavior has no simple model. distinctVariant counts
// distinct pages instead of log records (for workloads where records
// revisit pages).
std::optional<std::uint64_t> predictCost(Method m, const CostInputs& in, bool distinctVariant);

// Log pages overlapping the byte range [startOff, endOff).
std::uint64_t logPageSpan(std::uint64_t startOff, std::uint64_t endOff, std::uint32_t pageSize);

// Seed for the delta scan: the scan-start checkpoint's lsn when the range
// opens with one, advanced by any rssp marker found in range.
Lsn rsspSeedFor(const std::vector<LogRecord>& records, Lsn bCkptLsn);

// --- Recovery driver ---

struct RecoveryOptions {
    Method method = Method::Log0;
    DptMode dptMode = DptMode::Standard;
    std::uint32_t prefetchWindow = 64;
    bool runUndo = true;
    bool auditFilter = false;    // debug: fetch filter-skipped pages, assert pLsn
    bool dptRedoUpdate = false;  // drop entries as page pLsns become known
    std::uint64_t abortAfterRecords = 0; // test hook: crash mid-redo after N records
    bool auditTree = true;       // structural audit after recovery
};

// Thrown by the abortAfterRecords test hook.
class RecoveryAborted : public std::runtime_error {
public:
    RecoveryAborted() : std::runtime_error("recovery aborted by test hook") {}
};

// Runs the full pass sequence on one crashed store:
// DC SMO redo -> analysis -> index preload -> TC redo -> undo.
class Recovery {
public:
    Recovery(Wal& wal, PageFile& file, BufferPool& pool, BTree& tree, IoClock& clock)
        : m_wal(wal), m_file(file), m_pool(pool), m_tree(tree), m_clock(clock) {}

    RecoveryStats run(const RecoveryOptions& opts);

private:
    struct TxnInfo {
        bool committed = false;
        std::vector<std::size_t> updateIdx; // into the materialized records
    };

    void redoLogical(const std::vector<const LogRecord*>& updates, const Dpt* dpt,
                     Lsn lastDeltaTcLsn, const std::vector<Pid>& pfList,
                     const RecoveryOptions& opts, Dpt* mutableDpt, RecoveryStats& stats);
    void redoPhysiological(const std::vector<const LogRecord*>& updates, Dpt& dpt,
                           const RecoveryOptions& opts, RecoveryStats& stats);
    std::uint64_t undoLosers(const std::vector<LogRecord>& records, RecoveryStats& stats);
    void assertFilterSound(Pid pid, Lsn lsn);

    Wal& m_wal;
    PageFile& m_file;
    BufferPool& m_pool;
    BTree& m_tree;
    IoClock& m_clock;
};

} // namespace splitkv
