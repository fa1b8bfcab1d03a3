// Copyright (c) 2026 the splitkv authors. All rights reserved.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "splitkv/btree.hpp"
#include "splitkv/buffer_pool.hpp"
#include "splitkv/io_clock.hpp"
#include "splitkv/wal.hpp"

namespace splitkv {

// Crash condition, expressed over execution counters so the trigger point is
// reproducible at any scale. Checked at transaction boundaries; all parts
// must hold.
struct CrashPredicate {
    bool immediate = false;
    std::uint64_t afterCheckpoints = 10;
    std::uint64_t updatesSinceCkpt = 7490;
    std::uint64_t updatesSinceDelta = 40;
};

struct EngineConfig {
    std::uint32_t pageSize = kDefaultPageSize;
    std::uint32_t payloadSize = 92;
    std::uint32_t poolPages = 1000;
    std::uint32_t updatesPerTxn = 10;
    std::uint64_t deltaEveryUpdates = 50;  // paired delta/BW emission cadence
    std::uint32_t deltaSizeThreshold = 500; // emission backstop on monitor size
    std::uint64_t ckptEveryUpdates = 7500;
    std::uint32_t ckptSweepBatch = 64; // sweep pages flushed per boundary
    std::uint64_t flusherCadence = 200'000; // sim-time units between wakeups, 0 = off
    std::uint32_t flusherBatch = 8;
    CostParams costs;
    bool perfectDpt = false;
    CrashPredicate crash;

    static std::string dbFile(const std::string& dir) { return dir + "/data.db"; }
    static std::string walFile(const std::string& dir) { return dir + "/wal.log"; }
};

// Ground truth captured at crash time, for test audits only. Recovery never
// reads it.
struct CrashSnapshot {
    BufferPool::TruthSnapshot truth;
    Lsn stableLsn = kNullLsn;
    Lsn lastCompletedBCkpt = kNullLsn;
    std::uint64_t updatesExecuted = 0;
    std::uint64_t checkpointsCompleted = 0;
};

// Normal-execution orchestration. The TC side owns transactions, logical
// logging, and checkpoint control; the DC side owns the tree, the pool, and
// the monitors. The TC never reads PIDs from the DC except through the
// annotation channel on update records.
class Engine {
public:
    Engine(const std::string& dir, EngineConfig cfg);
    ~Engine();

    // Creates a fresh store: bulk-loads the table in key order and writes an
    // initial completed checkpoint so recovery never scans the load.
    static BTree::LoadStats createStore(
        const std::string& dir, const EngineConfig& cfg, std::uint64_t rows,
        const std::function<void(Key, std::span<std::uint8_t>)>& fillPayload);

    TxnId beginTxn();
    Lsn executeUpdate(TxnId txn, Key key, std::span<const std::uint8_t> newValue);
    // Appends the commit record, forces the log, and runs boundary
    // housekeeping (delta cadence, checkpoint steps, flusher, crash check).
    void commitTxn(TxnId txn);
    // Loser mode: drop the transaction without a commit record.
    void abandonTxn(TxnId txn);

    // Forces the TC log buffer and delivers the stable end to the DC.
    Lsn eosl();

    // Full synchronous checkpoint (begin + sweep to completion).
    void checkpointSync();
    // Redo-scan-start-point flush: after this returns, every page dirtied
    // only by operations with Lsn <= rsspLsn is durable, and the marker is
    // on the log.
    void rssp(Lsn rsspLsn);

    bool checkpointInProgress() const { return m_ckpt.has_value(); }
    bool crashPending() const { return m_crashPending; }

    // Discards all volatile state; stable files remain on disk for recovery.
    CrashSnapshot crash();

    std::uint64_t updatesExecuted() const { return m_updates; }
    std::uint64_t checkpointsCompleted() const { return m_ckptsCompleted; }
    std::uint64_t updatesSinceCkpt() const { return m_sinceCkpt; }
    std::uint64_t updatesSinceDelta() const { return m_sinceDelta; }
    std::uint64_t deltaRecordsWritten() const { return m_deltaWritten; }

    Wal& wal() { return *m_wal; }
    BufferPool& pool() { return *m_pool; }
    BTree& tree() { return *m_tree; }
    IoClock& clock() { return m_clock; }
    PageFile& file() { return *m_file; }
    const EngineConfig& config() const { return m_cfg; }

private:
    struct Txn {
        enum class State { Active, Committed, Abandoned } state = State::Active;
        Lsn lastLsn = kNullLsn;
    };

    struct CkptProgress {
        Lsn bCkptLsn = kNullLsn;
        std::vector<Pid> sweep;
        std::size_t cursor = 0;
    };

    void boundaryHousekeeping();
    void emitDeltaPair();
    void ckptBegin();
    void ckptStep();
    void flusherStep();

    EngineConfig m_cfg;
    IoClock m_clock;
    std::unique_ptr<PageFile> m_file;
    std::unique_ptr<Wal> m_wal;
    std::unique_ptr<BufferPool> m_pool;
    std::unique_ptr<BTree> m_tree;

    std::map<TxnId, Txn> m_txns;
    TxnId m_nextTxn = 1;
    std::uint64_t m_updates = 0;
    std::uint64_t m_sinceCkpt = 0;
    std::uint64_t m_sinceDelta = 0;
    std::uint64_t m_ckptsCompleted = 0;
    std::uint64_t m_deltaWritten = 0;
    std::uint64_t m_nextFlusherTime = 0;
    Lsn m_lastCompletedBCkpt = kNullLsn;
    std::optional<CkptProgress> m_ckpt;
    bool m_crashPending = false;
    bool m_crashed = false;
};

} // namespace splitkv
