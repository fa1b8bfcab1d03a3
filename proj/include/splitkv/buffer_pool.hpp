// Copyright (c) 2026 the splitkv authors. All rights reserved.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "splitkv/io_clock.hpp"
#include "splitkv/log_record.hpp"
#include "splitkv/page.hpp"
#include "splitkv/pagefile.hpp"
#include "splitkv/types.hpp"

namespace splitkv {

class BufferPool;

enum class GetMode { Demand, Probe };

// RAII pin on a cached page.
class PageRef {
public:
    PageRef() = default;
    ~PageRef();
    PageRef(PageRef&& o) noexcept : m_pool(o.m_pool), m_frame(o.m_frame) { o.m_pool = nullptr; }
    PageRef& operator=(PageRef&& o) noexcept;
    PageRef(const PageRef&) = delete;
    PageRef& operator=(const PageRef&) = delete;

    explicit operator bool() const { return m_pool != nullptr; }
    Page page() const;
    Pid pid() const;

private:
    friend class BufferPool;
    PageRef(BufferPool* pool, std::uint32_t frame);
    BufferPool* m_pool = nullptr;
    std::uint32_t m_frame = 0;
};

// Dirty/flush monitor driving delta and BW record emission. Append-only
// within an interval; reset atomically when a record pair is emitted.
struct FlushMonitor {
    std::vector<Pid> dirtySet; // duplicates allowed
    std::vector<Pid> writtenSet;
    Lsn fwLsn = kNullLsn;
    std::optional<std::uint32_t> firstDirty;
    std::optional<std::vector<Lsn>> dirtyLsns;

    void reset(bool keepDirtyLsns) {
        dirtySet.clear();
        writtenSet.clear();
        fwLsn = kNullLsn;
        firstDirty.reset();
        if (keepDirtyLsns) dirtyLsns.emplace();
        else dirtyLsns.reset();
    }
};

// Fixed-capacity page cache with clock/second-chance eviction, dirty
// tracking, WAL gating, and block prefetch. Single-threaded; determinism
// under a fixed schedule is part of the contract.
class BufferPool {
public:
    // Callback forcing the shared log so that every record with Lsn <= the
    // argument is stable; returns the new stable end.
    using WalForceFn = std::function<Lsn(Lsn)>;

    BufferPool(PageFile& file, IoClock& clock, std::uint32_t capacity,
               bool perfectDpt = false, std::uint32_t deltaThreshold = 100);

    // Demand mode charges a synchronous read on a miss unless an issued
    // prefetch covers the page. Probe mode never does IO; it returns an empty
    // ref on a miss.
    PageRef getPage(Pid pid, GetMode mode = GetMode::Demand);

    // Marks the frame dirty, records the dirtying in the monitor, and stamps
    // the page with lsn.
    void markDirty(Pid pid, Lsn lsn);

    // Flushes a dirty page, appending it to the written set. Clean pages are
    // a no-op. A WAL violation (pLsn > eLSN) asks the force callback for
    // help, or throws when none is installed.
    void flushPage(Pid pid);

    // Deduplicates against the cache and in-flight set, groups contiguous
    // runs into blocks of at most kBlockPages pages, and issues them
    // asynchronously in simulated time. Unknown pids are dropped.
    void prefetch(const std::vector<Pid>& pids);
    static constexpr std::uint32_t kBlockPages = 8;

    // Snapshots and resets the monitor when forced or when the monitor holds
    // at least the configured number of entries. tcLsn is the eLSN of the
    // most recent EOSL.
    std::optional<DeltaRecord> emitDeltaRecord(bool force);

    void onEosl(Lsn eLsn) { m_eLsn = eLsn; }
    Lsn eLsn() const { return m_eLsn; }
    void setWalForce(WalForceFn fn) { m_walForce = std::move(fn); }

    // Checkpoint support: flip the generation bit at bCkpt, then sweep-flush
    // pages whose dirtying predates the flip.
    void flipCheckpointGen() { m_currentGen = !m_currentGen; }
    std::vector<Pid> staleGenDirtyPids() const;
    bool sweepFlush(Pid pid); // flush iff cached, dirty, and stale-gen

    bool isCached(Pid pid) const { return m_frameOf.count(pid) != 0; }
    // Uncounted view of a cached frame's bytes; nullptr when absent.
    // Audit/digest use only.
    const std::uint8_t* peek(Pid pid) const {
        auto it = m_frameOf.find(pid);
        return it == m_frameOf.end() ? nullptr : m_frames[it->second].data.data();
    }
    bool isDirty(Pid pid) const;
    std::uint32_t capacity() const { return m_capacity; }
    std::uint32_t dirtyCount() const;
    const FlushMonitor& monitor() const { return m_monitor; }

    void flushAllDirty();

    // Ground truth for crash audits: pid -> Lsn that first dirtied the frame
    // since its last flush, plus the full cached set.
    struct TruthSnapshot {
        std::map<Pid, Lsn> dirtyFirstLsn;
        std::vector<Pid> cachedPids;
    };
    TruthSnapshot snapshot() const;

private:
    friend class PageRef;

    struct Frame {
        Pid pid = kNullPid;
        bool used = false;
        bool dirty = false;
        bool refBit = false;
        bool gen = false;
        std::uint32_t pins = 0;
        Lsn firstDirtyLsn = kNullLsn;
        std::vector<std::uint8_t> data;
    };

    struct InFlight {
        std::vector<std::uint8_t> data;
        std::uint64_t completion = 0;
    };

    std::uint32_t installFrame(Pid pid, std::vector<std::uint8_t>&& data);
    std::uint32_t findVictim();
    void flushFrame(Frame& f);
    std::vector<std::uint8_t> readPageBytes(Pid pid) const;
    Page pageView(Frame& f) { return Page(f.data.data(), m_file.geometry()); }

    PageFile& m_file;
    IoClock& m_clock;
    std::uint32_t m_capacity;
    std::uint32_t m_deltaThreshold;
    std::vector<Frame> m_frames;
    std::unordered_map<Pid, std::uint32_t> m_frameOf;
    std::unordered_map<Pid, InFlight> m_inFlight;
    std::uint32_t m_hand = 0;
    bool m_currentGen = false;
    Lsn m_eLsn = kNullLsn;
    WalForceFn m_walForce;
    FlushMonitor m_monitor;
    bool m_perfectDpt;
};

} // namespace splitkv
