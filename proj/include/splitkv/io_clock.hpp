// Copyright (c) 2026 the splitkv authors. All rights reserved.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#pragma once

#include <algorithm>
#include <cstdint>
#include <unordered_set>
#include <vector>

#include "splitkv/types.hpp"

namespace splitkv {

// Simulated-IO cost parameters, in abstract time units.
struct CostParams {
    std::uint64_t syncReadCost = 100;  // one synchronous page read
    std::uint64_t seqPageCost = 10;    // each additional sequential page
    std::uint64_t blockBaseCost = 100; // base cost of a block (prefetch) IO
    std::uint64_t writePageCost = 10;  // one page write
    std::uint64_t applyCost = 2;       // processing one log record
};

// Deterministic simulated clock and IO counters. All reads go through a
// single serial disk channel: an issued block completes blockBaseCost +
// (runLength-1)*seqPageCost after the channel frees up.
class IoClock {
public:
    explicit IoClock(CostParams costs = {}) : m_costs(costs) {}

    std::uint64_t now() const { return m_now; }
    const CostParams& costs() const { return m_costs; }

    void advance(std::uint64_t t) { m_now += t; }
    void chargeApply() { m_now += m_costs.applyCost; }

    void chargeSyncRead(bool indexPage, Pid pid) {
        ++m_syncStalls;
        std::uint64_t start = std::max(m_now, m_diskFree);
        m_diskFree = start + m_costs.syncReadCost;
        m_now = m_diskFree;
        noteFetch(indexPage, pid);
    }

    // Returns the completion time of an asynchronous block read.
    std::uint64_t chargeBlockIssue(std::size_t runLength) {
        std::uint64_t start = std::max(m_now, m_diskFree);
        m_diskFree = start + m_costs.blockBaseCost +
                     (runLength - 1) * m_costs.seqPageCost;
        m_prefetchIssued += runLength;
        ++m_blockReads;
        return m_diskFree;
    }

    void notePrefetchedPage(bool indexPage, Pid pid) { noteFetch(indexPage, pid); }

    // Demand access to a page covered by an issued prefetch: the remaining
    // latency is charged but no synchronous stall is counted.
    void notePrefetchHit(std::uint64_t completion) {
        ++m_prefetchHits;
        if (completion > m_now) m_now = completion;
    }

    void chargeWrite(std::size_t pages = 1) { m_now += pages * m_costs.writePageCost; ++m_pagesFlushed; }

    void chargeLogPages(std::uint64_t pages) {
        m_logPagesRead += pages;
        m_now += pages * m_costs.seqPageCost;
    }

    std::uint64_t dataPagesFetched() const { return m_dataPagesFetched; }
    std::uint64_t indexPagesFetched() const { return m_indexPagesFetched; }
    std::uint64_t logPagesRead() const { return m_logPagesRead; }
    std::uint64_t syncStalls() const { return m_syncStalls; }
    std::uint64_t prefetchIssued() const { return m_prefetchIssued; }
    std::uint64_t prefetchHits() const { return m_prefetchHits; }
    std::uint64_t pagesFlushed() const { return m_pagesFlushed; }
    std::uint64_t blockReads() const { return m_blockReads; }

    // Set of distinct data (leaf) pages physically read, demand + prefetch.
    std::vector<Pid> dataFetchSet() const {
        std::vector<Pid> v(m_dataFetchSet.begin(), m_dataFetchSet.end());
        std::sort(v.begin(), v.end());
        return v;
    }

private:
    void noteFetch(bool indexPage, Pid pid) {
        if (indexPage) {
            ++m_indexPagesFetched;
        } else {
            ++m_dataPagesFetched;
            m_dataFetchSet.insert(pid);
        }
    }

    CostParams m_costs;
    std::uint64_t m_now = 0;
    std::uint64_t m_diskFree = 0;
    std::uint64_t m_dataPagesFetched = 0;
    std::uint64_t m_indexPagesFetched = 0;
    std::uint64_t m_logPagesRead = 0;
    std::uint64_t m_syncStalls = 0;
    std::uint64_t m_prefetchIssued = 0;
    std::uint64_t m_prefetchHits = 0;
    std::uint64_t m_pagesFlushed = 0;
    std::uint64_t m_blockReads = 0;
    std::unordered_set<Pid> m_dataFetchSet;
};

} // namespace splitkv
