// Copyright (c) 2026 the splitkv authors. All rights reserved.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#include "splitkv/buffer_pool.hpp"

#include <algorithm>

namespace splitkv {

PageRef::PageRef(BufferPool* pool, std::uint32_t frame) : m_pool(pool), m_frame(frame) {
    ++m_pool->m_frames[m_frame].pins;
}

PageRef::~PageRef() {
    if (m_pool) --m_pool->m_frames[m_frame].pins;
}

PageRef& PageRef::operator=(PageRef&& o) noexcept {
    if (this != &o) {
        if (m_pool) --m_pool->m_frames[m_frame].pins;
        m_pool = o.m_pool;
        m_frame = o.m_frame;
        o.m_pool = nullptr;
    }
    return *this;
}

Page PageRef::page() const {
    return Page(m_pool->m_frames[m_frame].data.data(), m_pool->m_file.geometry());
}

Pid PageRef::pid() const { return m_pool->m_frames[m_frame].pid; }

BufferPool::BufferPool(PageFile& file, IoClock& clock, std::uint32_t capacity,
                       bool perfectDpt, std::uint32_t deltaThreshold)
    : m_file(file), m_clock(clock), m_capacity(std::max(capacity, 4u)),
      m_deltaThreshold(deltaThreshold), m_perfectDpt(perfectDpt) {
    m_frames.resize(m_capacity);
    if (m_perfectDpt) m_monitor.dirtyLsns.emplace();
}

std::vector<std::uint8_t> BufferPool::readPageBytes(Pid pid) const {
    std::vector<std::uint8_t> buf(m_file.geometry().pageSize);
    m_file.readPage(pid, buf.data());
    return buf;
}

PageRef BufferPool::getPage(Pid pid, GetMode mode) {
    if (auto it = m_frameOf.find(pid); it != m_frameOf.end()) {
        m_frames[it->second].refBit = true;
        return PageRef(this, it->second);
    }
    if (mode == GetMode::Probe) return PageRef();
    if (pid >= m_file.pageCount()) throw PageFaultError("getPage: pid out of range");

    if (auto it = m_inFlight.find(pid); it != m_inFlight.end()) {
        m_clock.notePrefetchHit(it->second.completion);
        auto frame = installFrame(pid, std::move(it->second.data));
        m_inFlight.erase(it);
        return PageRef(this, frame);
    }

    auto bytes = readPageBytes(pid);
    const bool indexPage = Page(bytes.data(), m_file.geometry()).kind() != PageKind::Leaf;
    m_clock.chargeSyncRead(indexPage, pid);
    return PageRef(this, installFrame(pid, std::move(bytes)));
}

std::uint32_t BufferPool::installFrame(Pid pid, std::vector<std::uint8_t>&& data) {
    std::uint32_t idx = findVictim();
    Frame& f = m_frames[idx];
    if (f.used) m_frameOf.erase(f.pid);
    f.pid = pid;
    f.used = true;
    f.dirty = false;
    f.refBit = true;
    f.gen = m_currentGen;
    f.firstDirtyLsn = kNullLsn;
    f.data = std::move(data);
    m_frameOf[pid] = idx;
    return idx;
}

std::uint32_t BufferPool::findVictim() {
    // First fill unused frames in slot order, then clock/second-chance.
    for (std::uint32_t i = 0; i < m_capacity; ++i) {
        if (!m_frames[i].used) return i;
    }
    for (std::uint32_t lap = 0; lap < 3 * m_capacity; ++lap) {
        Frame& f = m_frames[m_hand];
        std::uint32_t idx = m_hand;
        m_hand = (m_hand + 1) % m_capacity;
        if (f.pins > 0) continue;
        if (f.refBit) {
            f.refBit = false;
            continue;
        }
        if (f.dirty) flushFrame(f);
        return idx;
    }
    throw ContractError("buffer pool exhausted: all frames pinned");
}

void BufferPool::markDirty(Pid pid, Lsn lsn) {
    auto it = m_frameOf.find(pid);
    if (it == m_frameOf.end()) throw ContractError("markDirty on uncached page");
    Frame& f = m_frames[it->second];
    if (!f.dirty) {
        f.dirty = true;
        f.gen = m_currentGen;
        f.firstDirtyLsn = lsn;
    }
    if (m_monitor.fwLsn != kNullLsn && !m_monitor.firstDirty) {
        m_monitor.firstDirty = static_cast<std::uint32_t>(m_monitor.dirtySet.size());
    }
    m_monitor.dirtySet.push_back(pid);
    if (m_monitor.dirtyLsns) m_monitor.dirtyLsns->push_back(lsn);
    pageView(f).setPLsn(lsn);
}

void BufferPool::flushFrame(Frame& f) {
    const Lsn pLsn = pageView(f).pLsn();
    if (pLsn > m_eLsn) {
        if (!m_walForce) {
            throw ContractError("WAL violation: flushing page with pLsn beyond stable log");
        }
        m_eLsn = m_walForce(pLsn);
        if (pLsn > m_eLsn) throw ContractError("WAL force did not cover the page lsn");
    }
    m_file.writePage(f.pid, f.data.data());
    m_clock.chargeWrite();
    f.dirty = false;
    f.firstDirtyLsn = kNullLsn;
    if (m_monitor.writtenSet.empty()) m_monitor.fwLsn = m_eLsn;
    m_monitor.writtenSet.push_back(f.pid);
}

void BufferPool::flushPage(Pid pid) {
    auto it = m_frameOf.find(pid);
    if (it == m_frameOf.end()) return;
    Frame& f = m_frames[it->second];
    if (!f.dirty) return;
    flushFrame(f);
}

bool BufferPool::isDirty(Pid pid) const {
    auto it = m_frameOf.find(pid);
    return it != m_frameOf.end() && m_frames[it->second].dirty;
}

std::uint32_t BufferPool::dirtyCount() const {
    std::uint32_t n = 0;
    for (const auto& f : m_frames) n += f.used && f.dirty;
    return n;
}

void BufferPool::prefetch(const std::vector<Pid>& pids) {
    std::vector<Pid> wanted;
    for (Pid pid : pids) {
        if (pid >= m_file.pageCount()) continue; // unknown pids silently dropped
        if (m_frameOf.count(pid) || m_inFlight.count(pid)) continue;
        if (std::find(wanted.begin(), wanted.end(), pid) != wanted.end()) continue;
        wanted.push_back(pid);
    }
    std::size_t i = 0;
    while (i < wanted.size()) {
        std::size_t runLen = 1;
        while (i + runLen < wanted.size() && runLen < kBlockPages &&
               wanted[i + runLen] == wanted[i + runLen - 1] + 1) {
            ++runLen;
        }
        const auto completion = m_clock.chargeBlockIssue(runLen);
        for (std::size_t k = 0; k < runLen; ++k) {
            Pid pid = wanted[i + k];
            auto bytes = readPageBytes(pid);
            const bool indexPage = Page(bytes.data(), m_file.geometry()).kind() != PageKind::Leaf;
            m_clock.notePrefetchedPage(indexPage, pid);
            m_inFlight[pid] = InFlight{std::move(bytes), completion};
        }
        i += runLen;
    }
}

std::optional<DeltaRecord> BufferPool::emitDeltaRecord(bool force) {
    const auto entries = m_monitor.dirtySet.size() + m_monitor.writtenSet.size();
    if (!force && entries < m_deltaThreshold) return std::nullopt;
    DeltaRecord d;
    d.dirtySet = m_monitor.dirtySet;
    d.writtenSet = m_monitor.writtenSet;
    d.fwLsn = m_monitor.fwLsn;
    d.firstDirty = m_monitor.firstDirty
                       ? *m_monitor.firstDirty
                       : static_cast<std::uint32_t>(m_monitor.dirtySet.size());
    d.tcLsn = m_eLsn;
    if (m_monitor.dirtyLsns) d.dirtyLsns = *m_monitor.dirtyLsns;
    m_monitor.reset(m_perfectDpt);
    return d;
}

std::vector<Pid> BufferPool::staleGenDirtyPids() const {
    std::vector<Pid> pids;
    for (const auto& f : m_frames) {
        if (f.used && f.dirty && f.gen != m_currentGen) pids.push_back(f.pid);
    }
    std::sort(pids.begin(), pids.end());
    return pids;
}

bool BufferPool::sweepFlush(Pid pid) {
    auto it = m_frameOf.find(pid);
    if (it == m_frameOf.end()) return false;
    Frame& f = m_frames[it->second];
    if (!f.dirty || f.gen == m_currentGen) return false;
    flushFrame(f);
    return true;
}

void BufferPool::flushAllDirty() {
    std::vector<Pid> pids;
    for (const auto& f : m_frames) {
        if (f.used && f.dirty) pids.push_back(f.pid);
    }
    std::sort(pids.begin(), pids.end());
    for (Pid pid : pids) flushPage(pid);
}

BufferPool::TruthSnapshot BufferPool::snapshot() const {
    TruthSnapshot s;
    for (const auto& f : m_frames) {
        if (!f.used) continue;
        s.cachedPids.push_back(f.pid);
        if (f.dirty) s.dirtyFirstLsn[f.pid] = f.firstDirtyLsn;
    }
    std::sort(s.cachedPids.begin(), s.cachedPids.end());
    return s;
}

} // namespace splitkv
