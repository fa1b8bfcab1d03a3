// Copyright (c) 2026 the splitkv authors. All rights reserved.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#include "splitkv/engine.hpp"

#include <algorithm>
#include <cassert>

namespace splitkv {

Engine::Engine(const std::string& dir, EngineConfig cfg) : m_cfg(cfg), m_clock(cfg.costs) {
    PageGeometry geo{cfg.pageSize, cfg.payloadSize};
    m_file = std::make_unique<PageFile>(EngineConfig::dbFile(dir), geo, false);
    m_wal = std::make_unique<Wal>(EngineConfig::walFile(dir), m_file->geometry().pageSize, false);
    m_pool = std::make_unique<BufferPool>(*m_file, m_clock, cfg.poolPages, cfg.perfectDpt,
                                          cfg.deltaSizeThreshold);
    m_tree = std::make_unique<BTree>(*m_file, *m_pool);

    m_pool->onEosl(m_wal->stableLsn());
    m_pool->setWalForce([this](Lsn) { return m_wal->forceAll(); });
    m_tree->setSmoLog([this](const SmoRecord& rec) { return m_wal->append(rec); });
    m_nextFlusherTime = m_cfg.flusherCadence;
}

Engine::~Engine() = default;

BTree::LoadStats Engine::createStore(
    const std::string& dir, const EngineConfig& cfg, std::uint64_t rows,
    const std::function<void(Key, std::span<std::uint8_t>)>& fillPayload) {
    PageGeometry geo{cfg.pageSize, cfg.payloadSize};
    PageFile file(EngineConfig::dbFile(dir), geo, true);
    auto stats = BTree::bulkLoad(file, rows, fillPayload);

    Wal wal(EngineConfig::walFile(dir), cfg.pageSize, true);
    const Lsn b = wal.append(BeginCheckpointRecord{});
    wal.append(RsspRecord{b});
    wal.append(EndCheckpointRecord{b});
    wal.forceAll();
    return stats;
}

TxnId Engine::beginTxn() {
    TxnId id = m_nextTxn++;
    m_txns[id] = Txn{};
    return id;
}

Lsn Engine::executeUpdate(TxnId txn, Key key, std::span<const std::uint8_t> newValue) {
    if (m_crashed) throw ContractError("engine already crashed");
    auto& t = m_txns.at(txn);
    if (t.state != Txn::State::Active) throw ContractError("update on finished transaction");
    if (newValue.size() != m_file->geometry().payloadSize) {
        throw ContractError("value length does not match the fixed record size");
    }

    // DC locates the target (running any split first), the TC logs the
    // logical update with the pid annotation, then the DC applies it.
    const Pid pid = m_tree->prepareUpsert(key);

    UpdateRecord rec;
    rec.txnId = txn;
    rec.tableId = m_file->meta().tableId;
    rec.key = key;
    rec.newValue.assign(newValue.begin(), newValue.end());
    {
        auto ref = m_pool->getPage(pid);
        auto page = ref.page();
        if (auto slot = page.findKey(key)) {
            auto prev = page.leafPayloadAt(*slot);
            rec.prevValue.assign(prev.begin(), prev.end());
        }
    }
    rec.pid = pid;
    rec.prevLsnOfTxn = t.lastLsn;
    assert(m_tree->find(key) == pid);
    const Lsn lsn = m_wal->append(rec);

    m_tree->applyValue(pid, key, newValue, lsn);
    t.lastLsn = lsn;

    ++m_updates;
    ++m_sinceCkpt;
    ++m_sinceDelta;
    m_clock.chargeApply();
    return lsn;
}

void Engine::commitTxn(TxnId txn) {
    if (m_crashed) throw ContractError("engine already crashed");
    auto& t = m_txns.at(txn);
    if (t.state != Txn::State::Active) throw ContractError("double commit");
    m_wal->append(CommitRecord{txn, t.lastLsn});
    t.state = Txn::State::Committed;
    eosl();
    boundaryHousekeeping();
}

void Engine::abandonTxn(TxnId txn) {
    auto& t = m_txns.at(txn);
    if (t.state != Txn::State::Active) throw ContractError("abandon on finished transaction");
    t.state = Txn::State::Abandoned;
}

Lsn Engine::eosl() {
    const Lsn stable = m_wal->forceAll();
    m_pool->onEosl(stable);
    return stable;
}

void Engine::boundaryHousekeeping() {
    const auto monitorSize =
        m_pool->monitor().dirtySet.size() + m_pool->monitor().writtenSet.size();
    if (m_sinceDelta >= m_cfg.deltaEveryUpdates ||
        (monitorSize >= m_cfg.deltaSizeThreshold && m_sinceDelta > 0)) {
        emitDeltaPair();
    }

    const auto& c = m_cfg.crash;
    if (!m_crashPending && !c.immediate && m_ckptsCompleted >= c.afterCheckpoints &&
        m_sinceCkpt >= c.updatesSinceCkpt && m_sinceDelta >= c.updatesSinceDelta) {
        m_crashPending = true;
    }
    if (c.immediate) m_crashPending = true;
    if (m_crashPending) return; // the crash lands before the next checkpoint

    if (m_ckpt) {
        ckptStep();
    } else if (m_sinceCkpt >= m_cfg.ckptEveryUpdates) {
        ckptBegin();
        ckptStep();
    }

    if (m_cfg.flusherCadence > 0 && m_clock.now() >= m_nextFlusherTime) {
        flusherStep();
        m_nextFlusherTime = m_clock.now() + m_cfg.flusherCadence;
    }
}

void Engine::emitDeltaPair() {
    // Delta records are written exactly before their BW twin so both
    // analysis passes see the same emission points and flush sets.
    auto d = m_pool->emitDeltaRecord(true);
    if (!d) return;
    BwRecord bw{d->writtenSet, d->fwLsn};
    m_wal->append(*d);
    m_wal->append(bw);
    ++m_deltaWritten;
    m_sinceDelta = 0;
}

void Engine::ckptBegin() {
    const Lsn bCkptLsn = m_wal->append(BeginCheckpointRecord{});
    eosl();
    m_pool->flipCheckpointGen();
    m_ckpt = CkptProgress{bCkptLsn, m_pool->staleGenDirtyPids(), 0};
    m_sinceCkpt = 0;
}

void Engine::ckptStep() {
    auto& ck = *m_ckpt;
    std::uint32_t flushed = 0;
    // The sweep flushes only pages whose dirtying predates the generation
    // flip; anything re-dirtied after its flush stays dirty for the next one.
    while (ck.cursor < ck.sweep.size() && flushed < m_cfg.ckptSweepBatch) {
        if (ck.cursor == 0) eosl();
        if (m_pool->sweepFlush(ck.sweep[ck.cursor])) ++flushed;
        ++ck.cursor;
    }
    if (ck.cursor < ck.sweep.size()) return;

    eosl();
    emitDeltaPair();
    m_wal->append(RsspRecord{ck.bCkptLsn});
    m_wal->append(EndCheckpointRecord{ck.bCkptLsn});
    eosl();
    m_lastCompletedBCkpt = ck.bCkptLsn;
    ++m_ckptsCompleted;
    m_ckpt.reset();
}

void Engine::checkpointSync() {
    if (m_ckpt) throw ContractError("checkpoint already in progress");
    ckptBegin();
    while (m_ckpt) ckptStep();
}

void Engine::rssp(Lsn rsspLsn) {
    if (rsspLsn > m_wal->stableLsn()) throw ContractError("rssp target beyond stable end");
    std::vector<std::pair<Lsn, Pid>> toFlush;
    for (const auto& [pid, firstLsn] : m_pool->snapshot().dirtyFirstLsn) {
        if (firstLsn <= rsspLsn) toFlush.emplace_back(firstLsn, pid);
    }
    std::sort(toFlush.begin(), toFlush.end());
    if (!toFlush.empty()) eosl();
    for (const auto& [lsn, pid] : toFlush) m_pool->flushPage(pid);
    eosl();
    emitDeltaPair();
    m_wal->append(RsspRecord{rsspLsn});
    eosl();
}

void Engine::flusherStep() {
    std::vector<std::pair<Lsn, Pid>> dirty;
    for (const auto& [pid, firstLsn] : m_pool->snapshot().dirtyFirstLsn) {
        dirty.emplace_back(firstLsn, pid);
    }
    std::sort(dirty.begin(), dirty.end());
    if (dirty.empty()) return;
    eosl();
    for (std::uint32_t i = 0; i < m_cfg.flusherBatch && i < dirty.size(); ++i) {
        m_pool->flushPage(dirty[i].second);
    }
}

CrashSnapshot Engine::crash() {
    CrashSnapshot snap;
    snap.truth = m_pool->snapshot();
    snap.stableLsn = m_wal->stableLsn();
    snap.lastCompletedBCkpt = m_lastCompletedBCkpt;
    snap.updatesExecuted = m_updates;
    snap.checkpointsCompleted = m_ckptsCompleted;
    m_wal->dropVolatile();
    m_crashed = true;
    return snap;
}

} // namespace splitkv
