// Copyright (c) 2026 the splitkv authors. All rights reserved.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#include "splitkv/recovery.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <unordered_set>

namespace splitkv {

const char* methodName(Method m) {
    switch (m) {
    case Method::Log0: return "Log0";
    case Method::Log1: return "Log1";
    case Method::Log2: return "Log2";
    case Method::Sql1: return "SQL1";
    case Method::Sql2: return "SQL2";
    }
    return "?";
}

std::optional<Method> methodFromName(const std::string& name) {
    std::string n;
    for (char c : name) n += static_cast<char>(std::tolower(c));
    if (n == "log0") return Method::Log0;
    if (n == "log1") return Method::Log1;
    if (n == "log2") return Method::Log2;
    if (n == "sql1") return Method::Sql1;
    if (n == "sql2") return Method::Sql2;
    return std::nullopt;
}

bool methodUsesPrefetch(Method m) { return m == Method::Log2 || m == Method::Sql2; }
bool methodIsLogical(Method m) {
    return m == Method::Log0 || m == Method::Log1 || m == Method::Log2;
}

SqlAnalysisResult sqlAnalysis(const std::vector<LogRecord>& records, Lsn bCkptLsn) {
    SqlAnalysisResult out;
    for (const auto& rec : records) {
        if (rec.lsn <= bCkptLsn) continue;
        if (rec.is<UpdateRecord>()) {
            out.dpt.addEntry(rec.as<UpdateRecord>().pid, rec.lsn);
        } else if (rec.is<BwRecord>()) {
            const auto& b = rec.as<BwRecord>();
            ++out.bwRecords;
            if (b.fwLsn == kNullLsn) continue;
            for (Pid pid : b.writtenSet) {
                auto* e = out.dpt.findEntry(pid);
                if (!e) continue;
                if (e->lastLsn <= b.fwLsn) out.dpt.removeEntry(pid);
                else if (e->rLsn < b.fwLsn) e->rLsn = b.fwLsn;
            }
        }
    }
    return out;
}

DcAnalysisResult dcAnalysis(const std::vector<LogRecord>& records, Lsn rsspSeed, DptMode mode) {
    DcAnalysisResult out;
    out.lastDeltaTcLsn = rsspSeed;
    Lsn prevDelta = rsspSeed;
    std::unordered_set<Pid> pfSeen;

    auto add = [&](Pid pid, Lsn rLsn) {
        if (!out.dpt.contains(pid) && pfSeen.insert(pid).second) out.pfList.push_back(pid);
        out.dpt.addEntry(pid, rLsn);
    };

    for (const auto& rec : records) {
        if (!rec.is<DeltaRecord>()) continue;
        const auto& d = rec.as<DeltaRecord>();
        if (d.tcLsn <= rsspSeed) continue;
        ++out.deltaRecords;

        const bool perfect = mode == DptMode::Perfect && d.dirtyLsns &&
                             d.dirtyLsns->size() == d.dirtySet.size();
        if (perfect) {
            for (std::size_t i = 0; i < d.dirtySet.size(); ++i) {
                add(d.dirtySet[i], (*d.dirtyLsns)[i]);
            }
        } else if (mode == DptMode::Reduced) {
            for (Pid pid : d.dirtySet) add(pid, prevDelta);
        } else {
            std::uint32_t i = 0;
            for (Pid pid : d.dirtySet) {
                const bool beforeFirstWrite = d.fwLsn == kNullLsn || i < d.firstDirty;
                add(pid, beforeFirstWrite ? prevDelta : d.fwLsn);
                ++i;
            }
        }

        if (perfect) {
            // With exact lsns, the pruning rule of the physiological pass
            // applies verbatim.
            if (d.fwLsn != kNullLsn) {
                for (Pid pid : d.writtenSet) {
                    auto* e = out.dpt.findEntry(pid);
                    if (!e) continue;
                    if (e->lastLsn <= d.fwLsn) out.dpt.removeEntry(pid);
                    else if (e->rLsn < d.fwLsn) e->rLsn = d.fwLsn;
                }
            }
        } else if (mode == DptMode::Reduced) {
            for (Pid pid : d.writtenSet) {
                auto* e = out.dpt.findEntry(pid);
                if (e && e->lastLsn < prevDelta) out.dpt.removeEntry(pid);
            }
        } else if (d.fwLsn != kNullLsn) {
            for (Pid pid : d.writtenSet) {
                auto* e = out.dpt.findEntry(pid);
                if (!e) continue;
                if (e->lastLsn < d.fwLsn) out.dpt.removeEntry(pid);
                else if (e->rLsn < d.fwLsn) e->rLsn = d.fwLsn;
            }
        }

        prevDelta = d.tcLsn;
        out.lastDeltaTcLsn = d.tcLsn;
    }
    return out;
}

std::optional<std::uint64_t> predictCost(Method m, const CostInputs& in, bool distinctVariant) {
    switch (m) {
    case Method::Log0:
        return (distinctVariant ? in.distinctPages : in.records) + in.logPages + in.indexPages;
    case Method::Sql1:
        return in.dptSize + in.logPages;
    case Method::Log1:
        return in.dptSize + (distinctVariant ? in.tailDistinctPages : in.tailRecords) +
               in.logPages + in.indexPages;
    case Method::Log2:
    case Method::Sql2:
        return std::nullopt;
    }
    return std::nullopt;
}

std::uint64_t logPageSpan(std::uint64_t startOff, std::uint64_t endOff, std::uint32_t pageSize) {
    if (endOff <= startOff) return 0;
    return (endOff - 1) / pageSize - startOff / pageSize + 1;
}

Lsn rsspSeedFor(const std::vector<LogRecord>& records, Lsn bCkptLsn) {
    Lsn seed = kNullLsn;
    if (!records.empty() && records.front().lsn == bCkptLsn &&
        records.front().is<BeginCheckpointRecord>()) {
        seed = bCkptLsn;
    }
    for (const auto& rec : records) {
        if (rec.is<RsspRecord>()) seed = std::max(seed, rec.as<RsspRecord>().rsspLsn);
    }
    return seed;
}

void Recovery::assertFilterSound(Pid pid, Lsn lsn) {
    auto ref = m_pool.getPage(pid);
    if (ref.page().pLsn() < lsn) {
        throw IntegrityError("filter skipped a record the pLSN test would redo: pid " +
                             std::to_string(pid) + " lsn " + std::to_string(lsn));
    }
}

void Recovery::redoLogical(const std::vector<const LogRecord*>& updates, const Dpt* dpt,
                           Lsn lastDeltaTcLsn, const std::vector<Pid>& pfList,
                           const RecoveryOptions& opts, Dpt* mutableDpt, RecoveryStats& stats) {
    std::size_t pfCursor = 0;
    std::uint64_t processed = 0;
    for (const auto* rec : updates) {
        if (opts.abortAfterRecords && processed >= opts.abortAfterRecords) {
            throw RecoveryAborted();
        }
        ++processed;
        m_clock.chargeApply();

        if (pfCursor < pfList.size()) {
            const auto target =
                std::min<std::size_t>(pfList.size(), processed + opts.prefetchWindow);
            if (pfCursor < target) {
                m_pool.prefetch({pfList.begin() + pfCursor, pfList.begin() + target});
                pfCursor = target;
            }
        }

        const auto& u = rec->as<UpdateRecord>();
        const Pid pid = m_tree.find(u.key); // the pid annotation is ignored
        if (dpt && rec->lsn < lastDeltaTcLsn) {
            const auto* e = dpt->findEntry(pid);
            if (!e || rec->lsn < e->rLsn) {
                ++stats.redoSkippedFilter;
                if (opts.auditFilter) assertFilterSound(pid, rec->lsn);
                continue;
            }
        } else if (dpt) {
            ++stats.tailRecords; // tail of the log: basic logical redo
        }

        auto ref = m_pool.getPage(pid);
        if (rec->lsn <= ref.page().pLsn()) {
            ++stats.redoSkippedPlsn;
        } else {
            m_tree.applyValue(pid, u.key, u.newValue, rec->lsn);
            ++stats.redoApplied;
        }
        if (opts.dptRedoUpdate && mutableDpt && ref.page().pLsn() >= lastDeltaTcLsn) {
            mutableDpt->removeEntry(pid);
        }
    }
}

void Recovery::redoPhysiological(const std::vector<const LogRecord*>& updates, Dpt& dpt,
                                 const RecoveryOptions& opts, RecoveryStats& stats) {
    const bool prefetchOn = methodUsesPrefetch(opts.method);
    std::size_t lookahead = 0;
    std::uint64_t processed = 0;
    std::vector<Pid> batch;
    for (std::size_t i = 0; i < updates.size(); ++i) {
        if (opts.abortAfterRecords && processed >= opts.abortAfterRecords) {
            throw RecoveryAborted();
        }
        ++processed;
        m_clock.chargeApply();

        if (prefetchOn) {
            // Log-driven read-ahead: examine the upcoming window and issue
            // prefetches for pids passing the dpt/rLsn filter.
            const auto target = std::min(updates.size(), i + 1 + opts.prefetchWindow);
            if (lookahead < target) {
                batch.clear();
                for (std::size_t j = std::max(lookahead, i + 1); j < target; ++j) {
                    const auto& w = updates[j]->as<UpdateRecord>();
                    const auto* e = dpt.findEntry(w.pid);
                    if (e && updates[j]->lsn >= e->rLsn) batch.push_back(w.pid);
                }
                lookahead = target;
                if (!batch.empty()) m_pool.prefetch(batch);
            }
        }

        const auto& u = updates[i]->as<UpdateRecord>();
        const auto* e = dpt.findEntry(u.pid);
        if (!e || updates[i]->lsn < e->rLsn) {
            ++stats.redoSkippedFilter;
            if (opts.auditFilter) assertFilterSound(u.pid, updates[i]->lsn);
            continue;
        }
        const Lsn entryLastLsn = e->lastLsn;

        auto ref = m_pool.getPage(u.pid);
        if (updates[i]->lsn <= ref.page().pLsn()) {
            ++stats.redoSkippedPlsn;
        } else {
            m_tree.applyValue(u.pid, u.key, u.newValue, updates[i]->lsn);
            ++stats.redoApplied;
        }
        if (opts.dptRedoUpdate && ref.page().pLsn() >= entryLastLsn) {
            dpt.removeEntry(u.pid);
        }
    }
}

std::uint64_t Recovery::undoLosers(const std::vector<LogRecord>& records, RecoveryStats& stats) {
    (void)stats;
    std::map<TxnId, TxnInfo> txns;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].is<UpdateRecord>()) {
            txns[records[i].as<UpdateRecord>().txnId].updateIdx.push_back(i);
        } else if (records[i].is<CommitRecord>()) {
            txns[records[i].as<CommitRecord>().txnId].committed = true;
        }
    }
    std::vector<std::size_t> loserUpdates;
    for (const auto& [txnId, info] : txns) {
        if (!info.committed) {
            loserUpdates.insert(loserUpdates.end(), info.updateIdx.begin(), info.updateIdx.end());
        }
    }
    std::sort(loserUpdates.begin(), loserUpdates.end(),
              [&](std::size_t a, std::size_t b) { return records[a].lsn > records[b].lsn; });

    std::uint64_t undone = 0;
    for (std::size_t idx : loserUpdates) {
        const auto& u = records[idx].as<UpdateRecord>();
        m_clock.chargeApply();
        const Pid pid = m_tree.find(u.key);
        {
            auto ref = m_pool.getPage(pid);
            if (!ref.page().findKey(u.key)) {
                throw IntegrityError("undo: key " + std::to_string(u.key) + " missing");
            }
        }
        UpdateRecord comp;
        comp.txnId = u.txnId;
        comp.tableId = u.tableId;
        comp.key = u.key;
        comp.newValue = u.prevValue;
        comp.prevValue = u.newValue;
        comp.pid = pid;
        comp.compensation = true;
        const Lsn lsn = m_wal.append(comp);
        m_tree.applyValue(pid, u.key, comp.newValue, lsn);
        ++undone;
    }
    if (undone > 0) m_wal.forceAll();
    return undone;
}

RecoveryStats Recovery::run(const RecoveryOptions& opts) {
    RecoveryStats stats;
    stats.method = opts.method;
    stats.dptMode = opts.dptMode;
    const auto t0 = m_clock.now();

    const Lsn bCkptLsn = m_wal.findRedoScanStart();
    m_clock.chargeLogPages(
        logPageSpan(bCkptLsn, m_wal.stableEndOffset(), m_wal.pageSize()));

    const auto records = m_wal.scanAll(bCkptLsn);
    const Lsn rsspSeed = rsspSeedFor(records, bCkptLsn);

    // DC redo pass: make the tree well-formed before any logical redo.
    for (const auto& rec : records) {
        if (rec.is<SmoRecord>()) m_tree.redoSmo(rec.as<SmoRecord>(), rec.lsn);
    }

    std::vector<const LogRecord*> updates;
    for (const auto& rec : records) {
        if (rec.is<UpdateRecord>()) updates.push_back(&rec);
    }
    stats.recordsScanned = updates.size();

    switch (opts.method) {
    case Method::Log0: {
        stats.indexPagesPreloaded = m_tree.preloadIndex();
        redoLogical(updates, nullptr, kNullLsn, {}, opts, nullptr, stats);
        break;
    }
    case Method::Log1:
    case Method::Log2: {
        auto dc = dcAnalysis(records, rsspSeed, opts.dptMode);
        stats.dptSize = dc.dpt.size();
        stats.pfListSize = dc.pfList.size();
        stats.deltaRecords = dc.deltaRecords;
        stats.indexPagesPreloaded = m_tree.preloadIndex();
        redoLogical(updates, &dc.dpt, dc.lastDeltaTcLsn,
                    opts.method == Method::Log2 ? dc.pfList : std::vector<Pid>{}, opts,
                    &dc.dpt, stats);
        break;
    }
    case Method::Sql1:
    case Method::Sql2: {
        auto sq = sqlAnalysis(records, bCkptLsn);
        stats.dptSize = sq.dpt.size();
        stats.bwRecords = sq.bwRecords;
        redoPhysiological(updates, sq.dpt, opts, stats);
        break;
    }
    }

    if (opts.runUndo) stats.undoCount = undoLosers(records, stats);
    if (opts.auditTree) m_tree.audit();

    stats.dataPagesFetched = m_clock.dataPagesFetched();
    stats.indexPagesFetched = m_clock.indexPagesFetched();
    stats.logPagesRead = m_clock.logPagesRead();
    stats.syncStalls = m_clock.syncStalls();
    stats.prefetchIssued = m_clock.prefetchIssued();
    stats.prefetchHits = m_clock.prefetchHits();
    stats.simTime = m_clock.now() - t0;
    stats.dataFetchSet = m_clock.dataFetchSet();
    stats.digest = m_tree.contentDigest();
    return stats;
}

std::string RecoveryStats::csvHeader() {
    return "method,dpt_mode,records_scanned,redo_applied,skipped_filter,skipped_plsn,"
           "tail_records,dpt_size,pf_list,delta_records,bw_records,index_preloaded,"
           "data_pages_fetched,index_pages_fetched,log_pages_read,sync_stalls,"
           "prefetch_issued,prefetch_hits,undo_count,sim_time,digest";
}

std::string RecoveryStats::csvRow() const {
    const char* modeName = dptMode == DptMode::Standard ? "standard"
                           : dptMode == DptMode::Perfect ? "perfect"
                                                         : "reduced";
    std::ostringstream os;
    os << methodName(method) << ',' << modeName << ',' << recordsScanned << ',' << redoApplied
       << ',' << redoSkippedFilter << ',' << redoSkippedPlsn << ',' << tailRecords << ','
       << dptSize << ',' << pfListSize << ',' << deltaRecords << ',' << bwRecords << ','
       << indexPagesPreloaded << ',' << dataPagesFetched << ',' << indexPagesFetched << ','
       << logPagesRead << ',' << syncStalls << ',' << prefetchIssued << ',' << prefetchHits
       << ',' << undoCount << ',' << simTime << ',' << std::hex << digest;
    return os.str();
}

} // namespace splitkv
