// Copyright (c) 2026 the splitkv authors. All rights reserved.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#include "splitkv/log_record.hpp"

#include "serde.hpp"

namespace splitkv {

namespace {

void putPidList(std::vector<std::uint8_t>& out, const std::vector<Pid>& pids) {
    serde::putInt<std::uint32_t>(out, static_cast<std::uint32_t>(pids.size()));
    for (Pid p : pids) serde::putInt<std::uint32_t>(out, p);
}

std::vector<Pid> getPidList(serde::Reader& r) {
    auto n = r.getInt<std::uint32_t>();
    std::vector<Pid> v;
    v.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) v.push_back(r.getInt<std::uint32_t>());
    return v;
}

void putBlob(std::vector<std::uint8_t>& out, const std::vector<std::uint8_t>& b) {
    serde::putInt<std::uint32_t>(out, static_cast<std::uint32_t>(b.size()));
    serde::putBytes(out, b.data(), b.size());
}

std::vector<std::uint8_t> getBlob(serde::Reader& r) {
    auto n = r.getInt<std::uint32_t>();
    return r.getBytes(n);
}

} // namespace

std::vector<std::uint8_t> encodeRecordBody(const RecordBody& body) {
    std::vector<std::uint8_t> out;
    const auto kind = static_cast<std::uint8_t>(body.index() + 1);
    out.push_back(kind);
    switch (static_cast<RecordKind>(kind)) {
    case RecordKind::Update: {
        const auto& u = std::get<UpdateRecord>(body);
        serde::putInt<std::uint64_t>(out, u.txnId);
        serde::putInt<std::uint32_t>(out, u.tableId);
        serde::putInt<std::uint64_t>(out, u.key);
        putBlob(out, u.newValue);
        putBlob(out, u.prevValue);
        serde::putInt<std::uint32_t>(out, u.pid);
        serde::putInt<std::uint64_t>(out, u.prevLsnOfTxn);
        out.push_back(u.compensation ? 1 : 0);
        break;
    }
    case RecordKind::Commit: {
        const auto& c = std::get<CommitRecord>(body);
        serde::putInt<std::uint64_t>(out, c.txnId);
        serde::putInt<std::uint64_t>(out, c.prevLsnOfTxn);
        break;
    }
    case RecordKind::BeginCheckpoint:
        break;
    case RecordKind::EndCheckpoint: {
        const auto& e = std::get<EndCheckpointRecord>(body);
        serde::putInt<std::uint64_t>(out, e.bCkptLsn);
        break;
    }
    case RecordKind::Smo: {
        const auto& s = std::get<SmoRecord>(body);
        serde::putInt<std::uint32_t>(out, s.tableId);
        serde::putInt<std::uint32_t>(out, s.oldPid);
        serde::putInt<std::uint32_t>(out, s.newPid);
        serde::putInt<std::uint32_t>(out, s.parentPid);
        serde::putInt<std::uint32_t>(out, s.newRootPid);
        serde::putInt<std::uint64_t>(out, s.sepKey);
        serde::putInt<std::uint64_t>(out, s.leftLowKey);
        out.push_back(s.pageKind);
        serde::putInt<std::uint16_t>(out, s.movedCount);
        putBlob(out, s.movedSlots);
        break;
    }
    case RecordKind::Delta: {
        const auto& d = std::get<DeltaRecord>(body);
        putPidList(out, d.dirtySet);
        putPidList(out, d.writtenSet);
        serde::putInt<std::uint64_t>(out, d.fwLsn);
        serde::putInt<std::uint32_t>(out, d.firstDirty);
        serde::putInt<std::uint64_t>(out, d.tcLsn);
        out.push_back(d.dirtyLsns ? 1 : 0);
        if (d.dirtyLsns) {
            serde::putInt<std::uint32_t>(out, static_cast<std::uint32_t>(d.dirtyLsns->size()));
            for (Lsn l : *d.dirtyLsns) serde::putInt<std::uint64_t>(out, l);
        }
        break;
    }
    case RecordKind::Bw: {
        const auto& b = std::get<BwRecord>(body);
        putPidList(out, b.writtenSet);
        serde::putInt<std::uint64_t>(out, b.fwLsn);
        break;
    }
    case RecordKind::Rssp: {
        const auto& m = std::get<RsspRecord>(body);
        serde::putInt<std::uint64_t>(out, m.rsspLsn);
        break;
    }
    }
    return out;
}

RecordBody decodeRecordBody(const std::uint8_t* data, std::size_t size) {
    serde::Reader r(data, size);
    const auto kind = static_cast<RecordKind>(r.getInt<std::uint8_t>());
    switch (kind) {
    case RecordKind::Update: {
        UpdateRecord u;
        u.txnId = r.getInt<std::uint64_t>();
        u.tableId = r.getInt<std::uint32_t>();
        u.key = r.getInt<std::uint64_t>();
        u.newValue = getBlob(r);
        u.prevValue = getBlob(r);
        u.pid = r.getInt<std::uint32_t>();
        u.prevLsnOfTxn = r.getInt<std::uint64_t>();
        u.compensation = r.getInt<std::uint8_t>() != 0;
        return u;
    }
    case RecordKind::Commit: {
        CommitRecord c;
        c.txnId = r.getInt<std::uint64_t>();
        c.prevLsnOfTxn = r.getInt<std::uint64_t>();
        return c;
    }
    case RecordKind::BeginCheckpoint:
        return BeginCheckpointRecord{};
    case RecordKind::EndCheckpoint: {
        EndCheckpointRecord e;
        e.bCkptLsn = r.getInt<std::uint64_t>();
        return e;
    }
    case RecordKind::Smo: {
        SmoRecord s;
        s.tableId = r.getInt<std::uint32_t>();
        s.oldPid = r.getInt<std::uint32_t>();
        s.newPid = r.getInt<std::uint32_t>();
        s.parentPid = r.getInt<std::uint32_t>();
        s.newRootPid = r.getInt<std::uint32_t>();
        s.sepKey = r.getInt<std::uint64_t>();
        s.leftLowKey = r.getInt<std::uint64_t>();
        s.pageKind = r.getInt<std::uint8_t>();
        s.movedCount = r.getInt<std::uint16_t>();
        s.movedSlots = getBlob(r);
        return s;
    }
    case RecordKind::Delta: {
        DeltaRecord d;
        d.dirtySet = getPidList(r);
        d.writtenSet = getPidList(r);
        d.fwLsn = r.getInt<std::uint64_t>();
        d.firstDirty = r.getInt<std::uint32_t>();
        d.tcLsn = r.getInt<std::uint64_t>();
        if (r.getInt<std::uint8_t>() != 0) {
            auto n = r.getInt<std::uint32_t>();
            std::vector<Lsn> lsns;
            lsns.reserve(n);
            for (std::uint32_t i = 0; i < n; ++i) lsns.push_back(r.getInt<std::uint64_t>());
            d.dirtyLsns = std::move(lsns);
        }
        return d;
    }
    case RecordKind::Bw: {
        BwRecord b;
        b.writtenSet = getPidList(r);
        b.fwLsn = r.getInt<std::uint64_t>();
        return b;
    }
    case RecordKind::Rssp: {
        RsspRecord m;
        m.rsspLsn = r.getInt<std::uint64_t>();
        return m;
    }
    }
    throw std::runtime_error("log record decode: unknown record kind");
}

} // namespace splitkv
