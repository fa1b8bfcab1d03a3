// Copyright (c) 2026 the splitkv authors. All rights reserved.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "splitkv/types.hpp"

namespace splitkv {

enum class RecordKind : std::uint8_t {
    Update = 1,         // TC logical update, PID-annotated
    Commit = 2,         // TC transaction commit
    BeginCheckpoint = 3,
    EndCheckpoint = 4,
    Smo = 5,            // DC physiological B-tree split
    Delta = 6,          // DC dirty/flush monitoring record
    Bw = 7,             // buffer-write record (flushed PIDs only)
    Rssp = 8,           // DC redo-scan-start-point marker
};

// Logical update. The pid annotation is captured at normal execution time and
// must be ignored by all logical redo paths.
struct UpdateRecord {
    TxnId txnId = 0;
    TableId tableId = 0;
    Key key = 0;
    std::vector<std::uint8_t> newValue;
    std::vector<std::uint8_t> prevValue;
    Pid pid = kNullPid;
    Lsn prevLsnOfTxn = kNullLsn;
    bool compensation = false; // written by the undo pass
};

struct CommitRecord {
    TxnId txnId = 0;
    Lsn prevLsnOfTxn = kNullLsn;
};

struct BeginCheckpointRecord {};

struct EndCheckpointRecord {
    Lsn bCkptLsn = kNullLsn;
};

// Physiological B-tree split, redo-only. Carries the moved slot images so
// each affected page can be redone independently under its pLSN test.
struct SmoRecord {
    TableId tableId = 0;
    Pid oldPid = kNullPid;
    Pid newPid = kNullPid;
    Pid parentPid = kNullPid;  // 0 when this is a root split
    Pid newRootPid = kNullPid; // nonzero only for a root split
    Key sepKey = 0;
    Key leftLowKey = 0;        // low key of the old page, for new-root init
    std::uint8_t pageKind = 0; // PageKind of the split page
    std::uint16_t movedCount = 0;
    std::vector<std::uint8_t> movedSlots; // raw slot bytes, page format
};

struct DeltaRecord {
    std::vector<Pid> dirtySet;   // duplicates allowed
    std::vector<Pid> writtenSet;
    Lsn fwLsn = kNullLsn;
    std::uint32_t firstDirty = 0;
    Lsn tcLsn = kNullLsn;
    // Parallel to dirtySet; present only when the engine runs in
    // perfect-DPT mode.
    std::optional<std::vector<Lsn>> dirtyLsns;
};

struct BwRecord {
    std::vector<Pid> writtenSet;
    Lsn fwLsn = kNullLsn;
};

struct RsspRecord {
    Lsn rsspLsn = kNullLsn;
};

using RecordBody = std::variant<UpdateRecord, CommitRecord, BeginCheckpointRecord,
                                EndCheckpointRecord, SmoRecord, DeltaRecord, BwRecord,
                                RsspRecord>;

struct LogRecord {
    Lsn lsn = kNullLsn;
    RecordBody body;

    RecordKind kind() const { return static_cast<RecordKind>(body.index() + 1); }

    template <typename T> const T& as() const { return std::get<T>(body); }
    template <typename T> T& as() { return std::get<T>(body); }
    template <typename T> bool is() const { return std::holds_alternative<T>(body); }
};

// Kind filter for scans. Empty mask means "all kinds".
class KindMask {
public:
    KindMask() = default;
    KindMask(std::initializer_list<RecordKind> kinds) {
        for (auto k : kinds) m_bits |= bit(k);
    }
    static KindMask all() { return KindMask(); }
    bool accepts(RecordKind k) const { return m_bits == 0 || (m_bits & bit(k)) != 0; }

private:
    static std::uint32_t bit(RecordKind k) { return 1u << static_cast<unsigned>(k); }
    std::uint32_t m_bits = 0;
};

std::vector<std::uint8_t> encodeRecordBody(const RecordBody& body);
RecordBody decodeRecordBody(const std::uint8_t* data, std::size_t size);

} // namespace splitkv
