// Copyright (c) 2026 the splitkv authors. All rights reserved.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#pragma once

#include <cstdint>
#include <map>

#include "splitkv/types.hpp"

namespace splitkv {

struct DptEntry {
    Lsn rLsn = kNullLsn;    // conservative first-dirtying lower bound
    Lsn lastLsn = kNullLsn; // used during construction and pruning only
};

// Dirty page table: conservative map of pages possibly dirty at crash.
// Safety: every page truly dirty at crash whose redo the scan could require
// is present, with rLsn not above the Lsn that first dirtied it.
class Dpt {
public:
    // Absent: creates (rLsn=lsn, lastLsn=lsn). Present: lastLsn rises to lsn,
    // rLsn unchanged.
    void addEntry(Pid pid, Lsn lsn) {
        auto [it, inserted] = m_entries.try_emplace(pid, DptEntry{lsn, lsn});
        if (!inserted && lsn > it->second.lastLsn) it->second.lastLsn = lsn;
    }

    DptEntry* findEntry(Pid pid) {
        auto it = m_entries.find(pid);
        return it == m_entries.end() ? nullptr : &it->second;
    }
    const DptEntry* findEntry(Pid pid) const {
        auto it = m_entries.find(pid);
        return it == m_entries.end() ? nullptr : &it->second;
    }

    void removeEntry(Pid pid) { m_entries.erase(pid); }

    std::size_t size() const { return m_entries.size(); }
    bool contains(Pid pid) const { return m_entries.count(pid) != 0; }
    const std::map<Pid, DptEntry>& entries() const { return m_entries; }

private:
    std::map<Pid, DptEntry> m_entries;
};

} // namespace splitkv
