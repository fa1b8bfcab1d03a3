// Copyright (c) 2026 the splitkv authors. All rights reserved.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#include "splitkv/btree.hpp"

#include <algorithm>
#include <cstring>

namespace splitkv {

namespace {

std::uint64_t fnv1a(std::uint64_t h, const std::uint8_t* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

} // namespace

std::vector<BTree::PathEntry> BTree::descend(Key key) {
    std::vector<PathEntry> path;
    Pid cur = m_file.meta().rootPid;
    for (std::uint32_t level = m_file.meta().height; level > 1; --level) {
        auto ref = m_pool.getPage(cur);
        auto page = ref.page();
        auto slot = page.slotFor(key);
        path.push_back({cur, slot});
        cur = page.childAt(slot);
    }
    path.push_back({cur, 0});
    return path;
}

Pid BTree::find(Key key) { return descend(key).back().pid; }

Pid BTree::prepareUpsert(Key key) {
    for (int attempt = 0; attempt < 64; ++attempt) {
        auto path = descend(key);
        const Pid leafPid = path.back().pid;
        {
            auto ref = m_pool.getPage(leafPid);
            auto leaf = ref.page();
            if (leaf.findKey(key) || !leaf.full()) return leafPid;
        }
        // Split the deepest full ancestor first so every parent has room by
        // the time its child splits, then retry the descent.
        std::size_t depth = 0;
        while (depth + 1 < path.size()) {
            auto ref = m_pool.getPage(path[depth].pid);
            if (ref.page().full()) break;
            ++depth;
        }
        splitAt(path, depth);
    }
    throw IntegrityError("upsert: split cascade did not converge");
}

void BTree::splitAt(const std::vector<PathEntry>& path, std::size_t depth) {
    const Pid pid = path[depth].pid;
    SmoRecord rec;
    rec.tableId = m_file.meta().tableId;
    rec.oldPid = pid;
    rec.newPid = m_file.allocPage();
    {
        auto ref = m_pool.getPage(pid);
        auto page = ref.page();
        const std::uint16_t mid = page.slotCount() / 2;
        rec.sepKey = page.keyAt(mid);
        rec.leftLowKey = page.keyAt(0);
        rec.pageKind = static_cast<std::uint8_t>(page.kind());
        rec.movedCount = static_cast<std::uint16_t>(page.slotCount() - mid);
        auto raw = page.rawSlots(mid, rec.movedCount);
        rec.movedSlots.assign(raw.begin(), raw.end());
    }
    const bool rootSplit = depth == 0;
    rec.parentPid = rootSplit ? kNullPid : path[depth - 1].pid;
    rec.newRootPid = rootSplit ? m_file.allocPage() : kNullPid;

    if (!m_smoLog) throw ContractError("split without an SMO log hook");
    const Lsn lsn = m_smoLog(rec);

    // Apply: new sibling, truncated old page, separator posting.
    {
        auto ref = m_pool.getPage(rec.newPid);
        auto page = ref.page();
        page.init(static_cast<PageKind>(rec.pageKind));
        page.appendRawSlots(rec.movedSlots, rec.movedCount);
        m_pool.markDirty(rec.newPid, lsn);
    }
    {
        auto ref = m_pool.getPage(pid);
        auto page = ref.page();
        page.truncateSlots(static_cast<std::uint16_t>(page.slotCount() - rec.movedCount));
        m_pool.markDirty(pid, lsn);
    }
    if (rootSplit) {
        auto ref = m_pool.getPage(rec.newRootPid);
        auto page = ref.page();
        page.init(PageKind::Index);
        page.insertIndex(0, rec.leftLowKey, rec.oldPid);
        page.insertIndex(1, rec.sepKey, rec.newPid);
        m_pool.markDirty(rec.newRootPid, lsn);
        auto& meta = m_file.meta();
        meta.rootPid = rec.newRootPid;
        meta.height += 1;
        meta.metaPLsn = lsn;
    } else {
        auto ref = m_pool.getPage(rec.parentPid);
        auto page = ref.page();
        page.insertIndex(page.lowerBound(rec.sepKey), rec.sepKey, rec.newPid);
        m_pool.markDirty(rec.parentPid, lsn);
    }
}

void BTree::applyValue(Pid leafPid, Key key, std::span<const std::uint8_t> value, Lsn lsn) {
    auto ref = m_pool.getPage(leafPid);
    auto page = ref.page();
    if (auto slot = page.findKey(key)) {
        page.setLeafPayload(*slot, value);
    } else {
        if (page.full()) throw IntegrityError("applyValue: leaf full, missing split");
        page.insertLeaf(page.lowerBound(key), key, value);
    }
    m_pool.markDirty(leafPid, lsn);
}

void BTree::redoSmo(const SmoRecord& rec, Lsn lsn) {
    m_file.ensurePage(std::max(rec.newPid, rec.newRootPid));

    {
        auto ref = m_pool.getPage(rec.newPid);
        auto page = ref.page();
        if (page.pLsn() < lsn) {
            page.init(static_cast<PageKind>(rec.pageKind));
            page.appendRawSlots(rec.movedSlots, rec.movedCount);
            m_pool.markDirty(rec.newPid, lsn);
        }
    }
    {
        auto ref = m_pool.getPage(rec.oldPid);
        auto page = ref.page();
        if (page.pLsn() < lsn) {
            page.truncateSlots(page.lowerBound(rec.sepKey));
            m_pool.markDirty(rec.oldPid, lsn);
        }
    }
    if (rec.newRootPid != kNullPid) {
        auto ref = m_pool.getPage(rec.newRootPid);
        auto page = ref.page();
        if (page.pLsn() < lsn) {
            page.init(PageKind::Index);
            page.insertIndex(0, rec.leftLowKey, rec.oldPid);
            page.insertIndex(1, rec.sepKey, rec.newPid);
            m_pool.markDirty(rec.newRootPid, lsn);
        }
        auto& meta = m_file.meta();
        if (meta.metaPLsn < lsn) {
            meta.rootPid = rec.newRootPid;
            meta.height += 1;
            meta.metaPLsn = lsn;
        }
    } else {
        auto ref = m_pool.getPage(rec.parentPid);
        auto page = ref.page();
        if (page.pLsn() < lsn) {
            if (!page.findKey(rec.sepKey)) {
                page.insertIndex(page.lowerBound(rec.sepKey), rec.sepKey, rec.newPid);
            }
            m_pool.markDirty(rec.parentPid, lsn);
        }
    }
}

std::uint32_t BTree::preloadIndex() {
    const auto height = m_file.meta().height;
    if (height <= 1) return 0;
    std::uint32_t loaded = 0;
    std::vector<Pid> level{m_file.meta().rootPid};
    for (std::uint32_t depth = 1; depth < height; ++depth) {
        m_pool.prefetch(level);
        std::vector<Pid> next;
        for (Pid pid : level) {
            auto ref = m_pool.getPage(pid);
            ++loaded;
            if (depth + 1 < height) {
                auto page = ref.page();
                for (std::uint16_t i = 0; i < page.slotCount(); ++i) {
                    next.push_back(page.childAt(i));
                }
            }
        }
        level = std::move(next);
    }
    return loaded;
}

void BTree::readStable(Pid pid, std::vector<std::uint8_t>& buf) const {
    if (const auto* cached = m_pool.peek(pid)) {
        std::memcpy(buf.data(), cached, m_file.geometry().pageSize);
    } else {
        m_file.readPage(pid, buf.data());
    }
}

void BTree::auditNode(Pid pid, std::uint32_t depth, bool hasLo, Key lo, bool hasHi, Key hi,
                      std::uint32_t expectLeafDepth) const {
    std::vector<std::uint8_t> buf(m_file.geometry().pageSize);
    readStable(pid, buf);
    Page page(buf.data(), m_file.geometry());
    const bool leafDepth = depth == expectLeafDepth;

    if (leafDepth && page.kind() != PageKind::Leaf) {
        throw IntegrityError("audit: non-leaf at leaf depth, pid " + std::to_string(pid));
    }
    if (!leafDepth && page.kind() != PageKind::Index) {
        throw IntegrityError("audit: non-index at internal depth, pid " + std::to_string(pid));
    }
    if (!leafDepth && page.slotCount() == 0) {
        throw IntegrityError("audit: empty index node, pid " + std::to_string(pid));
    }
    Key prev = 0;
    for (std::uint16_t i = 0; i < page.slotCount(); ++i) {
        Key k = page.keyAt(i);
        if (i > 0 && k <= prev) {
            throw IntegrityError("audit: unsorted keys in pid " + std::to_string(pid));
        }
        if (hasLo && k < lo) throw IntegrityError("audit: key below separator, pid " + std::to_string(pid));
        if (hasHi && k >= hi) throw IntegrityError("audit: key above separator, pid " + std::to_string(pid));
        prev = k;
    }
    if (!leafDepth) {
        for (std::uint16_t i = 0; i < page.slotCount(); ++i) {
            const bool childHasLo = hasLo || i > 0;
            const Key childLo = (i > 0) ? page.keyAt(i) : lo;
            const bool childHasHi = hasHi || i + 1 < page.slotCount();
            const Key childHi = (i + 1 < page.slotCount()) ? page.keyAt(i + 1) : hi;
            auditNode(page.childAt(i), depth + 1, childHasLo, childLo, childHasHi, childHi,
                      expectLeafDepth);
        }
    }
}

void BTree::audit() const {
    const auto& meta = m_file.meta();
    if (meta.rootPid == kNullPid) throw IntegrityError("audit: no root");
    auditNode(meta.rootPid, 1, false, 0, false, 0, meta.height);
}

void BTree::visitRows(const std::function<void(Key, std::span<const std::uint8_t>)>& fn) const {
    const auto& geo = m_file.geometry();
    std::function<void(Pid, std::uint32_t)> walk = [&](Pid pid, std::uint32_t depth) {
        std::vector<std::uint8_t> local(geo.pageSize);
        readStable(pid, local);
        Page page(local.data(), geo);
        if (depth == m_file.meta().height) {
            for (std::uint16_t i = 0; i < page.slotCount(); ++i) {
                fn(page.keyAt(i), page.leafPayloadAt(i));
            }
            return;
        }
        for (std::uint16_t i = 0; i < page.slotCount(); ++i) walk(page.childAt(i), depth + 1);
    };
    walk(m_file.meta().rootPid, 1);
}

std::uint64_t BTree::contentDigest() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    visitRows([&](Key key, std::span<const std::uint8_t> payload) {
        h = fnv1a(h, reinterpret_cast<const std::uint8_t*>(&key), 8);
        h = fnv1a(h, payload.data(), payload.size());
    });
    return h;
}

BTree::LoadStats BTree::bulkLoad(PageFile& file, std::uint64_t rowCount,
                                 const std::function<void(Key, std::span<std::uint8_t>)>& fill) {
    const auto& geo = file.geometry();
    LoadStats stats;
    stats.rows = rowCount;
    std::vector<std::uint8_t> buf(geo.pageSize);
    std::vector<std::uint8_t> payload(geo.payloadSize);

    // Leaf level, packed full in key order.
    std::vector<std::pair<Key, Pid>> level; // (low key, pid)
    Key key = 0;
    do {
        Pid pid = file.allocPage();
        Page page(buf.data(), geo);
        page.init(PageKind::Leaf);
        const Key lowKey = key;
        while (key < rowCount && page.slotCount() < geo.leafCapacity()) {
            fill(key, payload);
            page.insertLeaf(page.slotCount(), key, payload);
            ++key;
        }
        file.writePage(pid, buf.data());
        level.emplace_back(lowKey, pid);
        ++stats.leafPages;
    } while (key < rowCount);

    // Index levels, bottom-up, until one root remains.
    stats.height = 1;
    while (level.size() > 1) {
        std::vector<std::pair<Key, Pid>> upper;
        std::size_t i = 0;
        while (i < level.size()) {
            Pid pid = file.allocPage();
            Page page(buf.data(), geo);
            page.init(PageKind::Index);
            const Key lowKey = level[i].first;
            while (i < level.size() && page.slotCount() < geo.indexCapacity()) {
                page.insertIndex(page.slotCount(), level[i].first, level[i].second);
                ++i;
            }
            file.writePage(pid, buf.data());
            upper.emplace_back(lowKey, pid);
            ++stats.indexPages;
        }
        level = std::move(upper);
        ++stats.height;
    }

    auto& meta = file.meta();
    meta.rootPid = level.front().second;
    meta.height = stats.height;
    meta.rowCount = rowCount;
    meta.metaPLsn = kNullLsn;
    file.storeMeta();
    return stats;
}

} // namespace splitkv
