// Copyright (c) 2026 the splitkv authors. All rights reserved.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#pragma once

#include <cstdint>
#include <cstring>
#include <optional>
#include <span>

#include "splitkv/types.hpp"

namespace splitkv {

enum class PageKind : std::uint8_t {
    Free = 0,
    Leaf = 1,
    Index = 2,
};

// Page geometry shared by every page of one database file.
struct PageGeometry {
    std::uint32_t pageSize = kDefaultPageSize;
    std::uint32_t payloadSize = 92; // fixed-length record payload

    std::uint32_t leafSlotSize() const { return 8 + payloadSize; }
    static constexpr std::uint32_t kIndexSlotSize = 12;
    static constexpr std::uint32_t kSlotAreaOffset = 16;

    std::uint32_t leafCapacity() const {
        return (pageSize - kSlotAreaOffset) / leafSlotSize();
    }
    std::uint32_t indexCapacity() const {
        return (pageSize - kSlotAreaOffset) / kIndexSlotSize;
    }
};

// View/editor over one page-sized buffer.
//
// Layout: [crc u32][pLsn u64][kind u8][pad u8][slotCount u16][slots...]
// Leaf slot:  key u64 + payload bytes (fixed length).
// Index slot: key u64 + child pid u32; slot i covers keys in
// [key_i, key_{i+1}), and keys below key_0 fall to slot 0.
class Page {
public:
    Page(std::uint8_t* data, const PageGeometry& geo) : m_d(data), m_geo(&geo) {}

    void init(PageKind kind) {
        std::memset(m_d, 0, m_geo->pageSize);
        m_d[12] = static_cast<std::uint8_t>(kind);
    }

    PageKind kind() const { return static_cast<PageKind>(m_d[12]); }
    bool isLeaf() const { return kind() == PageKind::Leaf; }

    Lsn pLsn() const {
        Lsn v;
        std::memcpy(&v, m_d + 4, 8);
        return v;
    }
    void setPLsn(Lsn lsn) { std::memcpy(m_d + 4, &lsn, 8); }

    std::uint16_t slotCount() const {
        std::uint16_t v;
        std::memcpy(&v, m_d + 14, 2);
        return v;
    }

    std::uint32_t capacity() const {
        return isLeaf() ? m_geo->leafCapacity() : m_geo->indexCapacity();
    }
    bool full() const { return slotCount() >= capacity(); }

    Key keyAt(std::uint16_t i) const {
        Key k;
        std::memcpy(&k, slotPtr(i), 8);
        return k;
    }

    std::span<const std::uint8_t> leafPayloadAt(std::uint16_t i) const {
        return {slotPtr(i) + 8, m_geo->payloadSize};
    }

    Pid childAt(std::uint16_t i) const {
        Pid p;
        std::memcpy(&p, slotPtr(i) + 8, 4);
        return p;
    }

    // Index of the rightmost slot with key <= target; slot 0 when target is
    // below every key.
    std::uint16_t slotFor(Key target) const {
        std::uint16_t lo = 0, hi = slotCount();
        while (hi - lo > 1) {
            std::uint16_t mid = static_cast<std::uint16_t>((lo + hi) / 2);
            if (keyAt(mid) <= target) lo = mid;
            else hi = mid;
        }
        return lo;
    }

    std::optional<std::uint16_t> findKey(Key target) const {
        if (slotCount() == 0) return std::nullopt;
        auto i = slotFor(target);
        if (keyAt(i) == target) return i;
        return std::nullopt;
    }

    // Insertion position keeping keys sorted.
    std::uint16_t lowerBound(Key target) const {
        std::uint16_t lo = 0, hi = slotCount();
        while (lo < hi) {
            std::uint16_t mid = static_cast<std::uint16_t>((lo + hi) / 2);
            if (keyAt(mid) < target) lo = static_cast<std::uint16_t>(mid + 1);
            else hi = mid;
        }
        return lo;
    }

    void insertLeaf(std::uint16_t i, Key key, std::span<const std::uint8_t> payload) {
        insertRaw(i);
        std::memcpy(slotPtr(i), &key, 8);
        std::memcpy(slotPtr(i) + 8, payload.data(), m_geo->payloadSize);
    }

    void setLeafPayload(std::uint16_t i, std::span<const std::uint8_t> payload) {
        std::memcpy(slotPtr(i) + 8, payload.data(), m_geo->payloadSize);
    }

    void insertIndex(std::uint16_t i, Key key, Pid child) {
        insertRaw(i);
        std::memcpy(slotPtr(i), &key, 8);
        std::memcpy(slotPtr(i) + 8, &child, 4);
    }

    // Drops slots [from, slotCount).
    void truncateSlots(std::uint16_t from) { setSlotCount(from); }

    // Raw slot bytes [from, from+count), page format; used for SMO logging.
    std::span<const std::uint8_t> rawSlots(std::uint16_t from, std::uint16_t count) const {
        return {slotPtr(from), static_cast<std::size_t>(count) * slotSize()};
    }

    void appendRawSlots(std::span<const std::uint8_t> bytes, std::uint16_t count) {
        std::memcpy(slotPtr(slotCount()), bytes.data(), bytes.size());
        setSlotCount(static_cast<std::uint16_t>(slotCount() + count));
    }

    const std::uint8_t* data() const { return m_d; }
    std::uint8_t* data() { return m_d; }

private:
    std::uint32_t slotSize() const {
        return isLeaf() ? m_geo->leafSlotSize() : PageGeometry::kIndexSlotSize;
    }
    const std::uint8_t* slotPtr(std::uint16_t i) const {
        return m_d + PageGeometry::kSlotAreaOffset +
               static_cast<std::size_t>(i) * slotSize();
    }
    std::uint8_t* slotPtr(std::uint16_t i) {
        return m_d + PageGeometry::kSlotAreaOffset +
               static_cast<std::size_t>(i) * slotSize();
    }
    void setSlotCount(std::uint16_t n) { std::memcpy(m_d + 14, &n, 2); }
    void insertRaw(std::uint16_t i) {
        const auto n = slotCount();
        std::memmove(slotPtr(static_cast<std::uint16_t>(i + 1)), slotPtr(i),
                     static_cast<std::size_t>(n - i) * slotSize());
        setSlotCount(static_cast<std::uint16_t>(n + 1));
    }

    std::uint8_t* m_d;
    const PageGeometry* m_geo;
};

} // namespace splitkv
