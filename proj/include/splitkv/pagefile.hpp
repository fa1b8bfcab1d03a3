// Copyright (c) 2026 the splitkv authors. All rights reserved.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "splitkv/page.hpp"
#include "splitkv/types.hpp"

namespace splitkv {

// Single database file: header page (pid 0) + data/index pages. Pages carry a
// crc32 verified on read; an all-zero page is a freshly allocated one.
class PageFile {
public:
    struct Meta {
        TableId tableId = 1;
        Pid rootPid = kNullPid;
        std::uint32_t height = 0; // 1 = root is a leaf
        Lsn metaPLsn = kNullLsn;  // guards redo of root changes
        std::uint64_t rowCount = 0;
    };

    PageFile(std::string path, PageGeometry geo, bool create);
    ~PageFile();

    PageFile(const PageFile&) = delete;
    PageFile& operator=(const PageFile&) = delete;

    const PageGeometry& geometry() const { return m_geo; }
    Pid pageCount() const { return m_pageCount; }

    void readPage(Pid pid, std::uint8_t* buf) const;
    void writePage(Pid pid, std::uint8_t* buf); // fills in the crc
    Pid allocPage();
    // Grows the file so pid is addressable (SMO redo of a lost allocation).
    void ensurePage(Pid pid);

    Meta& meta() { return m_meta; }
    const Meta& meta() const { return m_meta; }
    void storeMeta(); // writes the header page

private:
    void loadHeader();

    std::string m_path;
    PageGeometry m_geo;
    int m_fd = -1;
    Pid m_pageCount = 0;
    Meta m_meta;
};

} // namespace splitkv
