// Copyright (c) 2026 the splitkv authors. All rights reserved.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#include "splitkv/wal.hpp"

#include <random>

#include "doctest.h"
#include "test_util.hpp"

using namespace splitkv;
using test::TempDir;

namespace {

UpdateRecord makeUpdate(Key key, std::uint8_t fill, std::size_t valueLen = 16) {
    UpdateRecord u;
    u.txnId = 7;
    u.tableId = 1;
    u.key = key;
    u.newValue.assign(valueLen, fill);
    u.prevValue.assign(valueLen, static_cast<std::uint8_t>(fill ^ 0xff));
    u.pid = 42;
    return u;
}

} // namespace

TEST_CASE("append returns header-size lsn for the first record") {
    TempDir dir("wal-first");
    Wal wal(dir.file("log"), 4096, true);
    CHECK(wal.append(makeUpdate(1, 0x11)) == Wal::kHeaderSize);
}

TEST_CASE("append advances by payload size plus frame overhead") {
    TempDir dir("wal-offsets");
    Wal wal(dir.file("log"), 4096, true);
    auto body = RecordBody{makeUpdate(1, 0x11)};
    const auto payloadLen = encodeRecordBody(body).size();
    Lsn l1 = wal.append(body);
    Lsn l2 = wal.append(body);
    CHECK(l2 == l1 + payloadLen + Wal::kFrameOverhead);
}

TEST_CASE("scan yields appended records in order") {
    TempDir dir("wal-scan");
    Wal wal(dir.file("log"), 4096, true);
    std::vector<Lsn> lsns;
    for (int i = 0; i < 5; ++i) lsns.push_back(wal.append(makeUpdate(i, 0x20)));
    wal.forceAll();

    auto recs = wal.scanAll(kNullLsn);
    REQUIRE(recs.size() == 5);
    for (int i = 0; i < 5; ++i) {
        CHECK(recs[i].lsn == lsns[i]);
        CHECK(recs[i].as<UpdateRecord>().key == static_cast<Key>(i));
    }

    auto fromThird = wal.scanAll(lsns[2]);
    REQUIRE(fromThird.size() == 3);
    CHECK(fromThird[0].lsn == lsns[2]);
}

TEST_CASE("scan from a non-boundary offset fails") {
    TempDir dir("wal-boundary");
    Wal wal(dir.file("log"), 4096, true);
    Lsn l1 = wal.append(makeUpdate(1, 0x33));
    wal.append(makeUpdate(2, 0x34));
    wal.forceAll();
    auto c = wal.scan(l1 + 3);
    CHECK_THROWS_AS(c.next(), ScanError);
}

TEST_CASE("forceTo(0) leaves the stable end unchanged") {
    TempDir dir("wal-force0");
    Wal wal(dir.file("log"), 4096, true);
    wal.append(makeUpdate(1, 0x44));
    Lsn before = wal.stableLsn();
    CHECK(wal.forceTo(kNullLsn) == before);
    CHECK(wal.stableLsn() == before);
}

TEST_CASE("forceTo makes the target and everything before it stable") {
    TempDir dir("wal-force");
    Wal wal(dir.file("log"), 4096, true);
    Lsn l1 = wal.append(makeUpdate(1, 0x55));
    Lsn l2 = wal.append(makeUpdate(2, 0x56));
    Lsn l3 = wal.append(makeUpdate(3, 0x57));
    CHECK(wal.stableLsn() == kNullLsn);
    Lsn stable = wal.forceTo(l2);
    CHECK(stable >= l2);
    CHECK(stable <= l3);
    (void)l1;
}

TEST_CASE("crash after forceTo keeps every record at or below the target") {
    TempDir dir("wal-crash-force");
    std::vector<Lsn> lsns;
    Lsn target;
    {
        Wal wal(dir.file("log"), 4096, true);
        for (int i = 0; i < 10; ++i) lsns.push_back(wal.append(makeUpdate(i, 0x60)));
        target = wal.forceTo(lsns[6]);
        CHECK(target >= lsns[6]);
        wal.dropVolatile();
        // wal goes out of scope without forcing the tail
    }
    Wal reopened(dir.file("log"), 4096, false);
    auto recs = reopened.scanAll(kNullLsn);
    REQUIRE(recs.size() >= 7);
    for (std::size_t i = 0; i < recs.size(); ++i) CHECK(recs[i].lsn == lsns[i]);
}

TEST_CASE("truncated tail: scan stops at the last whole frame, appends resume there") {
    TempDir dir("wal-torn");
    std::vector<Lsn> lsns;
    {
        Wal wal(dir.file("log"), 4096, true);
        for (int i = 0; i < 6; ++i) lsns.push_back(wal.append(makeUpdate(i, 0x70)));
        wal.forceAll();
    }
    // Chop into the middle of the last frame.
    test::truncateFile(dir.file("log"), lsns[5] + 4);

    Wal wal(dir.file("log"), 4096, false);
    auto recs = wal.scanAll(kNullLsn);
    REQUIRE(recs.size() == 5);
    CHECK(recs.back().lsn == lsns[4]);

    // Appends continue at the recovered stable end.
    Lsn resumed = wal.append(makeUpdate(99, 0x71));
    CHECK(resumed == lsns[5]);
    wal.forceAll();
    auto recs2 = wal.scanAll(kNullLsn);
    REQUIRE(recs2.size() == 6);
    CHECK(recs2.back().as<UpdateRecord>().key == 99);
}

TEST_CASE("torn frame at arbitrary truncation points never surfaces a partial record") {
    TempDir dir("wal-torn-sweep");
    std::vector<Lsn> lsns;
    std::uint64_t fullSize;
    {
        Wal wal(dir.file("log"), 4096, true);
        for (int i = 0; i < 8; ++i) lsns.push_back(wal.append(makeUpdate(i, 0x80, 24)));
        wal.forceAll();
        fullSize = wal.stableEndOffset();
    }
    std::mt19937_64 rng(1234);
    for (int trial = 0; trial < 40; ++trial) {
        std::uint64_t cut = Wal::kHeaderSize +
                            rng() % (fullSize - Wal::kHeaderSize);
        auto copy = dir.file("log-cut");
        std::filesystem::copy_file(dir.file("log"), copy,
                                   std::filesystem::copy_options::overwrite_existing);
        test::truncateFile(copy, cut);
        Wal wal(copy, 4096, false);
        auto recs = wal.scanAll(kNullLsn);
        // Every surfaced record must be one of the originally appended ones,
        // whole prefix only.
        for (std::size_t i = 0; i < recs.size(); ++i) {
            REQUIRE(i < lsns.size());
            CHECK(recs[i].lsn == lsns[i]);
            CHECK(recs[i].as<UpdateRecord>().newValue ==
                  std::vector<std::uint8_t>(24, 0x80));
        }
        std::size_t wholeFrames = 0;
        for (std::size_t i = 0; i + 1 <= lsns.size(); ++i) {
            std::uint64_t end = (i + 1 < lsns.size()) ? lsns[i + 1] : fullSize;
            if (end <= cut) ++wholeFrames;
        }
        CHECK(recs.size() == wholeFrames);
    }
}

TEST_CASE("findRedoScanStart: no checkpoint means log start") {
    TempDir dir("wal-ckpt0");
    Wal wal(dir.file("log"), 4096, true);
    wal.append(makeUpdate(1, 0x90));
    wal.forceAll();
    CHECK(wal.findRedoScanStart() == wal.startLsn());
}

TEST_CASE("findRedoScanStart: incomplete checkpoint falls back to previous complete one") {
    TempDir dir("wal-ckpt1");
    Wal wal(dir.file("log"), 4096, true);
    Lsn b1 = wal.append(BeginCheckpointRecord{});
    wal.append(EndCheckpointRecord{b1});
    wal.append(makeUpdate(1, 0x91));
    Lsn b2 = wal.append(BeginCheckpointRecord{});
    wal.forceAll();
    // b2 has no eCkpt: scan must start at b1.
    CHECK(wal.findRedoScanStart() == b1);
    // Completing it moves the scan start to b2.
    wal.append(EndCheckpointRecord{b2});
    wal.forceAll();
    CHECK(wal.findRedoScanStart() == b2);
}

TEST_CASE("findRedoScanStart: two completed checkpoints pick the later bCkpt") {
    TempDir dir("wal-ckpt2");
    Wal wal(dir.file("log"), 4096, true);
    Lsn b1 = wal.append(BeginCheckpointRecord{});
    wal.append(EndCheckpointRecord{b1});
    Lsn b2 = wal.append(BeginCheckpointRecord{});
    wal.append(EndCheckpointRecord{b2});
    wal.forceAll();
    CHECK(wal.findRedoScanStart() == b2);
}

TEST_CASE("property: append order equals lsn order equals scan order") {
    TempDir dir("wal-order");
    std::mt19937_64 rng(99);
    Wal wal(dir.file("log"), 4096, true);
    std::vector<Lsn> lsns;
    for (int i = 0; i < 300; ++i) {
        switch (rng() % 4) {
        case 0:
            lsns.push_back(wal.append(makeUpdate(rng() % 1000, 0x11, 8 + rng() % 64)));
            break;
        case 1:
            lsns.push_back(wal.append(CommitRecord{rng(), kNullLsn}));
            break;
        case 2: {
            DeltaRecord d;
            for (int k = 0; k < int(rng() % 5); ++k) d.dirtySet.push_back(Pid(rng() % 50));
            d.tcLsn = lsns.empty() ? kNullLsn : lsns.back();
            lsns.push_back(wal.append(d));
            break;
        }
        default:
            lsns.push_back(wal.append(BwRecord{{Pid(rng() % 50)}, kNullLsn}));
            break;
        }
        if (rng() % 16 == 0) wal.forceAll();
    }
    wal.forceAll();
    CHECK(std::is_sorted(lsns.begin(), lsns.end()));
    auto recs = wal.scanAll(kNullLsn);
    REQUIRE(recs.size() == lsns.size());
    for (std::size_t i = 0; i < lsns.size(); ++i) CHECK(recs[i].lsn == lsns[i]);
}

TEST_CASE("record bodies round-trip through the frame encoding") {
    TempDir dir("wal-roundtrip");
    Wal wal(dir.file("log"), 4096, true);

    DeltaRecord d;
    d.dirtySet = {5, 9, 5, 12};
    d.writtenSet = {9};
    d.fwLsn = 1234;
    d.firstDirty = 2;
    d.tcLsn = 999;
    d.dirtyLsns = std::vector<Lsn>{100, 150, 160, 170};
    wal.append(d);

    SmoRecord s;
    s.tableId = 1;
    s.oldPid = 3;
    s.newPid = 8;
    s.parentPid = 2;
    s.sepKey = 777;
    s.leftLowKey = 10;
    s.pageKind = 1;
    s.movedCount = 2;
    s.movedSlots = {1, 2, 3, 4, 5, 6};
    wal.append(s);

    wal.append(RsspRecord{4242});
    wal.forceAll();

    auto recs = wal.scanAll(kNullLsn);
    REQUIRE(recs.size() == 3);
    const auto& rd = recs[0].as<DeltaRecord>();
    CHECK(rd.dirtySet == d.dirtySet);
    CHECK(rd.writtenSet == d.writtenSet);
    CHECK(rd.fwLsn == d.fwLsn);
    CHECK(rd.firstDirty == d.firstDirty);
    CHECK(rd.tcLsn == d.tcLsn);
    REQUIRE(rd.dirtyLsns.has_value());
    CHECK(*rd.dirtyLsns == *d.dirtyLsns);
    const auto& rs = recs[1].as<SmoRecord>();
    CHECK(rs.sepKey == 777);
    CHECK(rs.movedSlots == s.movedSlots);
    CHECK(recs[2].as<RsspRecord>().rsspLsn == 4242);
}

TEST_CASE("kind-filtered scan") {
    TempDir dir("wal-filter");
    Wal wal(dir.file("log"), 4096, true);
    wal.append(makeUpdate(1, 0x11));
    wal.append(BwRecord{{3}, kNullLsn});
    wal.append(makeUpdate(2, 0x12));
    wal.forceAll();
    auto ups = wal.scanAll(kNullLsn, KindMask{RecordKind::Update});
    REQUIRE(ups.size() == 2);
    CHECK(ups[1].as<UpdateRecord>().key == 2);
}
