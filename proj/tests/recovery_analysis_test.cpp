// Copyright (c) 2026 the splitkv authors. All rights reserved.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#include <random>

#include "doctest.h"
#include "splitkv/recovery.hpp"

using namespace splitkv;

namespace {

LogRecord upd(Lsn lsn, Pid pid, Key key = 0) {
    UpdateRecord u;
    u.txnId = 1;
    u.key = key ? key : Key(pid);
    u.pid = pid;
    u.newValue = {1};
    u.prevValue = {0};
    return LogRecord{lsn, u};
}

LogRecord bw(Lsn lsn, std::vector<Pid> written, Lsn fw) {
    return LogRecord{lsn, BwRecord{std::move(written), fw}};
}

LogRecord delta(Lsn lsn, std::vector<Pid> dirty, std::uint32_t firstDirty, Lsn fw,
                std::vector<Pid> written, Lsn tc,
                std::optional<std::vector<Lsn>> dirtyLsns = std::nullopt) {
    DeltaRecord d;
    d.dirtySet = std::move(dirty);
    d.writtenSet = std::move(written);
    d.fwLsn = fw;
    d.firstDirty = firstDirty;
    d.tcLsn = tc;
    d.dirtyLsns = std::move(dirtyLsns);
    return LogRecord{lsn, d};
}

} // namespace

TEST_CASE("sqlAnalysis hand traces") {
    SUBCASE("flushed-after-last-update page is pruned") {
        std::vector<LogRecord> recs{upd(100, 1), upd(110, 2), bw(115, {1}, 120)};
        auto r = sqlAnalysis(recs, 50);
        CHECK(r.dpt.size() == 1);
        REQUIRE(r.dpt.contains(2));
        CHECK(r.dpt.findEntry(2)->rLsn == 110);
        CHECK(r.dpt.findEntry(2)->lastLsn == 110);
        CHECK(r.bwRecords == 1);
    }

    SUBCASE("page updated after the flush survives with rLsn raised") {
        std::vector<LogRecord> recs{upd(100, 1), upd(130, 1), bw(140, {1}, 120)};
        auto r = sqlAnalysis(recs, 50);
        REQUIRE(r.dpt.contains(1));
        CHECK(r.dpt.findEntry(1)->rLsn == 120);
        CHECK(r.dpt.findEntry(1)->lastLsn == 130);
    }

    SUBCASE("empty post-checkpoint log yields an empty table") {
        std::vector<LogRecord> recs;
        CHECK(sqlAnalysis(recs, 50).dpt.size() == 0);
    }

    SUBCASE("records at or before the checkpoint lsn are ignored") {
        std::vector<LogRecord> recs{upd(40, 1), upd(50, 2), upd(60, 3)};
        auto r = sqlAnalysis(recs, 50);
        CHECK(r.dpt.size() == 1);
        CHECK(r.dpt.contains(3));
    }

    SUBCASE("boundary: lastLsn equal to fwLsn prunes (<= comparison)") {
        std::vector<LogRecord> recs{upd(120, 1), bw(130, {1}, 120)};
        auto r = sqlAnalysis(recs, 50);
        CHECK(!r.dpt.contains(1));
    }
}

TEST_CASE("dcAnalysis hand traces") {
    SUBCASE("firstDirty splits rLsn assignment between prev tcLsn and fwLsn") {
        std::vector<LogRecord> recs{delta(500, {1, 2}, 1, 100, {}, 200)};
        auto r = dcAnalysis(recs, 50, DptMode::Standard);
        REQUIRE(r.dpt.contains(1));
        REQUIRE(r.dpt.contains(2));
        CHECK(r.dpt.findEntry(1)->rLsn == 50);
        CHECK(r.dpt.findEntry(1)->lastLsn == 50);
        CHECK(r.dpt.findEntry(2)->rLsn == 100);
        CHECK(r.dpt.findEntry(2)->lastLsn == 100);
        CHECK(r.lastDeltaTcLsn == 200);
        CHECK(r.deltaRecords == 1);
    }

    SUBCASE("written set prunes entries whose lastLsn is below fwLsn") {
        std::vector<LogRecord> recs{delta(500, {1, 2}, 1, 100, {1}, 200)};
        auto r = dcAnalysis(recs, 50, DptMode::Standard);
        CHECK(!r.dpt.contains(1)); // lastLsn 50 < fwLsn 100
        REQUIRE(r.dpt.contains(2));
        CHECK(r.dpt.findEntry(2)->rLsn == 100);
    }

    SUBCASE("boundary: lastLsn equal to fwLsn is kept (< comparison)") {
        // First delta adds pid 1 with rLsn = lastLsn = 100 (the seed); the
        // second delta's fwLsn equals that value, so the entry survives with
        // its rLsn intact. The physiological pass would have pruned an
        // equal-boundary entry.
        std::vector<LogRecord> recs{delta(500, {1}, 0, 100, {}, 300),
                                    delta(600, {}, 0, 100, {1}, 400)};
        auto r = dcAnalysis(recs, 100, DptMode::Standard);
        REQUIRE(r.dpt.contains(1));
        CHECK(r.dpt.findEntry(1)->rLsn == 100);
    }

    SUBCASE("delta records with tcLsn at or below the rssp seed are skipped") {
        std::vector<LogRecord> recs{delta(500, {9}, 0, kNullLsn, {}, 50),
                                    delta(600, {1}, 1, kNullLsn, {}, 200)};
        auto r = dcAnalysis(recs, 50, DptMode::Standard);
        CHECK(!r.dpt.contains(9));
        CHECK(r.dpt.contains(1));
        // and the skipped record neither advances prevDelta nor the tail mark
        CHECK(r.dpt.findEntry(1)->rLsn == 50);
        CHECK(r.lastDeltaTcLsn == 200);
    }

    SUBCASE("null fwLsn treats every entry as dirtied before the first write") {
        std::vector<LogRecord> recs{delta(500, {1, 2}, 2, kNullLsn, {}, 200)};
        auto r = dcAnalysis(recs, 50, DptMode::Standard);
        CHECK(r.dpt.findEntry(1)->rLsn == 50);
        CHECK(r.dpt.findEntry(2)->rLsn == 50);
    }

    SUBCASE("second delta uses the first delta's tcLsn for early entries") {
        std::vector<LogRecord> recs{delta(500, {1}, 1, kNullLsn, {}, 200),
                                    delta(700, {2, 3}, 1, 260, {}, 300)};
        auto r = dcAnalysis(recs, 50, DptMode::Standard);
        CHECK(r.dpt.findEntry(2)->rLsn == 200); // before first write: prev tcLsn
        CHECK(r.dpt.findEntry(3)->rLsn == 260); // after: fwLsn
        CHECK(r.lastDeltaTcLsn == 300);
    }

    SUBCASE("re-dirtied page keeps earliest rLsn, lastLsn rises to the new fwLsn") {
        std::vector<LogRecord> recs{delta(500, {1}, 1, kNullLsn, {}, 200),
                                    delta(700, {1}, 0, 260, {}, 300)};
        auto r = dcAnalysis(recs, 50, DptMode::Standard);
        CHECK(r.dpt.findEntry(1)->rLsn == 50);
        CHECK(r.dpt.findEntry(1)->lastLsn == 260);
    }

    SUBCASE("perfect mode reproduces the physiological table") {
        std::vector<LogRecord> recs{
            delta(500, {1, 2}, 1, 100, {}, 200, std::vector<Lsn>{60, 130})};
        auto r = dcAnalysis(recs, 50, DptMode::Perfect);
        CHECK(r.dpt.findEntry(1)->rLsn == 60);
        CHECK(r.dpt.findEntry(1)->lastLsn == 60);
        CHECK(r.dpt.findEntry(2)->rLsn == 130);
        CHECK(r.dpt.findEntry(2)->lastLsn == 130);

        std::vector<LogRecord> sqlView{upd(60, 1), upd(130, 2)};
        auto s = sqlAnalysis(sqlView, 50);
        CHECK(s.dpt.entries().size() == r.dpt.entries().size());
        for (const auto& [pid, e] : s.dpt.entries()) {
            REQUIRE(r.dpt.contains(pid));
            CHECK(r.dpt.findEntry(pid)->rLsn == e.rLsn);
        }
    }

    SUBCASE("reduced mode assigns the previous tcLsn everywhere and prunes prior entries only") {
        std::vector<LogRecord> recs{delta(500, {1, 2}, 1, 100, {}, 200),
                                    delta(700, {3}, 0, 260, {1, 3}, 300)};
        auto r = dcAnalysis(recs, 50, DptMode::Reduced);
        // all rLsns from prev tcLsn, fwLsn ignored
        CHECK(!r.dpt.contains(1));            // from the prior delta: pruned
        CHECK(r.dpt.findEntry(2)->rLsn == 50);
        REQUIRE(r.dpt.contains(3));           // current delta's entry survives
        CHECK(r.dpt.findEntry(3)->rLsn == 200);
    }

    SUBCASE("reduced mode is a conservative superset of standard mode") {
        std::mt19937_64 rng(21);
        std::vector<LogRecord> recs;
        Lsn lsn = 100, tc = 90;
        for (int i = 0; i < 30; ++i) {
            std::vector<Pid> dirty, written;
            for (int d = 0; d < int(rng() % 6); ++d) dirty.push_back(1 + Pid(rng() % 12));
            for (int w = 0; w < int(rng() % 4); ++w) written.push_back(1 + Pid(rng() % 12));
            Lsn fw = written.empty() && rng() % 2 ? kNullLsn : tc + rng() % 40;
            std::uint32_t fd = fw == kNullLsn ? std::uint32_t(dirty.size())
                                              : std::uint32_t(rng() % (dirty.size() + 1));
            tc += 50 + rng() % 50;
            recs.push_back(delta(lsn, dirty, fd, fw, written, tc));
            lsn += 100;
        }
        auto std_ = dcAnalysis(recs, 50, DptMode::Standard);
        auto red = dcAnalysis(recs, 50, DptMode::Reduced);
        for (const auto& [pid, e] : std_.dpt.entries()) {
            REQUIRE(red.dpt.contains(pid));
            CHECK(red.dpt.findEntry(pid)->rLsn <= e.rLsn);
        }
    }

    SUBCASE("pf list concatenates first-seen dirty pids") {
        std::vector<LogRecord> recs{delta(500, {4, 2}, 2, kNullLsn, {}, 200),
                                    delta(700, {2, 9, 4}, 3, kNullLsn, {}, 300)};
        auto r = dcAnalysis(recs, 50, DptMode::Standard);
        CHECK(r.pfList == std::vector<Pid>{4, 2, 9});
    }
}

TEST_CASE("cost model point values") {
    CostInputs in;
    in.records = 1000;
    in.logPages = 10;
    in.indexPages = 5;
    CHECK(predictCost(Method::Log0, in, false) == 1015);

    CostInputs sql;
    sql.dptSize = 300;
    sql.logPages = 10;
    CHECK(predictCost(Method::Sql1, sql, false) == 310);

    CostInputs log1;
    log1.dptSize = 300;
    log1.tailRecords = 20;
    log1.logPages = 10;
    log1.indexPages = 5;
    CHECK(predictCost(Method::Log1, log1, false) == 335);

    CHECK(!predictCost(Method::Log2, log1, false).has_value());
    CHECK(!predictCost(Method::Sql2, log1, false).has_value());

    CostInputs var;
    var.records = 1000;
    var.distinctPages = 800;
    var.logPages = 10;
    var.indexPages = 5;
    CHECK(predictCost(Method::Log0, var, true) == 815);
}
