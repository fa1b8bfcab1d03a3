// Copyright (c) 2026 the splitkv authors. All rights reserved.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "splitkv/bench.hpp"
#include "test_util.hpp"

using namespace splitkv;
using test::TempDir;

namespace {

EngineConfig tinyConfig() {
    EngineConfig cfg;
    cfg.pageSize = 512;
    cfg.payloadSize = 24;
    cfg.poolPages = 24;
    cfg.deltaEveryUpdates = 20;
    cfg.ckptEveryUpdates = 100;
    cfg.ckptSweepBatch = 8;
    cfg.flusherCadence = 0;
    cfg.crash.afterCheckpoints = 2;
    cfg.crash.updatesSinceCkpt = 90;
    cfg.crash.updatesSinceDelta = 10;
    return cfg;
}

bench::WorkloadSpec tinyWorkload(std::uint64_t seed, std::uint64_t totalUpdates = 0) {
    bench::WorkloadSpec w;
    w.rowCount = 600;
    w.totalUpdates = totalUpdates;
    w.seed = seed;
    return w;
}

struct CrashedStore {
    TempDir dir;
    EngineConfig cfg;
    bench::CrashResult crash;

    CrashedStore(const std::string& tag, EngineConfig c, bench::WorkloadSpec w)
        : dir(tag), cfg(c) {
        bench::loadTable(dir.path().string(), cfg, w);
        crash = bench::runToCrash(dir.path().string(), cfg, w);
    }
    std::string base() const { return dir.path().string(); }
    std::string scratch(const std::string& s) const { return (dir.path() / s).string(); }
};

const std::vector<Method> kAllMethods{Method::Log0, Method::Log1, Method::Log2, Method::Sql1,
                                      Method::Sql2};

} // namespace

TEST_CASE("all five methods recover to the committed-replay oracle state") {
    CrashedStore s("e2e-basic", tinyConfig(), tinyWorkload(42));
    auto ra = bench::recoverAll(s.base(), s.scratch("rec"), s.cfg, kAllMethods);
    REQUIRE(ra.digestsEqual);
    CHECK(ra.digest == s.crash.oracleDigest);

    // Sanity on the workload shape: the predicate fired past two checkpoints.
    CHECK(s.crash.snap.checkpointsCompleted >= 2);
    CHECK(s.crash.updatesExecuted > 200);
}

TEST_CASE("immediate crash: every method applies zero operations") {
    auto cfg = tinyConfig();
    cfg.crash.immediate = true;
    CrashedStore s("e2e-imm", cfg, tinyWorkload(7));
    auto ra = bench::recoverAll(s.base(), s.scratch("rec"), s.cfg, kAllMethods);
    REQUIRE(ra.digestsEqual);
    CHECK(ra.digest == s.crash.oracleDigest);
    for (const auto& st : ra.stats) {
        CHECK(st.redoApplied == 0);
        CHECK(st.undoCount == 0);
    }
}

TEST_CASE("losers are rolled back by every method") {
    auto w = tinyWorkload(11);
    w.loserTxns = 2;
    CrashedStore s("e2e-losers", tinyConfig(), w);
    auto ra = bench::recoverAll(s.base(), s.scratch("rec"), s.cfg, kAllMethods);
    REQUIRE(ra.digestsEqual);
    CHECK(ra.digest == s.crash.oracleDigest);
    for (const auto& st : ra.stats) {
        CHECK(st.undoCount == 20); // 2 transactions x 10 updates
    }
}

TEST_CASE("mid-transaction crash with a forced tail exercises undo") {
    auto w = tinyWorkload(13, 437); // stops mid-transaction (437 % 10 != 0)
    w.forceTailAtCrash = true;
    CrashedStore s("e2e-midtxn", tinyConfig(), w);
    auto ra = bench::recoverAll(s.base(), s.scratch("rec"), s.cfg, kAllMethods);
    REQUIRE(ra.digestsEqual);
    CHECK(ra.digest == s.crash.oracleDigest);
    for (const auto& st : ra.stats) CHECK(st.undoCount == 437 % 10);
}

TEST_CASE("fetch-set equality: Log1 issues exactly the data page requests of SQL1") {
    for (std::uint64_t seed : {3u, 19u, 77u}) {
        CrashedStore s("e2e-fetchset", tinyConfig(), tinyWorkload(seed));
        RecoveryOptions base;
        auto log1 = bench::recoverCopy(s.base(), s.scratch("l1"), s.cfg,
                                       [&] { auto o = base; o.method = Method::Log1; return o; }());
        auto sql1 = bench::recoverCopy(s.base(), s.scratch("s1"), s.cfg,
                                       [&] { auto o = base; o.method = Method::Sql1; return o; }());
        CHECK(log1.digest == sql1.digest);
        CHECK(log1.dataFetchSet == sql1.dataFetchSet);
    }
}

TEST_CASE("records in the tail of the log fall back to basic logical redo") {
    CrashedStore s("e2e-tail", tinyConfig(), tinyWorkload(5));
    RecoveryOptions o;
    o.method = Method::Log1;
    auto st = bench::recoverCopy(s.base(), s.scratch("l1"), s.cfg, o);
    // The crash predicate guarantees ~10 updates past the last delta record.
    CHECK(st.tailRecords >= 10);
    CHECK(st.tailRecords <= 25);
    CHECK(st.dptSize > 0);
    // Tail pages were fetched even where the pLSN test then skipped them.
    CHECK(st.redoSkippedPlsn + st.redoApplied >= st.tailRecords);
}

TEST_CASE("filter soundness: skipped records would fail the pLSN test anyway") {
    for (Method m : {Method::Log1, Method::Sql1}) {
        CAPTURE(methodName(m));
        CrashedStore s("e2e-sound", tinyConfig(), tinyWorkload(23));
        RecoveryOptions o;
        o.method = m;
        o.auditFilter = true; // fetches every skipped page and asserts
        auto st = bench::recoverCopy(s.base(), s.scratch("au"), s.cfg, o);
        CHECK(st.redoSkippedFilter > 0);
    }
}

TEST_CASE("double redo applies zero operations") {
    CrashedStore s("e2e-double", tinyConfig(), tinyWorkload(31));
    bench::copyStore(s.base(), s.scratch("r1"));

    PageGeometry geo{s.cfg.pageSize, s.cfg.payloadSize};
    PageFile file(EngineConfig::dbFile(s.scratch("r1")), geo, false);
    Wal wal(EngineConfig::walFile(s.scratch("r1")), s.cfg.pageSize, false);
    IoClock clock(s.cfg.costs);
    BufferPool pool(file, clock, s.cfg.poolPages);
    pool.onEosl(wal.stableLsn());
    pool.setWalForce([&](Lsn) { return wal.forceAll(); });
    BTree tree(file, pool);
    tree.setSmoLog([&](const SmoRecord& rec) { return wal.append(rec); });
    Recovery rec(wal, file, pool, tree, clock);

    RecoveryOptions o;
    o.method = Method::Log1;
    auto first = rec.run(o);
    CHECK(first.redoApplied > 0);
    CHECK(first.digest == s.crash.oracleDigest);

    // Running the pass again over the recovered cache redoes nothing.
    auto again = rec.run(o);
    CHECK(again.redoApplied == 0);
    CHECK(again.digest == first.digest);
}

TEST_CASE("crash during recovery: a fresh re-run reaches the same state") {
    CrashedStore s("e2e-doublecrash", tinyConfig(), tinyWorkload(53));
    RecoveryOptions full;
    full.method = Method::Log1;
    auto expect = bench::recoverCopy(s.base(), s.scratch("full"), s.cfg, full);

    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 5; ++trial) {
        auto scratch = s.scratch("abort" + std::to_string(trial));
        RecoveryOptions aborted = full;
        aborted.abortAfterRecords = 1 + rng() % 120;
        bool threw = false;
        try {
            bench::recoverCopy(s.base(), scratch, s.cfg, aborted);
        } catch (const RecoveryAborted&) {
            threw = true;
        }
        if (!threw) continue; // abort point beyond the redo stream

        // Re-run recovery from scratch on the same (partially recovered)
        // stable files.
        PageGeometry geo{s.cfg.pageSize, s.cfg.payloadSize};
        PageFile file(EngineConfig::dbFile(scratch), geo, false);
        Wal wal(EngineConfig::walFile(scratch), s.cfg.pageSize, false);
        IoClock clock(s.cfg.costs);
        BufferPool pool(file, clock, s.cfg.poolPages);
        pool.onEosl(wal.stableLsn());
        pool.setWalForce([&](Lsn) { return wal.forceAll(); });
        BTree tree(file, pool);
        tree.setSmoLog([&](const SmoRecord& rec2) { return wal.append(rec2); });
        Recovery rec(wal, file, pool, tree, clock);
        auto redone = rec.run(full);
        CHECK(redone.digest == expect.digest);
    }
}

TEST_CASE("perfect-mode DPT equals the physiological DPT away from the tail") {
    auto cfg = tinyConfig();
    cfg.perfectDpt = true;
    CrashedStore s("e2e-perfect", cfg, tinyWorkload(61));

    Wal wal(EngineConfig::walFile(s.base()), cfg.pageSize, false);
    const Lsn b = wal.findRedoScanStart();
    auto records = wal.scanAll(b);
    auto sql = sqlAnalysis(records, b);
    auto dc = dcAnalysis(records, rsspSeedFor(records, b), DptMode::Perfect);

    // Compare (pid, rLsn) excluding pages first added by tail records.
    std::map<Pid, Lsn> sqlSide;
    for (const auto& [pid, e] : sql.dpt.entries()) {
        if (e.rLsn < dc.lastDeltaTcLsn) sqlSide[pid] = e.rLsn;
    }
    std::map<Pid, Lsn> dcSide;
    for (const auto& [pid, e] : dc.dpt.entries()) dcSide[pid] = e.rLsn;
    CHECK(sqlSide == dcSide);
}

TEST_CASE("dpt safety audit against crash ground truth") {
    for (std::uint64_t seed : {2u, 12u, 29u}) {
        CrashedStore s("e2e-safety", tinyConfig(), tinyWorkload(seed));
        Wal wal(EngineConfig::walFile(s.base()), s.cfg.pageSize, false);
        const Lsn b = wal.findRedoScanStart();
        auto records = wal.scanAll(b);

        std::map<Pid, Lsn> referenced; // pid -> first update lsn in scan
        for (const auto& rec : records) {
            if (rec.is<UpdateRecord>()) {
                referenced.try_emplace(rec.as<UpdateRecord>().pid, rec.lsn);
            }
        }

        auto sql = sqlAnalysis(records, b);
        auto dc = dcAnalysis(records, rsspSeedFor(records, b), DptMode::Standard);

        for (const auto& [pid, firstDirtyLsn] : s.crash.snap.truth.dirtyFirstLsn) {
            if (!referenced.count(pid)) continue;
            // Physiological table: the page must be present with a safe rLsn.
            REQUIRE(sql.dpt.contains(pid));
            CHECK(sql.dpt.findEntry(pid)->rLsn <= firstDirtyLsn);
            // Logical table: present with a safe rLsn unless only tail
            // records dirtied it (the tail is refetched unconditionally).
            if (firstDirtyLsn < dc.lastDeltaTcLsn) {
                REQUIRE(dc.dpt.contains(pid));
                CHECK(dc.dpt.findEntry(pid)->rLsn <= firstDirtyLsn);
            }
        }
    }
}

TEST_CASE("reduced-mode recovery stays state-equivalent") {
    CrashedStore s("e2e-reduced", tinyConfig(), tinyWorkload(71));
    RecoveryOptions o;
    o.method = Method::Log1;
    o.dptMode = DptMode::Reduced;
    auto st = bench::recoverCopy(s.base(), s.scratch("red"), s.cfg, o);
    CHECK(st.digest == s.crash.oracleDigest);
}

TEST_CASE("dptRedoUpdate flag preserves state equivalence") {
    CrashedStore s("e2e-dptupd", tinyConfig(), tinyWorkload(83));
    for (Method m : {Method::Log1, Method::Sql1}) {
        RecoveryOptions o;
        o.method = m;
        o.dptRedoUpdate = true;
        auto st = bench::recoverCopy(s.base(), s.scratch(std::string("u-") + methodName(m)),
                                     s.cfg, o);
        CHECK(st.digest == s.crash.oracleDigest);
    }
}

TEST_CASE("determinism: same seed produces byte-identical stable files and counters") {
    auto run = [](const std::string& tag) {
        CrashedStore s(tag, tinyConfig(), tinyWorkload(97));
        RecoveryOptions o;
        o.method = Method::Log2;
        auto st = bench::recoverCopy(s.base(), s.scratch("det"), s.cfg, o);
        std::ifstream db(EngineConfig::dbFile(s.base()), std::ios::binary);
        std::stringstream ss;
        ss << db.rdbuf();
        return std::tuple{st.digest, st.dataPagesFetched, st.syncStalls, st.prefetchHits,
                          st.simTime, std::hash<std::string>{}(ss.str())};
    };
    CHECK(run("e2e-det-a") == run("e2e-det-b"));
}

TEST_CASE("cost model holds exactly on the distinct-pages workload") {
    auto cfg = tinyConfig();
    cfg.poolPages = 64;
    auto w = tinyWorkload(1);
    w.distribution = bench::WorkloadSpec::Dist::DistinctPages;
    w.rowCount = 1500; // ~100 leaves at 15 rows/leaf: every update a new page
    CrashedStore s("e2e-cost", cfg, w);

    for (Method m : {Method::Log0, Method::Sql1, Method::Log1}) {
        CAPTURE(methodName(m));
        auto inputs = bench::measureCostInputs(s.base(), s.cfg, m, DptMode::Standard);
        RecoveryOptions o;
        o.method = m;
        o.runUndo = false;
        auto st = bench::recoverCopy(s.base(), s.scratch(std::string("c-") + methodName(m)),
                                     s.cfg, o);
        auto measured = st.dataPagesFetched + st.indexPagesFetched + st.logPagesRead;
        auto predicted = predictCost(m, inputs, false);
        REQUIRE(predicted.has_value());
        CHECK(measured == *predicted);
    }
}
