// Copyright (c) 2026 the splitkv authors. All rights reserved.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "splitkv/engine.hpp"
#include "splitkv/recovery.hpp"

namespace splitkv::bench {

struct WorkloadSpec {
    std::uint64_t rowCount = 800'000;
    std::uint32_t updatesPerTxn = 10;
    enum class Dist { Uniform, DistinctPages } distribution = Dist::Uniform;
    // 0 = run until the engine's crash predicate fires; otherwise crash after
    // exactly this many updates (possibly mid-transaction).
    std::uint64_t totalUpdates = 0;
    std::uint64_t seed = 1;
    std::uint32_t loserTxns = 0;     // final transactions left uncommitted
    bool forceTailAtCrash = false;   // force the log before crashing
    std::uint64_t updateBudget = 0;  // 0 = 20x the expected crash point
};

struct ExperimentSpec {
    EngineConfig engine;
    WorkloadSpec workload;
    std::vector<Method> methods{Method::Log0, Method::Log1, Method::Log2, Method::Sql1,
                                Method::Sql2};
    std::vector<double> cacheFracs{0.02, 0.05, 0.10, 0.25, 0.60};
    std::vector<std::uint32_t> ciMultipliers{1, 5, 10};
    double ciCacheFrac = 0.10;
    std::uint64_t ciBaseInterval = 600;
    DptMode dptMode = DptMode::Standard;
};

// Deterministic row value: version 0 is the loaded value, version n the value
// written by the n-th update overall.
void workloadValue(Key key, std::uint64_t version, std::span<std::uint8_t> out);

// Store manifest written at load time and embedded in reports.
struct StoreInfo {
    std::uint64_t rows = 0;
    Pid leafPages = 0;
    Pid indexPages = 0;
    std::uint32_t height = 0;
    std::uint32_t pageSize = 0;
    std::uint32_t payloadSize = 0;

    std::string toJson() const;
    static StoreInfo fromJson(const std::string& text);
    static StoreInfo load(const std::string& dir);
    void save(const std::string& dir) const;
};

// Bulk-loads the single two-attribute table in key order and writes the
// initial completed checkpoint plus the store manifest.
StoreInfo loadTable(const std::string& dir, const EngineConfig& cfg, const WorkloadSpec& w);

struct CrashResult {
    CrashSnapshot snap;
    std::uint64_t updatesExecuted = 0;
    std::uint64_t committedUpdates = 0;
    std::uint64_t deltaRecords = 0;
    std::uint64_t oracleDigest = 0; // committed-replay oracle over all rows
    std::map<Key, std::uint64_t> committedVersion; // touched keys only
};

// Executes the seeded workload on the loaded store until the crash point,
// maintaining the committed-replay oracle alongside. The store directory is
// left holding exactly the stable files.
CrashResult runToCrash(const std::string& dir, const EngineConfig& cfg, const WorkloadSpec& w);

// Copies the crashed store into scratchDir and recovers it with one method.
RecoveryStats recoverCopy(const std::string& crashDir, const std::string& scratchDir,
                          const EngineConfig& cfg, const RecoveryOptions& opts);

struct RecoverAllResult {
    std::vector<RecoveryStats> stats;
    bool digestsEqual = false;
    std::uint64_t digest = 0;
    std::string mismatchReport;
};

// Recovers an independent copy per method and checks the state digests agree.
RecoverAllResult recoverAll(const std::string& crashDir, const std::string& scratchDir,
                            const EngineConfig& cfg, const std::vector<Method>& methods,
                            RecoveryOptions base = {});

// Measured inputs for the cost model of one recovery, derived from the
// stable log and the analysis structures only.
CostInputs measureCostInputs(const std::string& crashDir, const EngineConfig& cfg,
                             Method method, DptMode mode);

struct SweepRow {
    std::string experiment;
    double cacheFrac = 0;
    std::uint32_t poolPages = 0;
    std::uint32_t ciMult = 1;
    RecoveryStats stats;
    std::optional<std::uint64_t> predicted;
    double predictionErrPct = 0;
    std::uint64_t dirtyAtCrash = 0;

    static std::string csvHeader();
    std::string csvRow() const;
};

// Cache-fraction sweep and checkpoint-interval sweep. Each cell re-runs the
// workload on a fresh copy of the loaded store; every method recovers from
// identical stable files. Rows are appended to out; the report header embeds
// the spec. Returns false when any digest mismatch happened.
bool sweep(const std::string& baseDir, const std::string& workDir, const ExperimentSpec& spec,
           std::ostream& out, std::ostream* progress = nullptr);

std::string experimentSpecJson(const ExperimentSpec& spec);

// Copies data.db and wal.log from one store directory to another.
void copyStore(const std::string& from, const std::string& to);

} // namespace splitkv::bench
