// Copyright (c) 2026 the splitkv authors. All rights reserved.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#include "splitkv/bench.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace splitkv::bench {

namespace {

std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdull;
    x ^= x >> 33;
    x *= 0xc4ceb9fe1a85ec53ull;
    x ^= x >> 33;
    return x;
}

std::uint64_t fnv1a(std::uint64_t h, const std::uint8_t* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

json engineConfigJson(const EngineConfig& cfg) {
    return json{{"page_size", cfg.pageSize},
                {"payload_size", cfg.payloadSize},
                {"pool_pages", cfg.poolPages},
                {"updates_per_txn", cfg.updatesPerTxn},
                {"delta_every_updates", cfg.deltaEveryUpdates},
                {"delta_size_threshold", cfg.deltaSizeThreshold},
                {"ckpt_every_updates", cfg.ckptEveryUpdates},
                {"ckpt_sweep_batch", cfg.ckptSweepBatch},
                {"flusher_cadence", cfg.flusherCadence},
                {"flusher_batch", cfg.flusherBatch},
                {"perfect_dpt", cfg.perfectDpt},
                {"costs",
                 {{"sync_read", cfg.costs.syncReadCost},
                  {"seq_page", cfg.costs.seqPageCost},
                  {"block_base", cfg.costs.blockBaseCost},
                  {"write_page", cfg.costs.writePageCost},
                  {"apply", cfg.costs.applyCost}}},
                {"crash",
                 {{"immediate", cfg.crash.immediate},
                  {"after_checkpoints", cfg.crash.afterCheckpoints},
                  {"updates_since_ckpt", cfg.crash.updatesSinceCkpt},
                  {"updates_since_delta", cfg.crash.updatesSinceDelta}}}};
}

json workloadJson(const WorkloadSpec& w) {
    return json{{"rows", w.rowCount},
                {"updates_per_txn", w.updatesPerTxn},
                {"distribution",
                 w.distribution == WorkloadSpec::Dist::Uniform ? "uniform" : "distinct_pages"},
                {"total_updates", w.totalUpdates},
                {"seed", w.seed},
                {"loser_txns", w.loserTxns},
                {"force_tail_at_crash", w.forceTailAtCrash}};
}

} // namespace

void workloadValue(Key key, std::uint64_t version, std::span<std::uint8_t> out) {
    std::uint64_t x = mix64(key * 0x9e3779b97f4a7c15ull + version + 1);
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (i % 8 == 0) x = mix64(x + i);
        out[i] = static_cast<std::uint8_t>(x >> ((i % 8) * 8));
    }
}

std::string StoreInfo::toJson() const {
    return json{{"rows", rows},
                {"leaf_pages", leafPages},
                {"index_pages", indexPages},
                {"height", height},
                {"page_size", pageSize},
                {"payload_size", payloadSize}}
        .dump();
}

StoreInfo StoreInfo::fromJson(const std::string& text) {
    auto j = json::parse(text);
    StoreInfo s;
    s.rows = j.at("rows");
    s.leafPages = j.at("leaf_pages");
    s.indexPages = j.at("index_pages");
    s.height = j.at("height");
    s.pageSize = j.at("page_size");
    s.payloadSize = j.at("payload_size");
    return s;
}

void StoreInfo::save(const std::string& dir) const {
    std::ofstream f(dir + "/store.json");
    f << toJson() << "\n";
}

StoreInfo StoreInfo::load(const std::string& dir) {
    std::ifstream f(dir + "/store.json");
    if (!f) throw FatalLogError("missing store manifest in " + dir);
    std::stringstream ss;
    ss << f.rdbuf();
    return fromJson(ss.str());
}

StoreInfo loadTable(const std::string& dir, const EngineConfig& cfg, const WorkloadSpec& w) {
    fs::create_directories(dir);
    auto stats = Engine::createStore(dir, cfg, w.rowCount, [&](Key k, std::span<std::uint8_t> out) {
        workloadValue(k, 0, out);
    });
    StoreInfo info;
    info.rows = stats.rows;
    info.leafPages = stats.leafPages;
    info.indexPages = stats.indexPages;
    info.height = stats.height;
    info.pageSize = cfg.pageSize;
    info.payloadSize = cfg.payloadSize;
    info.save(dir);
    return info;
}

void copyStore(const std::string& from, const std::string& to) {
    fs::create_directories(to);
    fs::copy_file(EngineConfig::dbFile(from), EngineConfig::dbFile(to),
                  fs::copy_options::overwrite_existing);
    fs::copy_file(EngineConfig::walFile(from), EngineConfig::walFile(to),
                  fs::copy_options::overwrite_existing);
    if (fs::exists(from + "/store.json")) {
        fs::copy_file(from + "/store.json", to + "/store.json",
                      fs::copy_options::overwrite_existing);
    }
}

CrashResult runToCrash(const std::string& dir, const EngineConfig& cfg, const WorkloadSpec& w) {
    Engine e(dir, cfg);
    CrashResult out;
    std::mt19937_64 rng(w.seed);
    const auto geo = e.file().geometry();
    std::vector<std::uint8_t> value(geo.payloadSize);
    std::uint64_t ordinal = 0;
    const std::uint64_t fullLeaves = std::max<std::uint64_t>(1, w.rowCount / geo.leafCapacity());

    auto nextKey = [&]() -> Key {
        if (w.distribution == WorkloadSpec::Dist::DistinctPages) {
            return Key((ordinal % fullLeaves) * geo.leafCapacity());
        }
        return Key(rng() % w.rowCount);
    };

    const std::uint64_t budget =
        w.updateBudget       ? w.updateBudget
        : w.totalUpdates > 0 ? w.totalUpdates
                             : 20 * (cfg.crash.afterCheckpoints + 2) * cfg.ckptEveryUpdates +
                                   1'000'000;

    // A fixed crash point overrides the engine's predicate.
    bool crashNow = w.totalUpdates == 0 && cfg.crash.immediate;
    while (!crashNow && (w.totalUpdates > 0 || !e.crashPending())) {
        if (ordinal >= budget) {
            throw FatalLogError("crash predicate unreachable within the update budget");
        }
        TxnId txn = e.beginTxn();
        std::vector<std::pair<Key, std::uint64_t>> staged;
        bool midCrash = false;
        for (std::uint32_t i = 0; i < w.updatesPerTxn; ++i) {
            if (w.totalUpdates && ordinal >= w.totalUpdates) {
                midCrash = true;
                break;
            }
            Key k = nextKey();
            ++ordinal;
            workloadValue(k, ordinal, value);
            e.executeUpdate(txn, k, value);
            staged.emplace_back(k, ordinal);
        }
        if (midCrash) {
            e.abandonTxn(txn); // in-flight transaction dies with the crash
            crashNow = true;
            break;
        }
        e.commitTxn(txn);
        for (const auto& [k, v] : staged) out.committedVersion[k] = v;
        out.committedUpdates += staged.size();
        if (w.totalUpdates && ordinal >= w.totalUpdates) crashNow = true;
    }

    for (std::uint32_t l = 0; l < w.loserTxns; ++l) {
        TxnId txn = e.beginTxn();
        for (std::uint32_t i = 0; i < w.updatesPerTxn; ++i) {
            Key k = nextKey();
            ++ordinal;
            workloadValue(k, ordinal, value);
            e.executeUpdate(txn, k, value);
        }
        e.abandonTxn(txn);
    }
    if (w.loserTxns > 0 || w.forceTailAtCrash) e.eosl();

    out.updatesExecuted = ordinal;
    out.deltaRecords = e.deltaRecordsWritten();
    out.snap = e.crash();

    std::uint64_t h = 0xcbf29ce484222325ull;
    std::vector<std::uint8_t> payload(geo.payloadSize);
    auto it = out.committedVersion.begin();
    for (Key k = 0; k < w.rowCount; ++k) {
        std::uint64_t version = 0;
        if (it != out.committedVersion.end() && it->first == k) {
            version = it->second;
            ++it;
        }
        workloadValue(k, version, payload);
        h = fnv1a(h, reinterpret_cast<const std::uint8_t*>(&k), 8);
        h = fnv1a(h, payload.data(), payload.size());
    }
    out.oracleDigest = h;
    return out;
}

RecoveryStats recoverCopy(const std::string& crashDir, const std::string& scratchDir,
                          const EngineConfig& cfg, const RecoveryOptions& opts) {
    fs::create_directories(scratchDir);
    copyStore(crashDir, scratchDir);

    PageGeometry geo{cfg.pageSize, cfg.payloadSize};
    PageFile file(EngineConfig::dbFile(scratchDir), geo, false);
    Wal wal(EngineConfig::walFile(scratchDir), cfg.pageSize, false);
    IoClock clock(cfg.costs);
    BufferPool pool(file, clock, cfg.poolPages, cfg.perfectDpt, cfg.deltaSizeThreshold);
    pool.onEosl(wal.stableLsn());
    pool.setWalForce([&](Lsn) { return wal.forceAll(); });
    BTree tree(file, pool);
    tree.setSmoLog([&](const SmoRecord& rec) { return wal.append(rec); });

    Recovery rec(wal, file, pool, tree, clock);
    return rec.run(opts);
}

std::string diffStores(const std::string& dirA, const std::string& dirB, const EngineConfig& cfg,
                       int limit) {
    PageGeometry geo{cfg.pageSize, cfg.payloadSize};
    PageFile fa(EngineConfig::dbFile(dirA), geo, false);
    PageFile fb(EngineConfig::dbFile(dirB), geo, false);
    IoClock ca, cb;
    BufferPool pa(fa, ca, 16), pb(fb, cb, 16);
    BTree ta(fa, pa), tb(fb, pb);

    std::map<Key, std::vector<std::uint8_t>> rowsA;
    ta.visitRows([&](Key k, std::span<const std::uint8_t> v) {
        rowsA[k] = {v.begin(), v.end()};
    });
    std::ostringstream os;
    int shown = 0;
    tb.visitRows([&](Key k, std::span<const std::uint8_t> v) {
        if (shown >= limit) return;
        auto it = rowsA.find(k);
        if (it == rowsA.end()) {
            os << "  key " << k << " present only in B\n";
            ++shown;
        } else if (!std::equal(v.begin(), v.end(), it->second.begin(), it->second.end())) {
            os << "  key " << k << " differs\n";
            ++shown;
        }
    });
    return os.str();
}

RecoverAllResult recoverAll(const std::string& crashDir, const std::string& scratchDir,
                            const EngineConfig& cfg, const std::vector<Method>& methods,
                            RecoveryOptions base) {
    RecoverAllResult out;
    std::vector<std::string> dirs;
    for (Method m : methods) {
        auto opts = base;
        opts.method = m;
        const std::string dir = scratchDir + "/" + methodName(m);
        fs::remove_all(dir);
        out.stats.push_back(recoverCopy(crashDir, dir, cfg, opts));
        dirs.push_back(dir);
    }
    out.digestsEqual = true;
    if (!out.stats.empty()) {
        out.digest = out.stats.front().digest;
        for (std::size_t i = 1; i < out.stats.size(); ++i) {
            if (out.stats[i].digest != out.digest) {
                out.digestsEqual = false;
                std::ostringstream os;
                os << "digest mismatch: " << methodName(methods.front()) << "=" << std::hex
                   << out.digest << " vs " << methodName(methods[i]) << "="
                   << out.stats[i].digest << "\n"
                   << diffStores(dirs.front(), dirs[i], cfg, 10);
                out.mismatchReport = os.str();
            }
        }
    }
    return out;
}

CostInputs measureCostInputs(const std::string& crashDir, const EngineConfig& cfg,
                             Method method, DptMode mode) {
    CostInputs in;
    Wal wal(EngineConfig::walFile(crashDir), cfg.pageSize, false);
    const Lsn bCkptLsn = wal.findRedoScanStart();
    const auto records = wal.scanAll(bCkptLsn);
    in.logPages = logPageSpan(bCkptLsn, wal.stableEndOffset(), wal.pageSize());

    std::unordered_set<Pid> distinct;
    std::uint64_t updates = 0;
    for (const auto& rec : records) {
        if (rec.is<UpdateRecord>()) {
            ++updates;
            distinct.insert(rec.as<UpdateRecord>().pid);
        }
    }
    in.records = updates;
    in.distinctPages = distinct.size();

    if (method == Method::Sql1 || method == Method::Sql2) {
        in.dptSize = sqlAnalysis(records, bCkptLsn).dpt.size();
    } else if (method != Method::Log0) {
        const Lsn seed = rsspSeedFor(records, bCkptLsn);
        auto dc = dcAnalysis(records, seed, mode);
        in.dptSize = dc.dpt.size();
        std::unordered_set<Pid> tailDistinct;
        for (const auto& rec : records) {
            if (!rec.is<UpdateRecord>() || rec.lsn < dc.lastDeltaTcLsn) continue;
            ++in.tailRecords;
            const Pid pid = rec.as<UpdateRecord>().pid;
            if (!dc.dpt.contains(pid)) tailDistinct.insert(pid);
        }
        in.tailDistinctPages = tailDistinct.size();
    }

    // Index page count from the stable file.
    PageGeometry geo{cfg.pageSize, cfg.payloadSize};
    PageFile file(EngineConfig::dbFile(crashDir), geo, false);
    std::vector<std::uint8_t> buf(geo.pageSize);
    for (Pid pid = 1; pid < file.pageCount(); ++pid) {
        file.readPage(pid, buf.data());
        if (Page(buf.data(), geo).kind() == PageKind::Index) ++in.indexPages;
    }
    return in;
}

std::string experimentSpecJson(const ExperimentSpec& spec) {
    json j;
    j["engine"] = engineConfigJson(spec.engine);
    j["workload"] = workloadJson(spec.workload);
    std::vector<std::string> ms;
    for (auto m : spec.methods) ms.emplace_back(methodName(m));
    j["methods"] = ms;
    j["cache_fracs"] = spec.cacheFracs;
    j["ci_multipliers"] = spec.ciMultipliers;
    j["ci_cache_frac"] = spec.ciCacheFrac;
    j["ci_base_interval"] = spec.ciBaseInterval;
    j["dpt_mode"] = spec.dptMode == DptMode::Standard ? "standard"
                    : spec.dptMode == DptMode::Perfect ? "perfect"
                                                       : "reduced";
    return j.dump();
}

std::string SweepRow::csvHeader() {
    return "experiment,cache_frac,pool_pages,ci_mult," + RecoveryStats::csvHeader() +
           ",predicted_cost,prediction_err_pct,dirty_at_crash";
}

std::string SweepRow::csvRow() const {
    std::ostringstream os;
    os << experiment << ',' << cacheFrac << ',' << poolPages << ',' << ciMult << ','
       << stats.csvRow() << ',';
    if (predicted) {
        os << *predicted << ',' << predictionErrPct;
    } else {
        os << "n/a,n/a";
    }
    os << ',' << dirtyAtCrash;
    return os.str();
}

namespace {

struct CellOutcome {
    bool ok = true;
};

CellOutcome runCell(const std::string& baseDir, const std::string& cellDir,
                    const ExperimentSpec& spec, const EngineConfig& cfg,
                    const std::string& tag, double frac, std::uint32_t ciMult,
                    std::ostream& out, std::ostream* progress) {
    CellOutcome outcome;
    fs::remove_all(cellDir);
    copyStore(baseDir, cellDir);
    auto crash = runToCrash(cellDir, cfg, spec.workload);

    RecoveryOptions base;
    base.dptMode = spec.dptMode;
    auto ra = recoverAll(cellDir, cellDir + "/rec", cfg, spec.methods, base);
    if (!ra.digestsEqual || ra.digest != crash.oracleDigest) {
        outcome.ok = false;
        if (progress) {
            *progress << "MISMATCH in " << tag << ": " << ra.mismatchReport
                      << (ra.digest != crash.oracleDigest ? " (oracle digest differs)" : "")
                      << "\n";
        }
    }

    for (std::size_t i = 0; i < spec.methods.size(); ++i) {
        SweepRow row;
        row.experiment = tag;
        row.cacheFrac = frac;
        row.poolPages = cfg.poolPages;
        row.ciMult = ciMult;
        row.stats = ra.stats[i];
        auto inputs = measureCostInputs(cellDir, cfg, spec.methods[i], spec.dptMode);
        row.predicted = predictCost(spec.methods[i], inputs, true);
        if (row.predicted && *row.predicted > 0) {
            const auto measured = row.stats.dataPagesFetched + row.stats.indexPagesFetched +
                                  row.stats.logPagesRead;
            row.predictionErrPct =
                100.0 * (double(measured) - double(*row.predicted)) / double(*row.predicted);
        }
        row.dirtyAtCrash = crash.snap.truth.dirtyFirstLsn.size();
        out << row.csvRow() << "\n";
        if (progress) {
            *progress << tag << " " << methodName(spec.methods[i]) << ": fetches="
                      << row.stats.dataPagesFetched << " stalls=" << row.stats.syncStalls
                      << " dpt=" << row.stats.dptSize << " time=" << row.stats.simTime << "\n";
        }
    }
    return outcome;
}

} // namespace

bool sweep(const std::string& baseDir, const std::string& workDir, const ExperimentSpec& spec,
           std::ostream& out, std::ostream* progress) {
    const auto info = StoreInfo::load(baseDir);
    const Pid totalPages = info.leafPages + info.indexPages + 1;

    out << "# splitkv sweep report, schema v1\n";
    out << "# spec: " << experimentSpecJson(spec) << "\n";
    out << "# store: " << info.toJson() << "\n";
    out << SweepRow::csvHeader() << "\n";

    bool ok = true;
    for (double frac : spec.cacheFracs) {
        auto cfg = spec.engine;
        cfg.poolPages = std::max<std::uint32_t>(16, Pid(frac * totalPages));
        std::ostringstream tag;
        tag << "cache-" << frac;
        ok &= runCell(baseDir, workDir + "/" + tag.str(), spec, cfg, tag.str(), frac, 1, out,
                      progress)
                  .ok;
    }

    for (std::uint32_t mult : spec.ciMultipliers) {
        auto cfg = spec.engine;
        cfg.poolPages = std::max<std::uint32_t>(16, Pid(spec.ciCacheFrac * totalPages));
        cfg.ckptEveryUpdates = spec.ciBaseInterval * mult;
        cfg.crash.updatesSinceCkpt = cfg.ckptEveryUpdates - cfg.updatesPerTxn;
        cfg.crash.updatesSinceDelta = cfg.deltaEveryUpdates - cfg.updatesPerTxn;
        std::ostringstream tag;
        tag << "ci-x" << mult;
        ok &= runCell(baseDir, workDir + "/" + tag.str(), spec, cfg, tag.str(), spec.ciCacheFrac,
                      mult, out, progress)
                  .ok;
    }
    return ok;
}

} // namespace splitkv::bench
