// Copyright (c) 2026 the splitkv authors. All rights reserved.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace splitkv {

// Log sequence number: byte offset of a record's start within the log file.
// Lsn 0 is reserved as "null / none".
using Lsn = std::uint64_t;
constexpr Lsn kNullLsn = 0;

// Page number within the single database file. Page 0 is the file header.
using Pid = std::uint32_t;
constexpr Pid kNullPid = 0;

using TxnId = std::uint64_t;
using TableId = std::uint32_t;
using Key = std::uint64_t;

constexpr std::uint32_t kDefaultPageSize = 8192;

class FatalLogError : public std::runtime_error {
public:
    explicit FatalLogError(const std::string& what) : std::runtime_error(what) {}
};

class ScanError : public std::runtime_error {
public:
    explicit ScanError(const std::string& what) : std::runtime_error(what) {}
};

class PageFaultError : public std::runtime_error {
public:
    explicit PageFaultError(const std::string& what) : std::runtime_error(what) {}
};

class IntegrityError : public std::runtime_error {
public:
    explicit IntegrityError(const std::string& what) : std::runtime_error(what) {}
};

class ContractError : public std::logic_error {
public:
    explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

} // namespace splitkv
