// Copyright (c) 2026 the splitkv authors. All rights reserved.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#pragma once

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <vector>

namespace splitkv::serde {

// Little-endian fixed-width encoding for all on-disk fields.

template <typename T>
inline void putInt(std::vector<std::uint8_t>& out, T v) {
    static_assert(std::is_unsigned_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

inline void putBytes(std::vector<std::uint8_t>& out, const std::uint8_t* p, std::size_t n) {
    out.insert(out.end(), p, p + n);
}

class Reader {
public:
    Reader(const std::uint8_t* data, std::size_t size) : m_p(data), m_end(data + size) {}

    template <typename T>
    T getInt() {
        static_assert(std::is_unsigned_v<T>);
        need(sizeof(T));
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            v |= static_cast<T>(m_p[i]) << (8 * i);
        }
        m_p += sizeof(T);
        return v;
    }

    std::vector<std::uint8_t> getBytes(std::size_t n) {
        need(n);
        std::vector<std::uint8_t> v(m_p, m_p + n);
        m_p += n;
        return v;
    }

    std::size_t remaining() const { return static_cast<std::size_t>(m_end - m_p); }

private:
    void need(std::size_t n) const {
        if (remaining() < n) throw std::runtime_error("log record decode: truncated payload");
    }

    const std::uint8_t* m_p;
    const std::uint8_t* m_end;
};

} // namespace splitkv::serde
