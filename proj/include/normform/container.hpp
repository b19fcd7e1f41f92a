/*
 Copyright 2026 The normform Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#ifndef NORMFORM_CONTAINER_HPP
#define NORMFORM_CONTAINER_HPP

#include "normform/core.hpp"

#include <json.hpp>

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace normform {

using json = nlohmann::json;

static_assert(std::endian::native == std::endian::little, "container payloads assume a little-endian host");

// File layout:
//   4 bytes   magic ("NFDS" dataset, "NFCK" checkpoint, "NFPB" POD basis)
//   4 bytes   uint32 LE format version
//   8 bytes   uint64 LE header length
//   header    UTF-8 JSON; "arrays" lists {name, rows, cols, offset}
//   payload   float64 LE arrays, column-major, offsets relative to payload start

inline constexpr std::uint32_t kContainerVersion = 1;

struct Container {
    std::string magic = "NFDS";
    json header = json::object();
    std::vector<std::pair<std::string, Matrix>> arrays;

    void add(std::string name, Matrix m) { arrays.emplace_back(std::move(name), std::move(m)); }

    const Matrix& get(const std::string& name) const {
        for (const auto& [n, m] : arrays)
            if (n == name) return m;
        throw IoError("container has no array '" + name + "'");
    }

    bool has(const std::string& name) const {
        for (const auto& a : arrays)
            if (a.first == name) return true;
        return false;
    }
};

inline std::string serialize(const Container& c) {
    require(c.magic.size() == 4, "container magic must be 4 bytes");
    json header = c.header;
    json list = json::array();
    std::uint64_t offset = 0;
    for (const auto& [name, m] : c.arrays) {
        list.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}, {"offset", offset}});
        offset += static_cast<std::uint64_t>(m.size()) * sizeof(double);
    }
    header["arrays"] = list;
    const std::string text = header.dump();

    std::string out;
    out.reserve(16 + text.size() + offset);
    out.append(c.magic);
    const std::uint32_t version = kContainerVersion;
    out.append(reinterpret_cast<const char*>(&version), 4);
    const std::uint64_t hlen = text.size();
    out.append(reinterpret_cast<const char*>(&hlen), 8);
    out.append(text);
    for (const auto& [name, m] : c.arrays)
        out.append(reinterpret_cast<const char*>(m.data()), static_cast<std::size_t>(m.size()) * sizeof(double));
    return out;
}

inline Container deserialize(const std::string& bytes, const std::string& expected_magic = "") {
    if (bytes.size() < 16) throw IoError("container: file too short");
    Container c;
    c.magic = bytes.substr(0, 4);
    if (!expected_magic.empty() && c.magic != expected_magic)
        throw IoError("container: expected magic " + expected_magic + ", found " + c.magic);
    std::uint32_t version = 0;
    std::memcpy(&version, bytes.data() + 4, 4);
    if (version != kContainerVersion) throw IoError("container: unsupported version " + std::to_string(version));
    std::uint64_t hlen = 0;
    std::memcpy(&hlen, bytes.data() + 8, 8);
    if (16 + hlen > bytes.size()) throw IoError("container: truncated header");
    try {
        c.header = json::parse(bytes.substr(16, hlen));
    } catch (const json::exception& e) {
        throw IoError(std::string("container: malformed header: ") + e.what());
    }
    const std::size_t base = 16 + hlen;
    for (const auto& a : c.header.at("arrays")) {
        const long rows = a.at("rows").get<long>();
        const long cols = a.at("cols").get<long>();
        const std::uint64_t off = a.at("offset").get<std::uint64_t>();
        const std::uint64_t n = static_cast<std::uint64_t>(rows) * static_cast<std::uint64_t>(cols);
        if (rows < 0 || cols < 0 || base + off + n * sizeof(double) > bytes.size())
            throw IoError("container: truncated payload for array " + a.at("name").get<std::string>());
        Matrix m(rows, cols);
        if (n) std::memcpy(m.data(), bytes.data() + base + off, n * sizeof(double));
        c.arrays.emplace_back(a.at("name").get<std::string>(), std::move(m));
    }
    c.header.erase("arrays");
    return c;
}

inline void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("failed writing '" + path + "'");
}

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline void write_container(const std::string& path, const Container& c) { write_file(path, serialize(c)); }

inline Container read_container(const std::string& path, const std::string& expected_magic = "") {
    return deserialize(read_file(path), expected_magic);
}

/// 64-bit FNV-1a as 16 hex digits.
inline std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : data) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Hash of a JSON document in canonical (sorted-key) form.
inline std::string json_hash(const json& j) { return fnv1a_hex(j.dump()); }

}  // namespace normform

#endif  // NORMFORM_CONTAINER_HPP
