// Copyright (c) 2026 siplab contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "siplab/grid.hpp"

namespace siplab::io {

/// Common on-disk container: a small JSON manifest followed by the flat
/// 64-bit payloads of each named grid, in manifest order. Used for
/// parameter checkpoints and field snapshots; round trips are bit-exact.
struct Container {
    std::vector<std::pair<std::string, Grid>> entries;
    nlohmann::json meta;

    const Grid& find(const std::string& name) const {
        for (auto& [n, g] : entries)
            if (n == name) return g;
        throw std::runtime_error("container: no entry named '" + name + "'");
    }
};

inline void save_container(const std::string& path, const Container& c) {
    nlohmann::json header;
    header["tensors"] = nlohmann::json::array();
    for (auto& [name, g] : c.entries) {
        nlohmann::json t;
        t["name"] = name;
        t["shape"] = g.shape;
        header["tensors"].push_back(t);
    }
    if (!c.meta.is_null()) header["meta"] = c.meta;
    std::string hs = header.dump();

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    const char magic[4] = {'S', 'I', 'P', 'L'};
    f.write(magic, 4);
    auto hlen = static_cast<std::uint32_t>(hs.size());
    f.write(reinterpret_cast<const char*>(&hlen), 4);
    f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    for (auto& [name, g] : c.entries)
        f.write(reinterpret_cast<const char*>(g.data.data()),
                static_cast<std::streamsize>(g.data.size() * sizeof(double)));
    if (!f) throw std::runtime_error("write failed: " + path);
}

inline Container load_container(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "SIPL", 4) != 0) throw std::runtime_error("not a siplab container: " + path);
    std::uint32_t hlen = 0;
    f.read(reinterpret_cast<char*>(&hlen), 4);
    std::string hs(hlen, '\0');
    f.read(hs.data(), hlen);
    if (!f) throw std::runtime_error("truncated container header: " + path);
    nlohmann::json header = nlohmann::json::parse(hs);

    Container c;
    if (header.contains("meta")) c.meta = header["meta"];
    for (auto& t : header["tensors"]) {
        Shape shape = t["shape"].get<Shape>();
        Grid g = Grid::zeros(shape);
        f.read(reinterpret_cast<char*>(g.data.data()),
               static_cast<std::streamsize>(g.data.size() * sizeof(double)));
        if (!f) throw std::runtime_error("truncated container payload: " + path);
        c.entries.emplace_back(t["name"].get<std::string>(), std::move(g));
    }
    return c;
}

inline void save_grid_snapshot(const std::string& path, const Grid& g) {
    Container c;
    c.entries.emplace_back("grid", g);
    save_container(path, c);
}

inline Grid load_grid_snapshot(const std::string& path) {
    return load_container(path).find("grid");
}

}  // namespace siplab::io
