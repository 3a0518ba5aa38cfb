#pragma once

#include <bit>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "../core/errors.hpp"
#include "../core/tensor.hpp"

namespace bsl {

// =====================================================================
// Checkpoint archive: one file holding a JSON manifest plus raw float64
// tensor payloads, bit-exact on round trip.
//
//   bytes 0..7    magic "BSLARCH1"
//   bytes 8..15   manifest length (uint64, little endian)
//   manifest      UTF-8 JSON: format_version, run_config, step,
//                 best_metric, tensor directory (name, shape, offset)
//   payload       concatenated float64 arrays, little endian
// =====================================================================

static_assert(std::endian::native == std::endian::little,
              "checkpoint archives assume a little-endian host");

struct TensorEntry {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> data;

    std::size_t count() const {
        std::size_t n = 1;
        for (const std::size_t d : shape) n *= d;
        return n;
    }
};

struct Checkpoint {
    static constexpr std::uint32_t format_version = 1;
    static constexpr char magic[9] = "BSLARCH1";

    nlohmann::json run_config;
    std::uint64_t step = 0;
    double best_metric = std::numeric_limits<double>::quiet_NaN(); ///< NaN = none yet
    std::vector<TensorEntry> tensors;

    void add(const std::string& name, const DTensor& t) {
        TensorEntry e;
        e.name = name;
        e.shape = t.shape();
        e.data.assign(t.data(), t.data() + t.numel());
        tensors.push_back(std::move(e));
    }

    void add_scalar(const std::string& name, double v) {
        tensors.push_back({name, {1}, {v}});
    }

    const TensorEntry* find(const std::string& name) const {
        for (const TensorEntry& e : tensors)
            if (e.name == name) return &e;
        return nullptr;
    }

    const TensorEntry& require(const std::string& name) const {
        const TensorEntry* e = find(name);
        if (!e) throw config_error("checkpoint: missing tensor '" + name + "'");
        return *e;
    }

    void save(const std::filesystem::path& file) const {
        nlohmann::json dir = nlohmann::json::array();
        std::size_t offset = 0;
        for (const TensorEntry& e : tensors) {
            if (e.data.size() != e.count())
                throw structural_error("checkpoint: tensor '" + e.name + "' size mismatch");
            dir.push_back({{"name", e.name}, {"shape", e.shape}, {"offset", offset}});
            offset += e.data.size();
        }
        nlohmann::json manifest = {
            {"format_version", format_version},
            {"run_config", run_config},
            {"step", step},
            {"tensors", dir},
        };
        if (std::isnan(best_metric)) manifest["best_metric"] = nullptr;
        else manifest["best_metric"] = best_metric;

        const std::string mtext = manifest.dump();
        std::ofstream out(file, std::ios::binary);
        if (!out) throw validation_error("checkpoint: cannot write '" + file.string() + "'");
        out.write(magic, 8);
        const std::uint64_t mlen = mtext.size();
        out.write(reinterpret_cast<const char*>(&mlen), 8);
        out.write(mtext.data(), static_cast<std::streamsize>(mtext.size()));
        for (const TensorEntry& e : tensors)
            out.write(reinterpret_cast<const char*>(e.data.data()),
                      static_cast<std::streamsize>(e.data.size() * sizeof(double)));
        if (!out) throw validation_error("checkpoint: write failed for '" + file.string() + "'");
    }

    static Checkpoint load(const std::filesystem::path& file) {
        std::ifstream in(file, std::ios::binary);
        if (!in) throw validation_error("checkpoint: cannot open '" + file.string() + "'");
        char got_magic[8];
        std::uint64_t mlen = 0;
        in.read(got_magic, 8);
        in.read(reinterpret_cast<char*>(&mlen), 8);
        if (!in || std::memcmp(got_magic, magic, 8) != 0)
            throw validation_error("checkpoint: '" + file.string() + "' is not a BSLARCH1 archive");
        std::string mtext(mlen, '\0');
        in.read(mtext.data(), static_cast<std::streamsize>(mlen));
        if (!in) throw validation_error("checkpoint: truncated manifest in '" + file.string() + "'");

        nlohmann::json manifest;
        try {
            manifest = nlohmann::json::parse(mtext);
        } catch (const nlohmann::json::exception& e) {
            throw validation_error(std::string("checkpoint: bad manifest: ") + e.what());
        }
        if (manifest.value("format_version", 0u) != format_version)
            throw validation_error("checkpoint: unsupported format_version");

        Checkpoint c;
        c.run_config = manifest.at("run_config");
        c.step = manifest.at("step").get<std::uint64_t>();
        if (manifest.contains("best_metric") && !manifest.at("best_metric").is_null())
            c.best_metric = manifest.at("best_metric").get<double>();
        for (const nlohmann::json& d : manifest.at("tensors")) {
            TensorEntry e;
            e.name = d.at("name").get<std::string>();
            e.shape = d.at("shape").get<std::vector<std::size_t>>();
            e.data.resize(e.count());
            c.tensors.push_back(std::move(e));
        }
        for (TensorEntry& e : c.tensors) {
            in.read(reinterpret_cast<char*>(e.data.data()),
                    static_cast<std::streamsize>(e.data.size() * sizeof(double)));
            if (!in)
                throw validation_error("checkpoint: truncated payload in '" + file.string() + "'");
        }
        return c;
    }
};

} // namespace bsl
