#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "../core/errors.hpp"

namespace bsl {

// =====================================================================
// Dataset manifest: a CSV with header "path,label,split". Paths are
// stored relative to the manifest's directory; label is 0 (real) or
// 1 (fake). Paths must not contain commas.
// =====================================================================

struct ManifestRow {
    std::string path;
    int label = 0;
    std::string split;
};

struct Manifest {
    std::filesystem::path root; ///< directory image paths resolve against
    std::vector<ManifestRow> rows;

    void validate() const {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const ManifestRow& r = rows[i];
            if (r.path.empty())
                throw validation_error("manifest row " + std::to_string(i) + ": empty path");
            if (r.label != 0 && r.label != 1)
                throw validation_error("manifest row " + std::to_string(i) + ": label must be 0 or 1, got " +
                                       std::to_string(r.label));
            if (r.split.empty())
                throw validation_error("manifest row " + std::to_string(i) + ": empty split");
        }
    }

    std::filesystem::path resolve(std::size_t i) const { return root / rows[i].path; }

    std::vector<std::size_t> split_indices(const std::string& split) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < rows.size(); ++i)
            if (rows[i].split == split) out.push_back(i);
        return out;
    }

    std::vector<std::string> split_names() const {
        std::vector<std::string> names;
        for (const ManifestRow& r : rows)
            if (std::find(names.begin(), names.end(), r.split) == names.end())
                names.push_back(r.split);
        return names;
    }

    static Manifest load(const std::filesystem::path& file) {
        std::ifstream in(file);
        if (!in)
            throw validation_error("manifest: cannot open '" + file.string() + "'");
        Manifest m;
        m.root = file.has_parent_path() ? file.parent_path() : std::filesystem::path(".");
        std::string line;
        if (!std::getline(in, line))
            throw validation_error("manifest: empty file '" + file.string() + "'");
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line != "path,label,split")
            throw validation_error("manifest: expected header 'path,label,split', got '" + line + "'");
        std::size_t lineno = 1;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            const std::size_t c1 = line.find(',');
            const std::size_t c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
            if (c1 == std::string::npos || c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos)
                throw validation_error("manifest: line " + std::to_string(lineno) + ": expected 3 fields");
            ManifestRow r;
            r.path = line.substr(0, c1);
            const std::string label_str = line.substr(c1 + 1, c2 - c1 - 1);
            try {
                std::size_t used = 0;
                r.label = std::stoi(label_str, &used);
                if (used != label_str.size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw validation_error("manifest: line " + std::to_string(lineno) + ": bad label '" + label_str + "'");
            }
            r.split = line.substr(c2 + 1);
            m.rows.push_back(std::move(r));
        }
        m.validate();
        return m;
    }

    void save(const std::filesystem::path& file) const {
        validate();
        std::ofstream out(file);
        if (!out)
            throw validation_error("manifest: cannot write '" + file.string() + "'");
        out << "path,label,split\n";
        for (const ManifestRow& r : rows) {
            if (r.path.find(',') != std::string::npos)
                throw validation_error("manifest: path contains comma: '" + r.path + "'");
            out << r.path << ',' << r.label << ',' << r.split << '\n';
        }
        if (!out)
            throw validation_error("manifest: write failed for '" + file.string() + "'");
    }
};

} // namespace bsl
