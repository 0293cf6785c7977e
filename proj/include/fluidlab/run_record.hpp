#pragma once

// Provenance record written next to every artifact a command produces.

#include "fluidlab/core.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace fluidlab {

inline constexpr const char* kVersion = "0.3.0";

inline std::string sha256_hex(std::string_view data)
{
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
        throw Error("sha256: digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

inline std::string sha256_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in)
        throw ValidationError("cannot open " + p.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return sha256_hex(bytes);
}

/// Digest of a directory: sorted relative paths and their file digests.
inline std::string sha256_tree(const std::filesystem::path& dir)
{
    std::vector<std::string> lines;
    for (const auto& e : std::filesystem::recursive_directory_iterator(dir))
        if (e.is_regular_file())
            lines.push_back(std::filesystem::relative(e.path(), dir).generic_string() + " " + sha256_file(e.path()));
    std::sort(lines.begin(), lines.end());
    std::string all;
    for (const auto& l : lines)
        all += l + "\n";
    return sha256_hex(all);
}

struct RunRecord {
    std::string command;
    std::vector<std::string> argv;
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> inputs;  // path, digest
    std::vector<std::pair<std::string, std::string>> outputs; // path, digest
    double wall_seconds = 0.0;

    void add_input(const std::filesystem::path& p)
    {
        inputs.emplace_back(p.string(), std::filesystem::is_directory(p) ? sha256_tree(p) : sha256_file(p));
    }
    void add_output(const std::filesystem::path& p) { outputs.emplace_back(p.string(), sha256_file(p)); }

    nlohmann::ordered_json to_json() const
    {
        nlohmann::ordered_json j;
        j["format"] = "fluidlab-run-record 1";
        j["command"] = command;
        j["argv"] = argv;
        j["config"] = config;
        j["config_digest"] = sha256_hex(config.dump());
        j["seed"] = seed;
        j["versions"] = {{"fluidlab", kVersion},
                         {"compiler", __VERSION__},
                         {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                       std::to_string(EIGEN_MINOR_VERSION)}};
        auto files = [](const auto& v) {
            nlohmann::ordered_json a = nlohmann::ordered_json::array();
            for (const auto& [p, d] : v)
                a.push_back({{"path", p}, {"sha256", d}});
            return a;
        };
        j["inputs"] = files(inputs);
        j["outputs"] = files(outputs);
        j["wall_seconds"] = wall_seconds;
        return j;
    }

    void write(const std::filesystem::path& path) const
    {
        std::ofstream out(path);
        if (!out)
            throw ValidationError("cannot write " + path.string());
        out << to_json().dump(2) << "\n";
    }
};

/// `results.csv` -> `results.csv.run.json`; directories get `run.json` inside.
inline std::filesystem::path run_record_path(const std::filesystem::path& output)
{
    if (std::filesystem::is_directory(output))
        return output / "run.json";
    return output.string() + ".run.json";
}

} // namespace fluidlab
