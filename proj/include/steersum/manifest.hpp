#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "steersum/errors.hpp"
#include "steersum/hash.hpp"

namespace steersum {

/// Reproducibility record written next to every CLI run's outputs. The
/// stored argv always carries the resolved seed, so replaying the command
/// in a fresh directory must produce outputs with the recorded hashes.
struct RunManifest {
    std::string command;
    std::vector<std::string> argv;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::map<std::string, std::string> input_hashes;
    std::map<std::string, std::string> output_hashes;

    nlohmann::json to_json() const {
        return nlohmann::json{{"command", command},     {"argv", argv},
                              {"seed", seed},           {"config_hash", config_hash},
                              {"inputs", input_hashes}, {"outputs", output_hashes}};
    }

    static RunManifest from_json(const nlohmann::json& j) {
        RunManifest m;
        m.command = j.at("command").get<std::string>();
        m.argv = j.at("argv").get<std::vector<std::string>>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.config_hash = j.at("config_hash").get<std::string>();
        m.input_hashes = j.at("inputs").get<std::map<std::string, std::string>>();
        m.output_hashes = j.at("outputs").get<std::map<std::string, std::string>>();
        return m;
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw DataError("cannot write manifest: " + path);
        out << to_json().dump(2) << "\n";
    }

    static RunManifest load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot read manifest: " + path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("manifest " + path + ": " + e.what());
        }
        return from_json(j);
    }
};

}  // namespace steersum
