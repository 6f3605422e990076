// Run manifests: enough recorded state to reproduce a CLI run bit-exactly.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace swflow {

struct RunManifest {
    std::string version;
    std::string command;                         // subcommand name
    std::vector<std::string> argv;               // full invocation
    std::map<std::string, std::string> config;   // resolved settings
    std::uint64_t seed = 0;
    std::map<std::string, std::string> inputs;   // path -> content hash
    std::map<std::string, std::string> outputs;  // deterministic artifacts, path -> content hash
    std::vector<std::string> logs;               // timing-bearing artifacts
    double wall_ms = 0.0;

    std::string to_json() const;
    static RunManifest from_json_file(const std::string& path);
    void write(const std::string& path) const;  // atomic
};

}  // namespace swflow
