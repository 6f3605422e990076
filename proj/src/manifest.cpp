#include "swflow/manifest.hpp"

#include <json.hpp>

#include "swflow/csvio.hpp"
#include "swflow/errors.hpp"

namespace swflow {

using nlohmann::json;

std::string RunManifest::to_json() const {
    json j;
    j["version"] = version;
    j["command"] = command;
    j["argv"] = argv;
    j["config"] = config;
    j["seed"] = seed;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    j["logs"] = logs;
    j["wall_ms"] = wall_ms;
    return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json_file(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw input_error("bad manifest " + path + ": " + e.what());
    }
    RunManifest m;
    m.version = j.value("version", "");
    m.command = j.value("command", "");
    m.argv = j.value("argv", std::vector<std::string>{});
    m.config = j.value("config", std::map<std::string, std::string>{});
    m.seed = j.value("seed", std::uint64_t{0});
    m.inputs = j.value("inputs", std::map<std::string, std::string>{});
    m.outputs = j.value("outputs", std::map<std::string, std::string>{});
    m.logs = j.value("logs", std::vector<std::string>{});
    m.wall_ms = j.value("wall_ms", 0.0);
    return m;
}

void RunManifest::write(const std::string& path) const { write_file_atomic(path, to_json()); }

}  // namespace swflow
