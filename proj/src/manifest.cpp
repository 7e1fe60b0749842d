#include "ssddr/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "ssddr/version.hpp"

namespace ssddr {

std::uint64_t fnv1a_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("fnv1a_file: cannot open " + path.string());
    std::uint64_t hash = 1469598103934665603ULL;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            hash ^= static_cast<unsigned char>(buf[i]);
            hash *= 1099511628211ULL;
        }
        if (got < static_cast<std::streamsize>(sizeof(buf))) break;
    }
    return hash;
}

std::string file_hash(const std::filesystem::path& path) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fnv1a:%016llx",
                  static_cast<unsigned long long>(fnv1a_file(path)));
    return buf;
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    j["tool"] = "ssddr";
    j["version"] = SSDDR_VERSION;
    j["command"] = manifest.command;
    if (manifest.seed.has_value()) j["seed"] = *manifest.seed;
    if (manifest.lambda.has_value()) j["lambda"] = *manifest.lambda;
    nlohmann::ordered_json inputs = nlohmann::ordered_json::object();
    for (const auto& [name, hash] : manifest.inputs) inputs[name] = hash;
    j["inputs"] = inputs;
    j["outputs"] = manifest.outputs;
    if (!manifest.notes.empty()) {
        nlohmann::ordered_json notes = nlohmann::ordered_json::object();
        for (const auto& [key, value] : manifest.notes) notes[key] = value;
        j["notes"] = notes;
    }
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("write_manifest: cannot open " + path.string() +
                                 " for writing");
    out << j.dump(2) << "\n";
}

}  // namespace ssddr
