#ifndef SSDDR_MANIFEST_HPP
#define SSDDR_MANIFEST_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ssddr {

// FNV-1a 64-bit hash of a file's bytes.
std::uint64_t fnv1a_file(const std::filesystem::path& path);

// "fnv1a:<16 hex digits>" for manifests.
std::string file_hash(const std::filesystem::path& path);

// Record of one run: what was executed, with which inputs (by content hash)
// and settings, and what it produced.  Deliberately contains no timestamps
// so that reruns of the same command are byte-identical.
struct Manifest {
    std::string command;
    std::optional<std::uint64_t> seed;
    std::optional<double> lambda;
    std::vector<std::pair<std::string, std::string>> inputs;  // name -> hash
    std::vector<std::string> outputs;
    std::vector<std::pair<std::string, std::string>> notes;
};

void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

}  // namespace ssddr

#endif
