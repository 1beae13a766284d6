#pragma once

#include <string>
#include <vector>

#include "rgbdnav/keyvalue.hpp"

namespace rgbdnav::cli {

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);
std::string utc_timestamp();

// One per artifact-producing command, written as manifest.txt in the output directory.
struct RunManifest {
    std::string command;
    std::vector<std::string> argv;
    KeyValue config;
    KeyValue seeds;
    std::vector<std::string> inputs;
    std::string output_dir;
    std::string started, finished;

    // Hashes every regular file under output_dir except the manifest itself.
    void write() const;
};

struct LoadedManifest {
    std::string command;
    std::vector<std::string> argv;
    KeyValue config;
    std::vector<std::pair<std::string, std::string>> artifacts;  // relative path, sha256
};
LoadedManifest read_manifest(const std::string& path);

}  // namespace rgbdnav::cli
