#include "manifest.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <sstream>

#include "rgbdnav/binary_io.hpp"
#include "rgbdnav/error.hpp"

namespace rgbdnav::cli {

namespace fs = std::filesystem;

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw InvalidState("SHA-256 digest failed");
    }
    std::string hex;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", digest[i]);
        hex += buf;
    }
    return hex;
}

std::string sha256_file(const std::string& path) { return sha256_hex(read_file(path)); }

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

namespace {

// Arguments are stored one per line, so quoting is never needed.
std::string escape(const std::string& s) {
    std::string out;
    for (const char c : s) {
        if (c == '\\') {
            out += "\\\\";
        } else if (c == '\n') {
            out += "\\n";
        } else {
            out += c;
        }
    }
    return out;
}

std::string unescape(const std::string& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\' && i + 1 < s.size()) {
            out += s[i + 1] == 'n' ? '\n' : s[i + 1];
            ++i;
        } else {
            out += s[i];
        }
    }
    return out;
}

}  // namespace

void RunManifest::write() const {
    std::vector<std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(output_dir)) {
        if (!entry.is_regular_file()) continue;
        const auto rel = fs::relative(entry.path(), output_dir).generic_string();
        if (rel == "manifest.txt") continue;
        files.push_back(rel);
    }
    std::sort(files.begin(), files.end());
    std::ostringstream os;
    os << "rgbdnav-manifest 1\n";
    os << "command " << command << '\n';
    for (const auto& a : argv) os << "arg " << escape(a) << '\n';
    for (const auto& in : inputs) os << "input " << escape(in) << '\n';
    os << "started " << started << '\n' << "finished " << finished << '\n';
    for (const auto& [k, v] : seeds.entries()) os << "seed " << k << ' ' << v << '\n';
    for (const auto& [k, v] : config.entries()) os << "config " << k << ' ' << v << '\n';
    for (const auto& f : files) os << "artifact " << sha256_file((fs::path(output_dir) / f).string()) << ' ' << f << '\n';
    write_file((fs::path(output_dir) / "manifest.txt").string(), os.str());
}

LoadedManifest read_manifest(const std::string& path) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line) || line != "rgbdnav-manifest 1") throw MalformedHeader(path + ": not a run manifest");
    LoadedManifest m;
    while (std::getline(in, line)) {
        const auto sp = line.find(' ');
        const std::string key = line.substr(0, sp);
        const std::string rest = sp == std::string::npos ? "" : line.substr(sp + 1);
        if (key == "command") {
            m.command = rest;
        } else if (key == "arg") {
            m.argv.push_back(unescape(rest));
        } else if (key == "config") {
            const auto sp2 = rest.find(' ');
            if (sp2 == std::string::npos) throw MalformedHeader(path + ": bad config line");
            m.config.set(rest.substr(0, sp2), rest.substr(sp2 + 1));
        } else if (key == "artifact") {
            const auto sp2 = rest.find(' ');
            if (sp2 == std::string::npos) throw MalformedHeader(path + ": bad artifact line");
            m.artifacts.emplace_back(rest.substr(sp2 + 1), rest.substr(0, sp2));
        }
    }
    if (m.command.empty() || m.argv.empty()) throw MalformedHeader(path + ": manifest lacks a command");
    return m;
}

}  // namespace rgbdnav::cli
