#include "rgbdnav/keyvalue.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "rgbdnav/error.hpp"

namespace rgbdnav {
namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

KeyValue KeyValue::parse(std::string_view text) {
    KeyValue kv;
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);

        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected key=value, got '" +
                              std::string(line) + "'");
        }
        const auto key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
        kv.entries_[std::string(key)] = std::string(trim(line.substr(eq + 1)));
    }
    return kv;
}

KeyValue KeyValue::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string KeyValue::to_string() const {
    std::string out;
    for (const auto& [k, v] : entries_) {
        out += k;
        out += '=';
        out += v;
        out += '\n';
    }
    return out;
}

void KeyValue::set(const std::string& key, double value) { entries_[key] = format_number(value); }

void KeyValue::set(const std::string& key, long long value) { entries_[key] = std::to_string(value); }

const std::string& KeyValue::get(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError("missing key: " + key);
    return it->second;
}

double KeyValue::get_double(const std::string& key) const {
    const auto& s = get(key);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ConfigError("key '" + key + "': not a number: '" + s + "'");
    }
    return value;
}

long long KeyValue::get_int(const std::string& key) const {
    const auto& s = get(key);
    long long value = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ConfigError("key '" + key + "': not an integer: '" + s + "'");
    }
    return value;
}

double KeyValue::get_double(const std::string& key, double fallback) const {
    return contains(key) ? get_double(key) : fallback;
}

long long KeyValue::get_int(const std::string& key, long long fallback) const {
    return contains(key) ? get_int(key) : fallback;
}

void KeyValue::merge(const KeyValue& other) {
    for (const auto& [k, v] : other.entries_) entries_[k] = v;
}

std::string format_number(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

}  // namespace rgbdnav
