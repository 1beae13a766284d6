#pragma once

#include <map>
#include <string>
#include <string_view>

namespace rgbdnav {

// Ordered key=value text blocks: used by config files and checkpoint headers.
class KeyValue {
public:
    static KeyValue parse(std::string_view text);
    static KeyValue load(const std::string& path);

    std::string to_string() const;

    bool contains(const std::string& key) const { return entries_.contains(key); }
    void set(const std::string& key, std::string value) { entries_[key] = std::move(value); }
    void set(const std::string& key, double value);
    void set(const std::string& key, long long value);

    const std::string& get(const std::string& key) const;
    double get_double(const std::string& key) const;
    long long get_int(const std::string& key) const;

    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;

    // Overwrites and adds every entry of other.
    void merge(const KeyValue& other);

    const std::map<std::string, std::string>& entries() const { return entries_; }

private:
    std::map<std::string, std::string> entries_;
};

// Shortest round-trip decimal rendering; stable across runs.
std::string format_number(double value);

}  // namespace rgbdnav
