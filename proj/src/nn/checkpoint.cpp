#include "rgbdnav/nn/checkpoint.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "rgbdnav/binary_io.hpp"
#include "rgbdnav/error.hpp"

namespace rgbdnav::nn {
namespace {

constexpr std::string_view kMagic = "rgbdnav-checkpoint";

std::size_t parse_size(std::string_view s, const char* what) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw MalformedHeader(std::string("checkpoint: bad ") + what + " '" + std::string(s) + "'");
    }
    return v;
}

Shape parse_shape(std::string_view s) {
    Shape shape;
    while (true) {
        const auto x = s.find('x');
        shape.push_back(parse_size(s.substr(0, x), "shape"));
        if (x == std::string_view::npos) break;
        s = s.substr(x + 1);
    }
    return shape;
}

std::string shape_token(const Shape& shape) {
    std::string s;
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += 'x';
        s += std::to_string(shape[i]);
    }
    return s;
}

// Splits the next '\n'-terminated line off the front of `rest`.
std::string_view next_line(std::string_view& rest) {
    const auto nl = rest.find('\n');
    if (nl == std::string_view::npos) throw MalformedHeader("checkpoint: truncated header");
    const auto line = rest.substr(0, nl);
    rest = rest.substr(nl + 1);
    return line;
}

std::vector<std::string_view> split_words(std::string_view line) {
    std::vector<std::string_view> words;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && line[i] == ' ') ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ') ++i;
        if (i > start) words.push_back(line.substr(start, i - start));
    }
    return words;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& checkpoint) {
    std::string header;
    header += std::string(kMagic) + " " + std::to_string(kCheckpointVersion) + "\n";
    const auto& entries = checkpoint.config.entries();
    header += "config " + std::to_string(entries.size()) + "\n";
    for (const auto& [k, v] : entries) header += k + "=" + v + "\n";
    header += "tensors " + std::to_string(checkpoint.tensors.size()) + "\n";
    std::size_t offset = 0;
    for (const auto& t : checkpoint.tensors) {
        const std::size_t nbytes = t.tensor.size() * sizeof(float);
        header += "tensor " + t.name + " f32 " + shape_token(t.tensor.shape()) + " " + std::to_string(offset) + " " +
                  std::to_string(nbytes) + "\n";
        offset += nbytes;
    }
    header += "end\n";
    std::string out = header;
    out.reserve(header.size() + offset);
    for (const auto& t : checkpoint.tensors) append_le(out, t.tensor.data());
    return out;
}

Checkpoint parse_checkpoint(const std::string& bytes) {
    std::string_view rest(bytes);
    const auto magic = split_words(next_line(rest));
    if (magic.size() != 2 || magic[0] != kMagic) throw MalformedHeader("checkpoint: bad magic line");
    const int version = static_cast<int>(parse_size(magic[1], "version"));
    if (version != kCheckpointVersion) throw VersionMismatch(version, kCheckpointVersion);

    Checkpoint cp;
    const auto config_line = split_words(next_line(rest));
    if (config_line.size() != 2 || config_line[0] != "config") throw MalformedHeader("checkpoint: missing config block");
    const std::size_t config_count = parse_size(config_line[1], "config count");
    std::string config_text;
    for (std::size_t i = 0; i < config_count; ++i) {
        config_text += next_line(rest);
        config_text += '\n';
    }
    cp.config = KeyValue::parse(config_text);

    const auto tensors_line = split_words(next_line(rest));
    if (tensors_line.size() != 2 || tensors_line[0] != "tensors") throw MalformedHeader("checkpoint: missing manifest");
    const std::size_t count = parse_size(tensors_line[1], "tensor count");

    struct Entry {
        std::string name;
        Shape shape;
        std::size_t offset, nbytes;
    };
    std::vector<Entry> entries;
    for (std::size_t i = 0; i < count; ++i) {
        const auto w = split_words(next_line(rest));
        if (w.size() != 6 || w[0] != "tensor") throw MalformedHeader("checkpoint: bad tensor record");
        if (w[2] != "f32") throw MalformedHeader("checkpoint: unsupported element type " + std::string(w[2]));
        Entry e{std::string(w[1]), parse_shape(w[3]), parse_size(w[4], "offset"), parse_size(w[5], "byte count")};
        if (e.nbytes != element_count(e.shape) * sizeof(float)) {
            throw MalformedHeader("checkpoint: byte count disagrees with shape for " + e.name);
        }
        entries.push_back(std::move(e));
    }
    if (next_line(rest) != "end") throw MalformedHeader("checkpoint: missing end marker");

    std::size_t expected = 0;
    for (const auto& e : entries) expected = std::max(expected, e.offset + e.nbytes);
    if (rest.size() != expected) {
        throw LengthMismatch("checkpoint: payload is " + std::to_string(rest.size()) + " bytes, manifest declares " +
                             std::to_string(expected));
    }
    for (auto& e : entries) {
        Tensor<float> t(e.shape);
        read_le(rest.data() + e.offset, t.data());
        cp.tensors.push_back({std::move(e.name), std::move(t)});
    }
    return cp;
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
    write_file(path, serialize_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::string& path) { return parse_checkpoint(read_file(path)); }

}  // namespace rgbdnav::nn
