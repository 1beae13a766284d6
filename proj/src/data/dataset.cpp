#include "rgbdnav/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <map>
#include <sstream>

#include "rgbdnav/binary_io.hpp"
#include "rgbdnav/error.hpp"
#include "rgbdnav/random.hpp"

namespace rgbdnav::data {

namespace fs = std::filesystem;

std::string_view source_name(Source s) { return s == Source::Expert ? "expert" : "teleop"; }

Source parse_source(std::string_view name) {
    if (name == "expert") return Source::Expert;
    if (name == "teleop") return Source::Teleop;
    throw FormatError("unknown episode source '" + std::string(name) + "'");
}

std::string_view modality_name(Modality m) { return m == Modality::Color ? "color" : "depth"; }

namespace {

bool in_unit_range(const nn::Tensor<float>& t) {
    return std::all_of(t.data().begin(), t.data().end(), [](float v) { return v >= 0.0f && v <= 1.0f; });
}

bool plain_token(const std::string& s) {
    return !s.empty() && std::none_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '/'; });
}

}  // namespace

void validate_sample(const Sample& s, double omega_max) {
    if (s.color.rank() != 3 || s.color.dim(0) != 3) throw InvalidInput("sample color must be [3,H,W]");
    if (s.depth.rank() != 3 || s.depth.dim(0) != 1) throw InvalidInput("sample depth must be [1,H,W]");
    if (s.color.dim(1) != s.depth.dim(1) || s.color.dim(2) != s.depth.dim(2)) {
        throw InvalidInput("sample color and depth sizes differ");
    }
    if (!in_unit_range(s.color) || !in_unit_range(s.depth)) throw InvalidInput("sample image outside [0,1]");
    if (!std::isfinite(s.omega_label) || std::abs(double(s.omega_label)) > omega_max) {
        throw InvalidInput("sample label exceeds omega_max");
    }
    if (s.v != kFixedVelocity) throw InvalidInput("sample linear velocity must be the fixed 0.1 m/s");
    if (!std::isfinite(s.t) || !std::isfinite(s.pose.x) || !std::isfinite(s.pose.y) || !std::isfinite(s.pose.theta)) {
        throw InvalidInput("sample pose or time not finite");
    }
}

void validate_episode(const Episode& e, double omega_max) {
    for (std::size_t i = 0; i < e.samples.size(); ++i) {
        const auto& s = e.samples[i];
        validate_sample(s, omega_max);
        if (s.map_id != e.map_id) throw InvalidInput("episode " + e.id + ": sample map id differs from the episode");
        if (i > 0 && !(s.t > e.samples[i - 1].t)) throw InvalidInput("episode " + e.id + ": times not increasing");
        if (i > 0 && s.color.shape() != e.samples[0].color.shape()) {
            throw InvalidInput("episode " + e.id + ": image size changes");
        }
    }
}

// ---- episode container ------------------------------------------------

namespace {

struct FieldSpec {
    const char* name;
    const char* dtype;
    const char* file;
};

constexpr FieldSpec kFields[] = {
    {"color", "f32", "color.f32"}, {"depth", "f32", "depth.f32"}, {"omega", "f32", "omega.f32"},
    {"v", "f64", "v.f64"},         {"pose", "f64", "pose.f64"},   {"t", "f64", "t.f64"},
};

std::string field_shape(const std::string& name, std::size_t n, std::size_t h, std::size_t w) {
    if (name == "color") return nn::shape_string({n, 3, h, w});
    if (name == "depth") return nn::shape_string({n, 1, h, w});
    if (name == "pose") return nn::shape_string({n, 3});
    return nn::shape_string({n});
}

std::size_t field_count(const std::string& name, std::size_t n, std::size_t h, std::size_t w) {
    if (name == "color") return n * 3 * h * w;
    if (name == "depth") return n * h * w;
    if (name == "pose") return n * 3;
    return n;
}

template <typename T>
std::vector<T> read_buffer(const fs::path& path, std::size_t count) {
    const std::string bytes = read_file(path.string());
    if (bytes.size() != count * sizeof(T)) {
        throw LengthMismatch(path.string() + ": " + std::to_string(bytes.size()) + " bytes, manifest declares " +
                             std::to_string(count * sizeof(T)));
    }
    std::vector<T> out(count);
    read_le<T>(bytes.data(), out);
    return out;
}

std::size_t parse_size(const std::string& token, const std::string& what) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(token, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != token.size() || token.empty() || token[0] == '-') throw MalformedHeader("bad " + what + " '" + token + "'");
    return static_cast<std::size_t>(v);
}

}  // namespace

void save_episode(const std::string& dir, const Episode& e) {
    if (!plain_token(e.id) || !plain_token(e.map_id)) throw InvalidInput("episode and map ids must be plain tokens");
    validate_episode(e);
    const std::size_t n = e.samples.size();
    const std::size_t h = n ? e.samples[0].color.dim(1) : 0;
    const std::size_t w = n ? e.samples[0].color.dim(2) : 0;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir + ": " + ec.message());

    std::string color, depth, omega, v, pose, t;
    for (const auto& s : e.samples) {
        append_le<float>(color, s.color.data());
        append_le<float>(depth, s.depth.data());
        append_le<float>(omega, std::span<const float>(&s.omega_label, 1));
        append_le<double>(v, std::span<const double>(&s.v, 1));
        const double p[3] = {s.pose.x, s.pose.y, s.pose.theta};
        append_le<double>(pose, p);
        append_le<double>(t, std::span<const double>(&s.t, 1));
    }
    const fs::path root(dir);
    write_file((root / "color.f32").string(), color);
    write_file((root / "depth.f32").string(), depth);
    write_file((root / "omega.f32").string(), omega);
    write_file((root / "v.f64").string(), v);
    write_file((root / "pose.f64").string(), pose);
    write_file((root / "t.f64").string(), t);

    std::ostringstream m;
    m << "rgbdnav-episode " << kEpisodeFormatVersion << '\n';
    m << "id " << e.id << '\n' << "map_id " << e.map_id << '\n' << "source " << source_name(e.source) << '\n';
    m << "flagged " << (e.flagged ? 1 : 0) << '\n' << "samples " << n << '\n';
    m << "image_h " << h << '\n' << "image_w " << w << '\n';
    for (const auto& f : kFields) {
        m << "field " << f.name << ' ' << f.dtype << ' ' << field_shape(f.name, n, h, w) << ' ' << f.file << '\n';
    }
    m << "end\n";
    write_file((root / "manifest.txt").string(), m.str());
}

Episode load_episode(const std::string& dir) {
    const fs::path root(dir);
    const std::string text = read_file((root / "manifest.txt").string());
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw MalformedHeader(dir + ": empty manifest");
    {
        std::istringstream first(line);
        std::string magic, version;
        first >> magic >> version;
        if (magic != "rgbdnav-episode") throw MalformedHeader(dir + ": not an episode manifest");
        const int found = static_cast<int>(parse_size(version, "version"));
        if (found != kEpisodeFormatVersion) throw VersionMismatch(found, kEpisodeFormatVersion);
    }
    std::map<std::string, std::string> keys;
    std::map<std::string, std::vector<std::string>> fields;
    bool ended = false;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        if (key == "end") {
            ended = true;
            break;
        }
        if (key == "field") {
            std::vector<std::string> parts;
            std::string p;
            while (ls >> p) parts.push_back(p);
            if (parts.size() != 4) throw MalformedHeader(dir + ": bad field line '" + line + "'");
            fields[parts[0]] = parts;
            continue;
        }
        std::string value;
        if (!(ls >> value)) throw MalformedHeader(dir + ": key '" + key + "' has no value");
        keys[key] = value;
    }
    if (!ended) throw MalformedHeader(dir + ": manifest has no end marker");
    const auto need = [&](const char* k) -> const std::string& {
        const auto it = keys.find(k);
        if (it == keys.end()) throw MalformedHeader(dir + ": manifest lacks '" + k + "'");
        return it->second;
    };
    Episode e;
    e.id = need("id");
    e.map_id = need("map_id");
    try {
        e.source = parse_source(need("source"));
    } catch (const FormatError&) {
        throw MalformedHeader(dir + ": bad source");
    }
    e.flagged = parse_size(need("flagged"), "flag") != 0;
    const std::size_t n = parse_size(need("samples"), "sample count");
    const std::size_t h = parse_size(need("image_h"), "image height");
    const std::size_t w = parse_size(need("image_w"), "image width");
    for (const auto& f : kFields) {
        const auto it = fields.find(f.name);
        if (it == fields.end()) throw MalformedHeader(dir + ": manifest lacks field " + f.name);
        const auto& parts = it->second;
        if (parts[1] != f.dtype || parts[2] != field_shape(f.name, n, h, w) || parts[3] != f.file) {
            throw MalformedHeader(dir + ": field " + f.name + " does not match the sample count and image size");
        }
    }
    const auto color = read_buffer<float>(root / "color.f32", field_count("color", n, h, w));
    const auto depth = read_buffer<float>(root / "depth.f32", field_count("depth", n, h, w));
    const auto omega = read_buffer<float>(root / "omega.f32", n);
    const auto v = read_buffer<double>(root / "v.f64", n);
    const auto pose = read_buffer<double>(root / "pose.f64", 3 * n);
    const auto t = read_buffer<double>(root / "t.f64", n);

    e.samples.resize(n);
    const std::size_t plane = h * w;
    for (std::size_t i = 0; i < n; ++i) {
        auto& s = e.samples[i];
        s.color = nn::Tensor<float>({3, h, w}, std::vector<float>(color.begin() + i * 3 * plane, color.begin() + (i + 1) * 3 * plane));
        s.depth = nn::Tensor<float>({1, h, w}, std::vector<float>(depth.begin() + i * plane, depth.begin() + (i + 1) * plane));
        s.omega_label = omega[i];
        s.v = v[i];
        s.pose = {pose[3 * i], pose[3 * i + 1], pose[3 * i + 2]};
        s.t = t[i];
        s.map_id = e.map_id;
    }
    return e;
}

// ---- dataset index ----------------------------------------------------

namespace {

void write_index(const std::string& dir, const std::vector<IndexEntry>& entries) {
    std::ostringstream os;
    os << "rgbdnav-dataset " << kDatasetIndexVersion << '\n';
    for (const auto& e : entries) {
        os << "episode " << e.dir << ' ' << e.map_id << ' ' << source_name(e.source) << ' ' << (e.flagged ? 1 : 0) << ' '
           << e.samples << '\n';
    }
    write_file((fs::path(dir) / "index.txt").string(), os.str());
}

IndexEntry entry_for(const Episode& e) { return {e.id, e.map_id, e.source, e.flagged, e.samples.size()}; }

}  // namespace

std::vector<IndexEntry> read_index(const std::string& dir) {
    const std::string text = read_file((fs::path(dir) / "index.txt").string());
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw MalformedHeader(dir + ": empty dataset index");
    std::istringstream first(line);
    std::string magic, version;
    first >> magic >> version;
    if (magic != "rgbdnav-dataset") throw MalformedHeader(dir + ": not a dataset index");
    const int found = static_cast<int>(parse_size(version, "version"));
    if (found != kDatasetIndexVersion) throw VersionMismatch(found, kDatasetIndexVersion);
    std::vector<IndexEntry> out;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string kind, ep, map, source, flag, count;
        if (!(ls >> kind)) continue;
        if (kind != "episode" || !(ls >> ep >> map >> source >> flag >> count)) {
            throw MalformedHeader(dir + ": bad index line '" + line + "'");
        }
        IndexEntry e;
        e.dir = ep;
        e.map_id = map;
        try {
            e.source = parse_source(source);
        } catch (const FormatError&) {
            throw MalformedHeader(dir + ": bad source in index");
        }
        e.flagged = parse_size(flag, "flag") != 0;
        e.samples = parse_size(count, "sample count");
        out.push_back(e);
    }
    return out;
}

void save_dataset(const std::string& dir, const std::vector<Episode>& episodes) {
    std::vector<IndexEntry> entries;
    for (const auto& e : episodes) {
        save_episode((fs::path(dir) / e.id).string(), e);
        entries.push_back(entry_for(e));
    }
    write_index(dir, entries);
}

std::vector<Episode> load_dataset(const std::string& dir) {
    std::vector<Episode> out;
    for (const auto& entry : read_index(dir)) {
        auto e = load_episode((fs::path(dir) / entry.dir).string());
        if (e.samples.size() != entry.samples || e.map_id != entry.map_id) {
            throw LengthMismatch(dir + ": index disagrees with episode " + entry.dir);
        }
        out.push_back(std::move(e));
    }
    return out;
}

void append_episode(const std::string& dir, const Episode& e) {
    std::vector<IndexEntry> entries;
    if (fs::exists(fs::path(dir) / "index.txt")) entries = read_index(dir);
    for (const auto& existing : entries) {
        if (existing.dir == e.id) throw InvalidInput("dataset already holds episode " + e.id);
    }
    save_episode((fs::path(dir) / e.id).string(), e);
    entries.push_back(entry_for(e));
    write_index(dir, entries);
}

// ---- split and views --------------------------------------------------

DatasetSplit split_episodes(std::size_t n, std::uint64_t seed, const SplitRatios& ratios) {
    if (n < 3) throw InvalidInput("splitting needs at least 3 episodes, got " + std::to_string(n));
    if (!(ratios.val >= 0 && ratios.test >= 0 && ratios.train >= 0)) throw InvalidInput("split ratios must be >= 0");
    std::vector<std::size_t> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = i;
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(ids));
    const auto part = [n](double r) {
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(r * static_cast<double>(n) + 1e-9)));
    };
    const std::size_t n_val = part(ratios.val);
    const std::size_t n_test = part(ratios.test);
    if (n_val + n_test >= n) throw InvalidInput("split leaves no training episodes");
    const std::size_t n_train = n - n_val - n_test;
    DatasetSplit s;
    s.seed = seed;
    s.train.assign(ids.begin(), ids.begin() + n_train);
    s.val.assign(ids.begin() + n_train, ids.begin() + n_train + n_val);
    s.test.assign(ids.begin() + n_train + n_val, ids.end());
    return s;
}

DatasetView::DatasetView(std::shared_ptr<const std::vector<Sample>> samples, std::vector<std::size_t> rows)
    : samples_(std::move(samples)), rows_(std::move(rows)) {
    if (!samples_) throw InvalidInput("dataset view needs samples");
    for (const auto r : rows_) {
        if (r >= samples_->size()) throw InvalidInput("dataset view row out of range");
    }
}

void DatasetView::copy_color(std::size_t i, float* dst) const {
    const auto& c = raw(i).color;
    if (zero_color_) {
        std::fill_n(dst, c.size(), 0.0f);
    } else {
        std::copy_n(c.ptr(), c.size(), dst);
    }
}

void DatasetView::copy_depth(std::size_t i, float* dst) const {
    const auto& d = raw(i).depth;
    if (zero_depth_) {
        std::fill_n(dst, d.size(), 0.0f);
    } else {
        std::copy_n(d.ptr(), d.size(), dst);
    }
}

DatasetView DatasetView::with_zeroed(Modality m) const {
    DatasetView out = *this;
    (m == Modality::Color ? out.zero_color_ : out.zero_depth_) = true;
    return out;
}

std::size_t DatasetView::image_h() const {
    if (empty()) throw InvalidInput("empty dataset view");
    return raw(0).depth.dim(1);
}

std::size_t DatasetView::image_w() const {
    if (empty()) throw InvalidInput("empty dataset view");
    return raw(0).depth.dim(2);
}

DatasetView zero_modality(const DatasetView& view, Modality m) { return view.with_zeroed(m); }

DatasetParts make_parts(const std::vector<Episode>& episodes, std::uint64_t seed, bool include_flagged,
                        const SplitRatios& ratios) {
    std::vector<const Episode*> kept;
    DatasetParts parts;
    for (const auto& e : episodes) {
        if (e.flagged && !include_flagged) {
            ++parts.excluded_flagged;
        } else if (!e.samples.empty()) {
            kept.push_back(&e);
        }
    }
    parts.split = split_episodes(kept.size(), seed, ratios);
    auto pool = std::make_shared<std::vector<Sample>>();
    std::vector<std::vector<std::size_t>> rows_of(kept.size());
    for (std::size_t k = 0; k < kept.size(); ++k) {
        for (const auto& s : kept[k]->samples) {
            rows_of[k].push_back(pool->size());
            pool->push_back(s);
            parts.episode_of.push_back(k);
        }
    }
    const auto gather = [&](const std::vector<std::size_t>& ids) {
        std::vector<std::size_t> rows;
        for (const auto id : ids) rows.insert(rows.end(), rows_of[id].begin(), rows_of[id].end());
        return rows;
    };
    parts.samples = pool;
    parts.train = DatasetView(pool, gather(parts.split.train));
    parts.val = DatasetView(pool, gather(parts.split.val));
    parts.test = DatasetView(pool, gather(parts.split.test));
    return parts;
}

// ---- batching ---------------------------------------------------------

std::vector<std::vector<std::size_t>> batch_order(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                                                  std::uint64_t epoch) {
    if (batch_size == 0) throw InvalidInput("batch size must be positive");
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(mix_seed(seed, epoch));
    rng.shuffle(std::span<std::size_t>(order));
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < n; i += batch_size) {
        out.emplace_back(order.begin() + i, order.begin() + std::min(n, i + batch_size));
    }
    return out;
}

std::vector<std::vector<std::size_t>> sequential_order(std::size_t n, std::size_t batch_size) {
    if (batch_size == 0) throw InvalidInput("batch size must be positive");
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < n; i += batch_size) {
        std::vector<std::size_t> b;
        for (std::size_t j = i; j < std::min(n, i + batch_size); ++j) b.push_back(j);
        out.push_back(std::move(b));
    }
    return out;
}

Batch make_batch(const DatasetView& view, const std::vector<std::size_t>& rows) {
    if (rows.empty()) throw InvalidInput("empty batch");
    const std::size_t h = view.image_h(), w = view.image_w();
    const std::size_t n = rows.size();
    Batch b{nn::Tensor<float>({n, 3, h, w}), nn::Tensor<float>({n, 1, h, w}), nn::Tensor<float>({n, 1})};
    for (std::size_t i = 0; i < n; ++i) {
        if (view.raw(rows[i]).depth.dim(1) != h || view.raw(rows[i]).depth.dim(2) != w) {
            throw ShapeError("dataset mixes image sizes");
        }
        view.copy_color(rows[i], b.color.ptr() + i * 3 * h * w);
        view.copy_depth(rows[i], b.depth.ptr() + i * h * w);
        b.omega[i] = view.label(rows[i]);
    }
    return b;
}

namespace {

struct Fnv {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    void bytes(const void* p, std::size_t n) {
        const auto* c = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= c[i];
            h *= 0x100000001b3ULL;
        }
    }
};

}  // namespace

Fingerprint fingerprint(const DatasetView& view) {
    Fnv color, depth, labels;
    std::vector<float> buf;
    for (std::size_t i = 0; i < view.size(); ++i) {
        const auto& s = view.raw(i);
        buf.resize(s.color.size());
        view.copy_color(i, buf.data());
        color.bytes(buf.data(), buf.size() * sizeof(float));
        buf.resize(s.depth.size());
        view.copy_depth(i, buf.data());
        depth.bytes(buf.data(), buf.size() * sizeof(float));
        const float l = view.label(i);
        labels.bytes(&l, sizeof l);
    }
    return {color.h, depth.h, labels.h};
}

}  // namespace rgbdnav::data
