#pragma once
// dataset.hpp - normalized bounding-box annotations, the plain-text label
// format, label transforms under image rescaling, and seeded train/val/test
// splitting with a JSON manifest.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "optigrade/common.hpp"

namespace optigrade::dataset {

/// Axis-aligned box in normalized image coordinates: center, width,
/// height as fractions of the image size.
struct BoundingBox {
    int class_id = 0;
    double cx = 0.0, cy = 0.0, w = 0.0, h = 0.0;

    double left() const { return cx - w / 2.0; }
    double right() const { return cx + w / 2.0; }
    double top() const { return cy - h / 2.0; }
    double bottom() const { return cy + h / 2.0; }
    double area() const { return w * h; }

    void validate() const {
        constexpr double tol = 1e-9;
        if (class_id < 0) throw InvalidArgument("class id must be >= 0");
        if (!(w > 0.0 && h > 0.0)) throw InvalidArgument("box width and height must be positive");
        if (left() < -tol || right() > 1.0 + tol || top() < -tol || bottom() > 1.0 + tol)
            throw InvalidArgument("box extends outside the image");
    }
};

struct ClassList {
    std::vector<std::string> names = {"cow", "sheep", "dog"};

    void validate() const {
        if (names.empty()) throw InvalidArgument("class list is empty");
        for (const auto& n : names)
            if (n.empty()) throw InvalidArgument("class names must be non-empty");
        auto sorted = names;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw InvalidArgument("class names must be unique");
    }
    int size() const { return int(names.size()); }
};

enum class Split { Train, Val, Test };

inline const char* to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        default: return "test";
    }
}

inline Split split_from_string(const std::string& s) {
    if (s == "train") return Split::Train;
    if (s == "val") return Split::Val;
    if (s == "test") return Split::Test;
    throw InvalidArgument("unknown split name: " + s);
}

struct DatasetRecord {
    std::string image_path;
    std::string label_path;
    Split split = Split::Train;
};

struct DatasetManifest {
    std::vector<DatasetRecord> records;
    ClassList classes;
    std::uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// Label text format: one box per line, "class cx cy w h"
// ---------------------------------------------------------------------------

namespace detail_dataset {

inline std::vector<double> parse_fields(std::string_view line, int line_no, size_t expected) {
    std::vector<double> fields;
    size_t pos = 0;
    while (pos < line.size()) {
        while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
        if (pos >= line.size()) break;
        size_t end = pos;
        while (end < line.size() && line[end] != ' ' && line[end] != '\t') ++end;
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(line.data() + pos, line.data() + end, value);
        if (ec != std::errc() || ptr != line.data() + end)
            throw ParseError(line_no, "malformed number '" + std::string(line.substr(pos, end - pos)) + "'");
        fields.push_back(value);
        pos = end;
    }
    if (fields.size() != expected)
        throw ParseError(line_no, "expected " + std::to_string(expected) + " fields, got " +
                                      std::to_string(fields.size()));
    return fields;
}

}  // namespace detail_dataset

/// Parses "class cx cy w h" lines. Empty and whitespace-only lines are
/// skipped; malformed lines and out-of-image boxes are errors.
inline std::vector<BoundingBox> parse_labels(std::string_view text) {
    std::vector<BoundingBox> boxes;
    int line_no = 0;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos
                                                                               : eol - pos);
        ++line_no;
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        auto f = detail_dataset::parse_fields(line, line_no, 5);
        if (f[0] < 0.0 || f[0] != std::floor(f[0]))
            throw ParseError(line_no, "class id must be a non-negative integer");
        BoundingBox box{int(f[0]), f[1], f[2], f[3], f[4]};
        try {
            box.validate();
        } catch (const InvalidArgument& e) {
            throw ParseError(line_no, e.what());
        }
        boxes.push_back(box);
    }
    return boxes;
}

/// Serializes boxes at 6 decimal places, one per line.
inline std::string write_labels(const std::vector<BoundingBox>& boxes) {
    std::string out;
    for (const auto& b : boxes) {
        out += std::to_string(b.class_id);
        for (double v : {b.cx, b.cy, b.w, b.h}) {
            out += ' ';
            out += format_fixed6(v);
        }
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Label transforms
// ---------------------------------------------------------------------------

/// Rescales labels from a src_w x src_h image to dst_w x dst_h. Normalized
/// boxes are scale-invariant, so a uniform resize (aspect preserved within
/// one rounding pixel) returns them unchanged. A non-uniform resize keeps
/// the x axis as the reference scale and rescales the box height by the
/// aspect mismatch, clamping the result into the image.
inline std::vector<BoundingBox> transform_labels(const std::vector<BoundingBox>& boxes,
                                                 int src_w, int src_h, int dst_w, int dst_h) {
    if (src_w < 1 || src_h < 1 || dst_w < 1 || dst_h < 1)
        throw InvalidArgument("image dimensions must be >= 1");
    double uniform_h = double(src_h) * dst_w / src_w;
    if (std::abs(dst_h - uniform_h) <= 1.0) return boxes;

    double ratio = (double(src_h) * dst_w) / (double(src_w) * dst_h);
    std::vector<BoundingBox> out;
    out.reserve(boxes.size());
    for (BoundingBox b : boxes) {
        b.h *= ratio;
        double top = std::max(0.0, b.top());
        double bottom = std::min(1.0, b.bottom());
        b.cy = (top + bottom) / 2.0;
        b.h = bottom - top;
        out.push_back(b);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

struct SplitFractions {
    double train = 0.8;
    double val = 0.1;
    double test = 0.1;

    void validate() const {
        if (std::abs(train + val + test - 1.0) > 1e-9)
            throw InvalidArgument("split fractions must sum to 1");
        if (train < 0.0 || val < 0.0 || test < 0.0)
            throw InvalidArgument("split fractions must be non-negative");
    }
};

/// Assigns splits by a seeded Fisher-Yates shuffle. Val and test receive
/// round(fraction * N) records; train takes the remainder. Record order in
/// the manifest matches the input order.
inline DatasetManifest split_dataset(std::vector<DatasetRecord> records,
                                     const SplitFractions& fractions, std::uint64_t seed,
                                     ClassList classes = {}) {
    fractions.validate();
    classes.validate();
    if (records.empty()) throw InvalidArgument("cannot split an empty dataset");

    const size_t n = records.size();
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    for (size_t i = n - 1; i > 0; --i) {
        size_t j = size_t(rng() % (i + 1));
        std::swap(order[i], order[j]);
    }

    long n_val = std::lround(fractions.val * double(n));
    long n_test = std::lround(fractions.test * double(n));
    long n_train = long(n) - n_val - n_test;
    if (n_train < 0) throw InvalidArgument("split fractions leave no records for train");

    for (size_t k = 0; k < n; ++k) {
        Split s = k < size_t(n_train)          ? Split::Train
                  : k < size_t(n_train + n_val) ? Split::Val
                                                : Split::Test;
        records[order[k]].split = s;
    }

    DatasetManifest manifest;
    manifest.records = std::move(records);
    manifest.classes = std::move(classes);
    manifest.seed = seed;
    return manifest;
}

// ---------------------------------------------------------------------------
// Manifest and directory I/O
// ---------------------------------------------------------------------------

inline nlohmann::json manifest_to_json(const DatasetManifest& m) {
    nlohmann::json j;
    j["seed"] = m.seed;
    j["classes"] = m.classes.names;
    auto& recs = j["records"] = nlohmann::json::array();
    for (const auto& r : m.records)
        recs.push_back({{"image", r.image_path}, {"label", r.label_path}, {"split", to_string(r.split)}});
    return j;
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j) {
    DatasetManifest m;
    m.seed = j.at("seed").get<std::uint64_t>();
    m.classes.names = j.at("classes").get<std::vector<std::string>>();
    m.classes.validate();
    for (const auto& r : j.at("records"))
        m.records.push_back({r.at("image").get<std::string>(), r.at("label").get<std::string>(),
                             split_from_string(r.at("split").get<std::string>())});
    return m;
}

inline void save_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << manifest_to_json(m).dump(2) << '\n';
}

inline DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    return manifest_from_json(j);
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
}

/// Pairs images/*.png with labels/<stem>.txt under root. A missing label
/// file is recorded with an empty path (no annotations).
inline std::vector<DatasetRecord> scan_directory(const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    fs::path images = root / "images";
    if (!fs::is_directory(images)) throw IoError("missing images directory under " + root.string());
    std::vector<DatasetRecord> records;
    for (const auto& entry : fs::directory_iterator(images)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".png") continue;
        fs::path label = root / "labels" / entry.path().stem();
        label += ".txt";
        records.push_back({entry.path().string(),
                           fs::exists(label) ? label.string() : std::string{}, Split::Train});
    }
    std::sort(records.begin(), records.end(),
              [](const auto& a, const auto& b) { return a.image_path < b.image_path; });
    return records;
}

}  // namespace optigrade::dataset
