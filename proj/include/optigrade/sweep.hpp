#pragma once
// sweep.hpp - the experiment grid runner: degrades a dataset once per
// (GSD, Q, aperture) condition, evaluates externally produced prediction
// files against the degraded ground truth, and renders results as CSV and
// gnuplot series.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "optigrade/common.hpp"
#include "optigrade/dataset.hpp"
#include "optigrade/io/png_io.hpp"
#include "optigrade/metrics.hpp"
#include "optigrade/resample.hpp"

namespace optigrade::sweep {

/// The 15 target GSD values of the reference experiment grid, m/px.
inline const std::vector<double> kDefaultGsdTargets = {0.05, 0.10, 0.20, 0.30, 0.40,
                                                       0.50, 0.60, 0.70, 0.80, 0.90,
                                                       1.00, 1.50, 2.00, 2.50, 3.00};

struct SweepConfig {
    std::vector<double> gsd_targets = kDefaultGsdTargets;
    std::vector<double> q_values = {0.5, 1.0, 1.5};
    std::vector<optics::ApertureSpec> apertures = {optics::ApertureSpec::circular(),
                                                   optics::ApertureSpec::cassegrain()};
    std::vector<int> input_sizes = {640, 1280};  ///< opaque condition tags
    double iou_threshold = 0.5;
    double source_gsd = 0.0;        ///< fallback when images lack a sidecar
    std::string predictions_root;   ///< optional: evaluate after degrading
    std::string run_id;             ///< optional: fixed run directory name
    int threads = 0;

    void validate() const {
        if (gsd_targets.empty() || q_values.empty() || apertures.empty() || input_sizes.empty())
            throw InvalidArgument("sweep config lists must be non-empty");
        if (!std::is_sorted(gsd_targets.begin(), gsd_targets.end(),
                            [](double a, double b) { return a <= b; }))
            throw InvalidArgument("gsd targets must be strictly increasing");
        for (const auto& a : apertures) a.validate();
        for (double q : q_values)
            if (!(q > 0.0 && q <= 4.0)) throw InvalidArgument("q must lie in (0, 4]");
    }
};

inline optics::ApertureSpec aperture_from_json(const nlohmann::json& j) {
    optics::ApertureSpec spec;
    spec.kind = optics::aperture_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("diameter")) spec.diameter = j["diameter"].get<double>();
    if (spec.kind == optics::ApertureKind::Circular) {
        spec.obscuration_ratio = 0.0;
        spec.spider_count = 0;
        spec.spider_width_ratio = 0.0;
    }
    if (j.contains("obscuration_ratio")) spec.obscuration_ratio = j["obscuration_ratio"].get<double>();
    if (j.contains("spider_count")) spec.spider_count = j["spider_count"].get<int>();
    if (j.contains("spider_width_ratio"))
        spec.spider_width_ratio = j["spider_width_ratio"].get<double>();
    spec.validate();
    return spec;
}

inline SweepConfig sweep_config_from_json(const nlohmann::json& j) {
    SweepConfig cfg;
    if (j.contains("gsd_targets")) cfg.gsd_targets = j["gsd_targets"].get<std::vector<double>>();
    if (j.contains("q_values")) cfg.q_values = j["q_values"].get<std::vector<double>>();
    if (j.contains("apertures")) {
        cfg.apertures.clear();
        for (const auto& a : j["apertures"]) cfg.apertures.push_back(aperture_from_json(a));
    }
    if (j.contains("input_sizes")) cfg.input_sizes = j["input_sizes"].get<std::vector<int>>();
    if (j.contains("iou_threshold")) cfg.iou_threshold = j["iou_threshold"].get<double>();
    if (j.contains("source_gsd")) cfg.source_gsd = j["source_gsd"].get<double>();
    if (j.contains("predictions_root"))
        cfg.predictions_root = j["predictions_root"].get<std::string>();
    if (j.contains("run_id")) cfg.run_id = j["run_id"].get<std::string>();
    if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
    cfg.validate();
    return cfg;
}

inline SweepConfig load_sweep_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    return sweep_config_from_json(j);
}

/// One condition's metric record in the result-table schema.
struct ResultRow {
    double gsd = 0.0;
    double q = 0.0;
    std::string aperture;
    int input_size = 0;
    double f1 = 0.0;
    double count_error = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double map = 0.0;
    double ap_cow = 0.0;
    double ap_sheep = 0.0;
    double ap_dog = 0.0;
};

inline bool row_order(const ResultRow& a, const ResultRow& b) {
    if (a.gsd != b.gsd) return a.gsd < b.gsd;
    if (a.q != b.q) return a.q < b.q;
    if (a.aperture != b.aperture) return a.aperture < b.aperture;
    return a.input_size < b.input_size;
}

// ---------------------------------------------------------------------------
// Condition naming: g{gsd}_q{q}_{aperture}[_s{input_size}]
// ---------------------------------------------------------------------------

inline std::string condition_dir_name(double gsd, double q, const std::string& aperture,
                                      int input_size = 0) {
    std::string name = "g" + format_compact(gsd) + "_q" + format_compact(q) + "_" + aperture;
    if (input_size > 0) name += "_s" + std::to_string(input_size);
    return name;
}

struct Condition {
    double gsd = 0.0;
    double q = 0.0;
    std::string aperture;
    int input_size = 0;  ///< 0 when untagged
};

inline std::optional<Condition> parse_condition_dir_name(const std::string& name) {
    if (name.size() < 2 || name[0] != 'g') return std::nullopt;
    size_t q_pos = name.find("_q", 1);
    if (q_pos == std::string::npos) return std::nullopt;
    size_t ap_pos = name.find('_', q_pos + 2);
    if (ap_pos == std::string::npos) return std::nullopt;

    Condition cond;
    try {
        cond.gsd = std::stod(name.substr(1, q_pos - 1));
        cond.q = std::stod(name.substr(q_pos + 2, ap_pos - q_pos - 2));
    } catch (...) {
        return std::nullopt;
    }
    std::string rest = name.substr(ap_pos + 1);
    size_t s_pos = rest.rfind("_s");
    if (s_pos != std::string::npos && s_pos + 2 < rest.size() &&
        rest.find_first_not_of("0123456789", s_pos + 2) == std::string::npos) {
        cond.input_size = std::stoi(rest.substr(s_pos + 2));
        rest = rest.substr(0, s_pos);
    }
    if (rest.empty()) return std::nullopt;
    cond.aperture = rest;
    return cond;
}

// ---------------------------------------------------------------------------
// Run report
// ---------------------------------------------------------------------------

struct ConditionReport {
    std::string name;
    std::string status;  // "done", "skipped", "evaluated"
    long images_processed = 0;
    long images_skipped = 0;
    double seconds = 0.0;
};

struct RunReport {
    std::string run_id;
    std::vector<ConditionReport> conditions;
    std::vector<std::string> warnings;
    std::vector<std::string> errors;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["run_id"] = run_id;
        j["warnings"] = warnings;
        j["errors"] = errors;
        auto& conds = j["conditions"] = nlohmann::json::array();
        for (const auto& c : conditions)
            conds.push_back({{"name", c.name},
                             {"status", c.status},
                             {"images_processed", c.images_processed},
                             {"images_skipped", c.images_skipped},
                             {"seconds", c.seconds}});
        return j;
    }
};

// ---------------------------------------------------------------------------
// Degradation sweep
// ---------------------------------------------------------------------------

/// Degrades every dataset image once per (gsd, q, aperture) condition into
/// out_root/<condition>/{images,labels}. Existing outputs are kept, so an
/// interrupted run resumes where it stopped. Conditions at or below an
/// image's source GSD are skipped with a warning.
inline RunReport run_degradation_sweep(const std::filesystem::path& dataset_root,
                                       const SweepConfig& cfg,
                                       const std::filesystem::path& out_root) {
    namespace fs = std::filesystem;
    cfg.validate();

    std::vector<dataset::DatasetRecord> records;
    if (fs::exists(dataset_root / "manifest.json"))
        records = dataset::load_manifest(dataset_root / "manifest.json").records;
    else
        records = dataset::scan_directory(dataset_root);
    if (records.empty()) throw InvalidArgument("dataset has no images");

    RunReport report;
    resample::DegradeContext context;
    const int threads = resolve_threads(cfg.threads);

    for (double gsd : cfg.gsd_targets) {
        for (double q : cfg.q_values) {
            for (const auto& aperture : cfg.apertures) {
                std::string name = condition_dir_name(gsd, q, optics::to_string(aperture.kind));
                ConditionReport cond{name, "done", 0, 0, 0.0};
                auto start = std::chrono::steady_clock::now();

                fs::create_directories(out_root / name / "images");
                fs::create_directories(out_root / name / "labels");

                for (const auto& rec : records) {
                    fs::path src_image = rec.image_path;
                    fs::path dst_image = out_root / name / "images" / src_image.filename();
                    fs::path dst_label =
                        out_root / name / "labels" / (src_image.stem().string() + ".txt");
                    if (fs::exists(dst_image) && fs::exists(dst_label)) {
                        ++cond.images_skipped;
                        continue;
                    }
                    try {
                        resample::Image img = io::load_image(src_image);
                        if (!img.gsd) {
                            if (cfg.source_gsd > 0.0)
                                img.gsd = cfg.source_gsd;
                            else
                                throw InvalidArgument("no source GSD (sidecar or config)");
                        }
                        if (gsd <= *img.gsd) {
                            report.warnings.push_back(name + ": " + src_image.filename().string() +
                                                      ": target GSD not above source, skipped");
                            cond.status = "skipped";
                            continue;
                        }
                        resample::DegradeSpec spec;
                        spec.source_gsd = *img.gsd;
                        spec.target_gsd = gsd;
                        spec.q = q;
                        spec.aperture = aperture;
                        resample::Image out = resample::degrade(img, spec, threads, &context);

                        std::vector<dataset::BoundingBox> boxes;
                        if (!rec.label_path.empty())
                            boxes = dataset::parse_labels(dataset::read_text_file(rec.label_path));
                        boxes = dataset::transform_labels(boxes, img.width, img.height, out.width,
                                                          out.height);
                        io::save_image(dst_image, out);
                        dataset::write_text_file(dst_label, dataset::write_labels(boxes));
                        ++cond.images_processed;
                    } catch (const Error& e) {
                        report.errors.push_back(name + ": " + src_image.filename().string() +
                                                ": " + e.what());
                    }
                }
                cond.seconds =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                        .count();
                report.conditions.push_back(std::move(cond));
            }
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Evaluation sweep
// ---------------------------------------------------------------------------

namespace detail_sweep {

/// Loads one condition's evaluation inputs: every ground-truth label file
/// under gt_dir/labels, paired with the prediction file of the same stem
/// (missing prediction file = no detections).
inline std::vector<metrics::ImageEval> load_condition(const std::filesystem::path& pred_dir,
                                                      const std::filesystem::path& gt_dir,
                                                      std::vector<std::string>& errors) {
    namespace fs = std::filesystem;
    fs::path labels = gt_dir / "labels";
    if (!fs::is_directory(labels)) throw IoError("missing labels under " + gt_dir.string());

    std::vector<fs::path> label_files;
    for (const auto& entry : fs::directory_iterator(labels))
        if (entry.is_regular_file() && entry.path().extension() == ".txt")
            label_files.push_back(entry.path());
    std::sort(label_files.begin(), label_files.end());

    std::vector<metrics::ImageEval> images;
    for (const auto& label_path : label_files) {
        metrics::ImageEval img;
        img.ground_truth = dataset::parse_labels(dataset::read_text_file(label_path));
        fs::path pred_path = pred_dir / label_path.filename();
        if (fs::exists(pred_path)) {
            try {
                img.detections = metrics::parse_predictions(dataset::read_text_file(pred_path));
            } catch (const Error& e) {
                errors.push_back(pred_path.string() + ": " + e.what());
            }
        }
        images.push_back(std::move(img));
    }
    return images;
}

inline double class_ap(const metrics::MetricsReport& report, int cls) {
    auto it = report.per_class_ap.find(cls);
    return it == report.per_class_ap.end() ? 0.0 : it->second;
}

}  // namespace detail_sweep

/// Evaluates every condition directory found under predictions_root
/// against the matching ground-truth condition (the directory of the same
/// name without the input-size tag). Missing conditions are reported in
/// the run report, not fatal.
inline std::vector<ResultRow> evaluate_sweep(const std::filesystem::path& predictions_root,
                                             const std::filesystem::path& ground_truth_root,
                                             const SweepConfig& cfg, RunReport& report) {
    namespace fs = std::filesystem;
    cfg.validate();
    if (!fs::is_directory(predictions_root))
        throw IoError("missing predictions root " + predictions_root.string());

    std::vector<std::pair<Condition, fs::path>> found;
    for (const auto& entry : fs::directory_iterator(predictions_root)) {
        if (!entry.is_directory()) continue;
        if (auto cond = parse_condition_dir_name(entry.path().filename().string()))
            found.emplace_back(*cond, entry.path());
    }
    std::sort(found.begin(), found.end(),
              [](const auto& a, const auto& b) { return a.second < b.second; });

    metrics::EvalConfig eval_cfg{cfg.iou_threshold};
    std::vector<ResultRow> rows;
    for (const auto& [cond, pred_dir] : found) {
        std::string gt_name = condition_dir_name(cond.gsd, cond.q, cond.aperture);
        fs::path gt_dir = ground_truth_root / gt_name;
        ConditionReport cr{pred_dir.filename().string(), "evaluated", 0, 0, 0.0};
        auto start = std::chrono::steady_clock::now();
        if (!fs::is_directory(gt_dir)) {
            report.errors.push_back(pred_dir.filename().string() +
                                    ": no ground truth at " + gt_dir.string());
            continue;
        }
        auto images = detail_sweep::load_condition(pred_dir, gt_dir, report.errors);
        cr.images_processed = long(images.size());
        auto m = metrics::evaluate(images, eval_cfg);

        ResultRow row;
        row.gsd = cond.gsd;
        row.q = cond.q;
        row.aperture = cond.aperture;
        row.input_size = cond.input_size;
        row.f1 = m.f1;
        row.count_error = m.count_error;
        row.precision = m.precision;
        row.recall = m.recall;
        row.map = m.map;
        row.ap_cow = detail_sweep::class_ap(m, 0);
        row.ap_sheep = detail_sweep::class_ap(m, 1);
        row.ap_dog = detail_sweep::class_ap(m, 2);
        rows.push_back(std::move(row));

        cr.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        report.conditions.push_back(std::move(cr));
    }
    std::sort(rows.begin(), rows.end(), row_order);
    return rows;
}

// ---------------------------------------------------------------------------
// CSV and plot rendering
// ---------------------------------------------------------------------------

inline constexpr const char* kCsvHeader =
    "gsd,q,aperture,input_size,f1,count_error,precision,recall,map,ap_cow,ap_sheep,ap_dog";

inline std::string emit_csv(std::vector<ResultRow> rows) {
    if (rows.empty()) throw InvalidArgument("no result rows to emit");
    std::sort(rows.begin(), rows.end(), row_order);
    std::string out = kCsvHeader;
    out += '\n';
    for (const auto& r : rows) {
        out += format_fixed6(r.gsd) + ',' + format_fixed6(r.q) + ',' + r.aperture + ',' +
               std::to_string(r.input_size) + ',' + format_fixed6(r.f1) + ',' +
               format_fixed6(r.count_error) + ',' + format_fixed6(r.precision) + ',' +
               format_fixed6(r.recall) + ',' + format_fixed6(r.map) + ',' +
               format_fixed6(r.ap_cow) + ',' + format_fixed6(r.ap_sheep) + ',' +
               format_fixed6(r.ap_dog) + '\n';
    }
    return out;
}

inline std::vector<ResultRow> parse_csv(const std::string& text) {
    std::vector<ResultRow> rows;
    size_t pos = 0;
    int line_no = 0;
    bool saw_header = false;
    while (pos < text.size()) {
        size_t eol = text.find('\n', pos);
        std::string line = text.substr(pos, eol == std::string::npos ? text.size() - pos
                                                                     : eol - pos);
        pos = eol == std::string::npos ? text.size() : eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!saw_header) {
            if (line != kCsvHeader) throw ParseError(line_no, "unexpected CSV header");
            saw_header = true;
            continue;
        }
        std::vector<std::string> cells;
        size_t cpos = 0;
        while (cpos <= line.size()) {
            size_t comma = line.find(',', cpos);
            cells.push_back(line.substr(cpos, comma == std::string::npos ? line.size() - cpos
                                                                         : comma - cpos));
            if (comma == std::string::npos) break;
            cpos = comma + 1;
        }
        if (cells.size() != 12) throw ParseError(line_no, "expected 12 columns");
        try {
            ResultRow r;
            r.gsd = std::stod(cells[0]);
            r.q = std::stod(cells[1]);
            r.aperture = cells[2];
            r.input_size = std::stoi(cells[3]);
            r.f1 = std::stod(cells[4]);
            r.count_error = std::stod(cells[5]);
            r.precision = std::stod(cells[6]);
            r.recall = std::stod(cells[7]);
            r.map = std::stod(cells[8]);
            r.ap_cow = std::stod(cells[9]);
            r.ap_sheep = std::stod(cells[10]);
            r.ap_dog = std::stod(cells[11]);
            rows.push_back(std::move(r));
        } catch (const std::exception&) {
            throw ParseError(line_no, "malformed numeric cell");
        }
    }
    if (!saw_header) throw InvalidArgument("empty CSV");
    return rows;
}

inline double metric_value(const ResultRow& r, const std::string& metric) {
    if (metric == "f1") return r.f1;
    if (metric == "count_error") return r.count_error;
    if (metric == "precision") return r.precision;
    if (metric == "recall") return r.recall;
    if (metric == "map") return r.map;
    if (metric == "ap_cow") return r.ap_cow;
    if (metric == "ap_sheep") return r.ap_sheep;
    if (metric == "ap_dog") return r.ap_dog;
    throw InvalidArgument("unknown metric: " + metric);
}

/// Gnuplot-style series of (gsd, metric) pairs, one series per
/// (q, aperture, input_size), separated by double blank lines.
inline std::string emit_plot_data(std::vector<ResultRow> rows, const std::string& metric) {
    if (rows.empty()) throw InvalidArgument("no result rows to emit");
    metric_value(rows.front(), metric);  // validate the metric name up front
    std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
        if (a.q != b.q) return a.q < b.q;
        if (a.aperture != b.aperture) return a.aperture < b.aperture;
        if (a.input_size != b.input_size) return a.input_size < b.input_size;
        return a.gsd < b.gsd;
    });

    std::string out = "# " + metric + " vs gsd\n";
    bool first = true;
    double q = 0.0;
    std::string aperture;
    int input_size = -1;
    for (const auto& r : rows) {
        if (first || r.q != q || r.aperture != aperture || r.input_size != input_size) {
            if (!first) out += "\n\n";
            q = r.q;
            aperture = r.aperture;
            input_size = r.input_size;
            out += "# q=" + format_compact(q) + " aperture=" + aperture +
                   " input_size=" + std::to_string(input_size) + '\n';
            first = false;
        }
        out += format_fixed6(r.gsd) + ' ' + format_fixed6(metric_value(r, metric)) + '\n';
    }
    return out;
}

}  // namespace optigrade::sweep
