// optigrade - aerial-to-satellite image degradation simulator and
// detection evaluation harness.
//
// Subcommands: psf, degrade, split, eval, sweep, plot. Exit codes: 0 on
// success, 1 on validation errors, 2 on I/O errors.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "optigrade/dataset.hpp"
#include "optigrade/io/png_io.hpp"
#include "optigrade/metrics.hpp"
#include "optigrade/optics.hpp"
#include "optigrade/resample.hpp"
#include "optigrade/sweep.hpp"

namespace fs = std::filesystem;
using namespace optigrade;

namespace {

struct PsfArgs {
    std::string aperture = "circular";
    double q = 1.0;
    std::string out;
    double diameter = 0.5;
    double obscuration = 0.3;
    int spiders = 4;
};

struct DegradeArgs {
    std::string in;
    double src_gsd = 0.0;
    double target_gsd = 0.0;
    double q = 1.0;
    std::string aperture = "circular";
    std::string out;
};

struct SplitArgs {
    std::string dir;
    std::string fractions = "0.8,0.1,0.1";
    std::uint64_t seed = 0;
};

struct EvalArgs {
    std::string pred;
    std::string gt;
    double iou = 0.5;
};

struct SweepArgs {
    std::string config;
    std::string dataset;
    std::string out;
};

struct PlotArgs {
    std::string results;
    std::string metric = "map";
    std::string out;
};

optics::ApertureSpec make_aperture(const std::string& kind, double diameter,
                                   double obscuration, int spiders) {
    if (optics::aperture_kind_from_string(kind) == optics::ApertureKind::Circular)
        return optics::ApertureSpec::circular(diameter);
    return optics::ApertureSpec::cassegrain(diameter, obscuration, spiders);
}

fs::path preview_path(const fs::path& out) {
    fs::path p = out;
    if (p.extension() == ".png")
        p += ".png";
    else
        p.replace_extension(".png");
    return p;
}

int run_psf(const PsfArgs& args, int threads) {
    (void)threads;
    optics::ApertureSpec spec =
        make_aperture(args.aperture, args.diameter, args.obscuration, args.spiders);
    optics::PsfKernel kernel = optics::kernel_for_condition(spec, args.q);
    dataset::write_text_file(args.out, optics::kernel_to_text(kernel));
    fs::path preview = preview_path(args.out);
    io::write_png16_normalized(preview, kernel.weights);
    std::cout << "wrote " << kernel.size() << "x" << kernel.size() << " kernel to " << args.out
              << " (preview " << preview.string() << ")\n";
    return 0;
}

int run_degrade(const DegradeArgs& args, int threads) {
    resample::Image img = io::load_image(args.in);
    if (args.src_gsd > 0.0)
        img.gsd = args.src_gsd;
    else if (!img.gsd)
        throw InvalidArgument("source GSD unknown: pass --src-gsd or provide a sidecar");

    resample::DegradeSpec spec;
    spec.source_gsd = *img.gsd;
    spec.target_gsd = args.target_gsd;
    spec.q = args.q;
    spec.aperture = make_aperture(args.aperture, 0.5, 0.3, 4);
    resample::Image out = resample::degrade(img, spec, threads);
    io::save_image(args.out, out);
    std::cout << "degraded " << img.width << "x" << img.height << " -> " << out.width << "x"
              << out.height << " at " << format_compact(args.target_gsd) << " m/px\n";
    return 0;
}

int run_split(const SplitArgs& args) {
    double train = 0.0, val = 0.0, test = 0.0;
    if (std::sscanf(args.fractions.c_str(), "%lf,%lf,%lf", &train, &val, &test) != 3)
        throw InvalidArgument("--fractions expects three comma-separated numbers");

    auto records = dataset::scan_directory(args.dir);
    auto manifest =
        dataset::split_dataset(records, dataset::SplitFractions{train, val, test}, args.seed);
    dataset::save_manifest(fs::path(args.dir) / "manifest.json", manifest);

    long n_train = 0, n_val = 0, n_test = 0;
    for (const auto& r : manifest.records) {
        if (r.split == dataset::Split::Train) ++n_train;
        if (r.split == dataset::Split::Val) ++n_val;
        if (r.split == dataset::Split::Test) ++n_test;
    }
    std::cout << "split " << manifest.records.size() << " records: " << n_train << " train, "
              << n_val << " val, " << n_test << " test (seed " << args.seed << ")\n";
    return 0;
}

/// Accepts either a dataset root (with a labels/ subdirectory) or a flat
/// directory of label files.
fs::path label_dir(const fs::path& root) {
    return fs::is_directory(root / "labels") ? root / "labels" : root;
}

int run_eval(const EvalArgs& args) {
    fs::path gt = label_dir(args.gt);
    fs::path pred = label_dir(args.pred);
    if (!fs::is_directory(gt)) throw IoError("missing ground truth directory " + gt.string());
    if (!fs::is_directory(pred)) throw IoError("missing predictions directory " + pred.string());

    std::vector<fs::path> label_files;
    for (const auto& entry : fs::directory_iterator(gt))
        if (entry.is_regular_file() && entry.path().extension() == ".txt")
            label_files.push_back(entry.path());
    std::sort(label_files.begin(), label_files.end());
    if (label_files.empty()) throw InvalidArgument("no label files under " + gt.string());

    std::vector<metrics::ImageEval> images;
    for (const auto& label : label_files) {
        metrics::ImageEval img;
        img.ground_truth = dataset::parse_labels(dataset::read_text_file(label));
        fs::path pred_file = pred / label.filename();
        if (fs::exists(pred_file))
            img.detections = metrics::parse_predictions(dataset::read_text_file(pred_file));
        images.push_back(std::move(img));
    }

    auto report = metrics::evaluate(images, metrics::EvalConfig{args.iou});
    nlohmann::json j;
    j["map"] = report.map;
    j["f1"] = report.f1;
    j["precision"] = report.precision;
    j["recall"] = report.recall;
    j["best_threshold"] = report.best_threshold;
    j["count_error"] = report.count_error;
    auto& per_class = j["per_class_ap"] = nlohmann::json::object();
    for (const auto& [cls, ap] : report.per_class_ap) per_class[std::to_string(cls)] = ap;
    std::cout << j.dump(2) << '\n';
    return 0;
}

std::string timestamp_id() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y%m%dT%H%M%SZ", std::gmtime(&t));
    return buf;
}

int run_sweep(const SweepArgs& args, int threads) {
    sweep::SweepConfig cfg = sweep::load_sweep_config(args.config);
    if (threads > 0) cfg.threads = threads;

    fs::path out_root(args.out);
    fs::path datasets = out_root / "datasets";
    fs::create_directories(datasets);

    sweep::RunReport report = sweep::run_degradation_sweep(args.dataset, cfg, datasets);
    report.run_id = cfg.run_id.empty() ? timestamp_id() : cfg.run_id;
    for (const auto& c : report.conditions)
        std::cout << c.name << ": " << c.status << ", " << c.images_processed << " processed, "
                  << c.images_skipped << " skipped\n";

    fs::path run_dir = out_root / "runs" / report.run_id;
    fs::create_directories(run_dir);

    if (!cfg.predictions_root.empty()) {
        auto rows = sweep::evaluate_sweep(cfg.predictions_root, datasets, cfg, report);
        if (!rows.empty()) {
            dataset::write_text_file(run_dir / "results.csv", sweep::emit_csv(rows));
            fs::create_directories(run_dir / "plots");
            for (const char* metric : {"map", "f1", "count_error", "precision", "recall"})
                dataset::write_text_file(run_dir / "plots" / (std::string(metric) + ".dat"),
                                         sweep::emit_plot_data(rows, metric));
            std::cout << "evaluated " << rows.size() << " conditions -> "
                      << (run_dir / "results.csv").string() << '\n';
        } else {
            report.warnings.push_back("no prediction conditions found under " +
                                      cfg.predictions_root);
        }
    }

    std::ofstream rep(run_dir / "run_report.json");
    if (!rep) throw IoError("cannot write run report");
    rep << report.to_json().dump(2) << '\n';
    std::cout << "run report: " << (run_dir / "run_report.json").string() << '\n';
    return report.errors.empty() ? 0 : 1;
}

int run_plot(const PlotArgs& args) {
    auto rows = sweep::parse_csv(dataset::read_text_file(args.results));
    dataset::write_text_file(args.out, sweep::emit_plot_data(rows, args.metric));
    std::cout << "wrote " << args.metric << " series to " << args.out << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"optigrade: PSF-accurate spatial degradation and detection evaluation"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "worker thread cap (default: OPTIGRADE_THREADS or all cores)");

    PsfArgs psf_args;
    auto* psf = app.add_subcommand("psf", "write a PSF kernel matrix and preview image");
    psf->add_option("--aperture", psf_args.aperture, "aperture kind: circular or cassegrain")
        ->check(CLI::IsMember({"circular", "cassegrain"}));
    psf->add_option("--q", psf_args.q, "sampling quality Q in (0, 4]")->required();
    psf->add_option("--out", psf_args.out, "output path for the kernel matrix")->required();
    psf->add_option("--diameter", psf_args.diameter, "aperture diameter in meters");
    psf->add_option("--obscuration", psf_args.obscuration, "cassegrain obscuration ratio");
    psf->add_option("--spiders", psf_args.spiders, "cassegrain spider vane count");

    DegradeArgs degrade_args;
    auto* degrade = app.add_subcommand("degrade", "degrade one image to a coarser GSD");
    degrade->add_option("--in", degrade_args.in, "input PNG")->required();
    degrade->add_option("--src-gsd", degrade_args.src_gsd, "source GSD, m/px (falls back to sidecar)");
    degrade->add_option("--target-gsd", degrade_args.target_gsd, "target GSD, m/px")->required();
    degrade->add_option("--q", degrade_args.q, "sampling quality Q in (0, 4]");
    degrade->add_option("--aperture", degrade_args.aperture, "aperture kind")
        ->check(CLI::IsMember({"circular", "cassegrain"}));
    degrade->add_option("--out", degrade_args.out, "output PNG")->required();

    SplitArgs split_args;
    auto* split = app.add_subcommand("split", "assign train/val/test splits and write manifest.json");
    split->add_option("--dir", split_args.dir, "dataset root with images/ and labels/")->required();
    split->add_option("--fractions", split_args.fractions, "train,val,test fractions summing to 1");
    split->add_option("--seed", split_args.seed, "shuffle seed");

    EvalArgs eval_args;
    auto* eval = app.add_subcommand("eval", "evaluate predictions against ground truth labels");
    eval->add_option("--pred", eval_args.pred, "predictions directory")->required();
    eval->add_option("--gt", eval_args.gt, "ground truth directory")->required();
    eval->add_option("--iou", eval_args.iou, "IoU threshold (default 0.5)");

    SweepArgs sweep_args;
    auto* sweepc = app.add_subcommand("sweep", "run the degradation grid and optional evaluation");
    sweepc->add_option("--config", sweep_args.config, "sweep configuration JSON")->required();
    sweepc->add_option("--dataset", sweep_args.dataset, "source dataset root")->required();
    sweepc->add_option("--out", sweep_args.out, "output root")->required();

    PlotArgs plot_args;
    auto* plot = app.add_subcommand("plot", "emit gnuplot series from a results CSV");
    plot->add_option("--results", plot_args.results, "results CSV path")->required();
    plot->add_option("--metric", plot_args.metric,
                     "metric column: f1, count_error, precision, recall, map, ap_cow, ap_sheep, ap_dog");
    plot->add_option("--out", plot_args.out, "output path for plot data")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help() << std::flush;
        return 1;
    }

    try {
        int effective_threads = resolve_threads(threads);
        if (psf->parsed()) return run_psf(psf_args, effective_threads);
        if (degrade->parsed()) return run_degrade(degrade_args, effective_threads);
        if (split->parsed()) return run_split(split_args);
        if (eval->parsed()) return run_eval(eval_args);
        if (sweepc->parsed()) return run_sweep(sweep_args, threads);
        if (plot->parsed()) return run_plot(plot_args);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
