#include "lss/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lss/autoencoder.hpp"
#include "lss/backbone.hpp"
#include "lss/costmodel.hpp"
#include "lss/grf.hpp"
#include "lss/io.hpp"
#include "lss/sampler.hpp"
#include "lss/schedule.hpp"
#include "lss/upsampler.hpp"

namespace fs = std::filesystem;

namespace lss {
namespace {

constexpr const char* kToolVersion = "lssgen 1.0.0";

// usage and input problems exit with 2; numerical failures (NaN training,
// non-finite states) surface as std::runtime_error and exit with 3
struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

void require_exists(const std::string& path, const char* what) {
    if (!fs::exists(path)) throw UsageError(std::string(what) + " not found: " + path);
}

void ensure_dir(const std::string& path) {
    std::error_code ec;
    fs::create_directories(path, ec);
    if (ec) throw UsageError("cannot create directory " + path + ": " + ec.message());
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(trim(item));
    if (!s.empty() && s.back() == sep) out.push_back("");
    return out;
}

struct Config {
    std::string path;
    std::map<std::string, std::string> kv;

    bool has(const std::string& key) const { return kv.count(key) != 0; }

    std::string str(const std::string& key) const {
        auto it = kv.find(key);
        if (it == kv.end()) throw UsageError("config " + path + ": missing required key '" + key + "'");
        return it->second;
    }
    std::string str_or(const std::string& key, const std::string& fallback) const {
        auto it = kv.find(key);
        return it == kv.end() ? fallback : it->second;
    }
    long long integer(const std::string& key) const { return to_int(key, str(key)); }
    long long integer_or(const std::string& key, long long fallback) const {
        return has(key) ? integer(key) : fallback;
    }
    double real(const std::string& key) const { return to_real(key, str(key)); }
    double real_or(const std::string& key, double fallback) const {
        return has(key) ? real(key) : fallback;
    }
    bool flag_or(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        std::string v = str(key);
        if (v == "on" || v == "true" || v == "1") return true;
        if (v == "off" || v == "false" || v == "0") return false;
        throw UsageError("config " + path + ": key '" + key + "' must be on/off, got '" + v + "'");
    }

    long long to_int(const std::string& key, const std::string& v) const {
        try {
            size_t used = 0;
            long long out = std::stoll(v, &used);
            if (used != v.size()) throw std::invalid_argument("");
            return out;
        } catch (const std::exception&) {
            throw UsageError("config " + path + ": key '" + key + "' needs an integer, got '" + v + "'");
        }
    }
    double to_real(const std::string& key, const std::string& v) const {
        try {
            size_t used = 0;
            double out = std::stod(v, &used);
            if (used != v.size()) throw std::invalid_argument("");
            return out;
        } catch (const std::exception&) {
            throw UsageError("config " + path + ": key '" + key + "' needs a number, got '" + v + "'");
        }
    }
};

Config parse_config(const std::string& path, const std::set<std::string>& allowed) {
    require_exists(path, "config file");
    Config cfg;
    cfg.path = path;
    std::istringstream in(read_text_file(path));
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError(path + ":" + std::to_string(line_no) + ": expected key=value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw UsageError(path + ":" + std::to_string(line_no) + ": empty key");
        if (!allowed.count(key))
            throw UsageError(path + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
        if (cfg.kv.count(key))
            throw UsageError(path + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
        cfg.kv[key] = value;
    }
    return cfg;
}

void echo_config(std::ostream& out, const Config& cfg) {
    out << "config_file " << cfg.path << "\n";
    for (const auto& [k, v] : cfg.kv) out << "config " << k << " " << v << "\n";
}

// unitless desk-scale cost parameters used in reports: one token per pixel
// mixes a linear term with a visible quadratic one
CostParams desk_cost_params() {
    CostParams params;
    params.a = 1.0;
    params.b = 0.001;
    params.patch = 1;
    params.context_tokens = 0;
    return params;
}

std::vector<Tensor> load_image_batch(const std::string& path) {
    require_exists(path, "dataset");
    Tensor all = load_tensor(path);
    std::vector<Tensor> out;
    if (all.rank() == 4) {
        int n = all.dim(0), c = all.dim(1), h = all.dim(2), w = all.dim(3);
        int64_t item = static_cast<int64_t>(c) * h * w;
        for (int i = 0; i < n; ++i) {
            Tensor t({c, h, w});
            std::copy_n(all.ptr() + i * item, item, t.data.begin());
            out.push_back(std::move(t));
        }
    } else if (all.rank() == 3) {
        int n = all.dim(0), h = all.dim(1), w = all.dim(2);
        int64_t item = static_cast<int64_t>(h) * w;
        for (int i = 0; i < n; ++i) {
            Tensor t({1, h, w});
            std::copy_n(all.ptr() + i * item, item, t.data.begin());
            out.push_back(std::move(t));
        }
    } else {
        throw UsageError("dataset " + path + " must be [n,c,h,w] or [n,h,w], got " + all.shape_str());
    }
    if (out.empty()) throw UsageError("dataset " + path + " is empty");
    return out;
}

std::unique_ptr<Codec> load_codec(const std::string& name) {
    if (name == "identity") return std::make_unique<IdentityCodec>();
    require_exists(name + "/manifest.txt", "codec checkpoint");
    return std::make_unique<Autoencoder>(Autoencoder::load(name));
}

// ---- gen-data ----

const std::set<std::string> kGenDataKeys{"size", "count", "alpha", "c", "seed", "out_dir"};

int cmd_gen_data(const std::string& config_path) {
    Config cfg = parse_config(config_path, kGenDataKeys);
    int size = static_cast<int>(cfg.integer("size"));
    int count = static_cast<int>(cfg.integer("count"));
    double alpha = cfg.real_or("alpha", 2.0);
    double c = cfg.real_or("c", 1.0);
    uint64_t seed = static_cast<uint64_t>(cfg.integer_or("seed", 0));
    std::string out_dir = cfg.str("out_dir");
    if (count < 1) throw UsageError("count must be positive");

    GrfSpec spec = GrfSpec::power_law(size, alpha, c);
    Rng rng(seed);
    Tensor batch({count, 1, size, size});
    int64_t item = static_cast<int64_t>(size) * size;
    for (int i = 0; i < count; ++i) {
        Tensor x = grf_sample(spec, rng);
        std::copy_n(x.ptr(), item, batch.data.begin() + i * item);
    }
    ensure_dir(out_dir);
    save_tensor(out_dir + "/dataset.lst1", batch);

    std::ostringstream report;
    report << "tool " << kToolVersion << "\n";
    report << "rng " << Rng::algorithm() << "\n";
    echo_config(report, cfg);
    report << "pixel_variance " << spec.pixel_variance() << "\n";
    report << "artifact " << out_dir << "/dataset.lst1\n";
    write_text_file(out_dir + "/gen_report.txt", report.str());
    std::printf("wrote %d %dx%d fields to %s/dataset.lst1\n", count, size, size, out_dir.c_str());
    return 0;
}

// ---- train-ae ----

const std::set<std::string> kTrainAeKeys{"dataset", "epochs", "lr", "seed", "out_dir"};

int cmd_train_ae(const std::string& config_path) {
    Config cfg = parse_config(config_path, kTrainAeKeys);
    std::vector<Tensor> images = load_image_batch(cfg.str("dataset"));
    int epochs = static_cast<int>(cfg.integer_or("epochs", 20));
    double lr = cfg.real_or("lr", 1e-3);
    Rng rng(static_cast<uint64_t>(cfg.integer_or("seed", 0)));
    std::string out_dir = cfg.str("out_dir");

    Autoencoder model(rng);
    AeTrainReport report = train_ae(model, images, epochs, lr, rng);
    ensure_dir(out_dir);
    model.save(out_dir + "/ae");

    std::ofstream csv(out_dir + "/ae_report.csv");
    if (!csv) throw std::runtime_error("cannot write ae_report.csv");
    csv << "metric,value\n";
    for (size_t i = 0; i < report.epoch_loss.size(); ++i)
        csv << "epoch_" << i << "_loss," << report.epoch_loss[i] << "\n";
    csv << "untrained_mse," << report.untrained_mse << "\n";
    csv << "holdout_mse," << report.holdout_mse << "\n";
    csv << "holdout_variance," << report.holdout_variance << "\n";
    std::printf("holdout recon mse %.6f (input variance %.6f)\n", report.holdout_mse,
                report.holdout_variance);
    return 0;
}

// ---- train-backbone ----

const std::set<std::string> kTrainBackboneKeys{"dataset", "codec", "mode",    "epochs", "lr",
                                               "seed",    "alpha", "c",       "out_dir"};

int cmd_train_backbone(const std::string& config_path) {
    Config cfg = parse_config(config_path, kTrainBackboneKeys);
    std::unique_ptr<Codec> codec = load_codec(cfg.str_or("codec", "identity"));
    PredMode mode = pred_mode_from(cfg.str_or("mode", "fm"));
    int epochs = static_cast<int>(cfg.integer_or("epochs", 20));
    double lr = cfg.real_or("lr", 1e-3);
    Rng rng(static_cast<uint64_t>(cfg.integer_or("seed", 0)));
    std::string out_dir = cfg.str("out_dir");

    std::vector<Tensor> latents;
    for (const std::string& part : split(cfg.str("dataset"), ';')) {
        for (const Tensor& img : load_image_batch(part)) latents.push_back(codec->encode(img));
    }

    // the analytic optimum is only known for raw fields of one size
    GrfSpec oracle_spec;
    const GrfSpec* oracle = nullptr;
    bool uniform = true;
    for (const Tensor& z : latents) uniform = uniform && z.dim(1) == latents[0].dim(1);
    if (codec->spatial_factor() == 1 && uniform && cfg.has("alpha")) {
        oracle_spec = GrfSpec::power_law(latents[0].dim(1), cfg.real("alpha"), cfg.real_or("c", 1.0));
        oracle = &oracle_spec;
    }

    LearnedBackbone model(mode, codec->latent_channels(), rng);
    TrainReport report = train_backbone(model, latents, epochs, lr, rng, oracle);
    ensure_dir(out_dir);
    model.save(out_dir + "/backbone");
    write_train_report_csv(out_dir + "/backbone_report.csv", report);
    std::printf("holdout loss %.6f (untrained %.6f", report.holdout_loss, report.untrained_loss);
    if (oracle) std::printf(", analytic optimum %.6f", report.oracle_loss);
    std::printf(")\n");
    return 0;
}

// ---- train-upsampler ----

const std::set<std::string> kTrainUpsamplerKeys{"codec", "alpha", "c",    "size",   "pairs",
                                                "epochs", "lr",   "seed", "out_dir"};

int cmd_train_upsampler(const std::string& config_path) {
    Config cfg = parse_config(config_path, kTrainUpsamplerKeys);
    std::unique_ptr<Codec> codec = load_codec(cfg.str_or("codec", "identity"));
    GrfSpec spec = GrfSpec::power_law(static_cast<int>(cfg.integer("size")), cfg.real_or("alpha", 2.0),
                                      cfg.real_or("c", 1.0));
    int pairs = static_cast<int>(cfg.integer_or("pairs", 512));
    int epochs = static_cast<int>(cfg.integer_or("epochs", 10));
    double lr = cfg.real_or("lr", 1e-3);
    Rng rng(static_cast<uint64_t>(cfg.integer_or("seed", 0)));
    std::string out_dir = cfg.str("out_dir");

    ResnetUpsampler model(codec->latent_channels(), 32, 3, rng);
    UpsamplerReport report = train_upsampler(model, *codec, spec, pairs, epochs, lr, rng);
    ensure_dir(out_dir);
    model.save(out_dir + "/upsampler");
    write_upsampler_report_csv(out_dir + "/upsampler_report.csv", report);
    std::printf("holdout mse %.6f, bilinear %.6f", report.holdout_mse, report.bilinear_mse);
    if (report.oracle_mse >= 0.0) std::printf(", oracle %.6f", report.oracle_mse);
    std::printf(", win rate %.3f\n", report.win_rate_vs_bilinear);
    return 0;
}

// ---- sample ----

const std::set<std::string> kSampleKeys{
    "min_resolution", "target_resolution", "base_resolution", "base_steps", "init_noise_level",
    "shorten_steps",  "shift",             "mode",            "scaling_method", "seed",
    "alpha",          "c",                 "codec",           "backbone",   "upsampler",
    "images",         "out_dir",           "stage_steps"};

struct SampleRun {
    std::unique_ptr<Codec> codec;
    std::unique_ptr<Backbone> backbone;
    std::unique_ptr<ResnetUpsampler> upsampler;
    SamplerConfig scfg;
    int images = 1;
    std::string out_dir;
    bool baseline = false;
    double alpha = 0.0, c = 0.0;
    bool has_field_spec = false;
};

SampleRun build_sample_run(const Config& cfg, bool baseline) {
    SampleRun run;
    run.baseline = baseline;
    run.codec = load_codec(cfg.str_or("codec", "identity"));

    run.scfg.target_resolution = static_cast<int>(cfg.integer("target_resolution"));
    run.scfg.min_resolution =
        baseline ? run.scfg.target_resolution : static_cast<int>(cfg.integer("min_resolution"));
    run.scfg.base_resolution =
        static_cast<int>(cfg.integer_or("base_resolution", run.scfg.target_resolution));
    run.scfg.base_steps = static_cast<int>(cfg.integer("base_steps"));
    run.scfg.sigma_init = cfg.real_or("init_noise_level", 0.75);
    run.scfg.shorten_steps = cfg.flag_or("shorten_steps", true);
    run.scfg.shift = cfg.flag_or("shift", false);
    run.scfg.scaling_method = scaling_method_from(cfg.str_or("scaling_method", "resnet_upsampler"));
    run.scfg.seed = static_cast<uint64_t>(cfg.integer_or("seed", 0));
    if (cfg.has("stage_steps") && !baseline) {
        for (const std::string& part : split(cfg.str("stage_steps"), ';')) {
            if (part.empty()) continue;
            run.scfg.stage_overrides.push_back(static_cast<int>(cfg.to_int("stage_steps", part)));
        }
    }
    run.images = static_cast<int>(cfg.integer_or("images", 1));
    if (run.images < 1) throw UsageError("images must be positive");
    run.out_dir = cfg.str("out_dir");
    run.alpha = cfg.real_or("alpha", 2.0);
    run.c = cfg.real_or("c", 1.0);
    run.has_field_spec = cfg.has("alpha");

    PredMode mode = pred_mode_from(cfg.str_or("mode", "fm"));
    std::string backbone_name = cfg.str_or("backbone", "analytic");
    if (backbone_name == "analytic") {
        if (run.codec->spatial_factor() != 1)
            throw UsageError("analytic backbone requires codec=identity");
        auto analytic = std::make_unique<AnalyticBackbone>(mode);
        GrfSpec spec = GrfSpec::power_law(run.scfg.target_resolution, run.alpha, run.c);
        analytic->register_spec(spec);
        for (int res = run.scfg.target_resolution / 2; res >= run.scfg.min_resolution; res /= 2) {
            spec = pooled_spec(spec);
            analytic->register_spec(spec);
        }
        run.backbone = std::move(analytic);
    } else {
        require_exists(backbone_name + "/manifest.txt", "backbone checkpoint");
        auto learned = std::make_unique<LearnedBackbone>(LearnedBackbone::load(backbone_name));
        if (learned->mode() != mode)
            throw UsageError("backbone checkpoint mode '" +
                             std::string(pred_mode_name(learned->mode())) +
                             "' does not match config mode");
        if (learned->channels() != run.codec->latent_channels())
            throw UsageError("backbone channels do not match codec latent channels");
        run.backbone = std::move(learned);
    }

    if (cfg.has("upsampler")) {
        std::string dir = cfg.str("upsampler");
        require_exists(dir + "/manifest.txt", "upsampler checkpoint");
        run.upsampler = std::make_unique<ResnetUpsampler>(ResnetUpsampler::load(dir));
    }
    return run;
}

struct SampleMetrics {
    int total_executed = 0;
    double planned_cost = 0.0;
    double spectrum_error = -1.0;
    double high_band_power = -1.0;
};

std::string plan_steps_string(const StagePlan& plan) {
    std::string s;
    for (size_t i = 0; i < plan.stages.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(plan.stages[i].executed_steps());
    }
    return s;
}

SampleMetrics run_sample(SampleRun& run, const Config& cfg) {
    ensure_dir(run.out_dir);
    SampleMetrics metrics;
    std::vector<Tensor> decoded;
    std::ostringstream report;
    report << "tool " << kToolVersion << "\n";
    report << "rng " << Rng::algorithm() << "\n";
    report << "run_mode " << (run.baseline ? "baseline" : "lssgen") << "\n";
    echo_config(report, cfg);

    StagePlan plan;
    for (int img = 0; img < run.images; ++img) {
        SamplerConfig scfg = run.scfg;
        scfg.seed = run.scfg.seed + static_cast<uint64_t>(img);
        SampleResult result = sample_lssgen(scfg, *run.backbone, run.upsampler.get(), *run.codec);
        plan = result.plan;

        char name[64];
        std::snprintf(name, sizeof(name), "image_%03d", img);
        char lname[64];
        std::snprintf(lname, sizeof(lname), "latent_%03d", img);
        PgmMapping mapping = save_pgm(run.out_dir + "/" + name + ".pgm", result.image);
        save_tensor(run.out_dir + "/" + lname + ".lst1", result.latent);
        if (img == 0) write_trajectory_csv(run.out_dir + "/trajectory.csv", result.traj);
        decoded.push_back(result.image);

        report << name << " seed " << scfg.seed << " pgm_lo " << mapping.lo << " pgm_hi " << mapping.hi
               << " path " << name << ".pgm\n";
        for (const StageRecord& sr : result.traj.stages)
            report << name << " stage " << sr.stage << " resolution " << sr.resolution << " planned "
                   << sr.planned_steps << " resume " << sr.resume_index << " executed "
                   << sr.executed_steps << " blend_variance " << sr.blend_variance << "\n";
    }

    for (const Stage& stage : plan.stages) metrics.total_executed += stage.executed_steps();
    CostReport cost = predict_plan_cost(desk_cost_params(), plan);
    metrics.planned_cost = cost.total;
    write_cost_report_csv(run.out_dir + "/cost_report.csv", cost);

    report << "plan steps " << plan_steps_string(plan) << "\n";
    report << "plan total_executed " << metrics.total_executed << "\n";
    report << "plan cost " << cost.total << "\n";
    report << "plan baseline_cost " << cost.baseline_total << "\n";
    report << "plan speedup " << cost.speedup << "\n";

    if (run.has_field_spec) {
        GrfSpec spec = GrfSpec::power_law(run.scfg.target_resolution, run.alpha, run.c);
        SpectralProfile got = radial_power_spectrum(decoded);
        SpectralProfile want = expected_profile(spec);
        metrics.spectrum_error = mean_band_error(got, want);
        metrics.high_band_power = got.power.back();
        report << "spectrum_error " << metrics.spectrum_error << "\n";
        report << "high_band_power " << metrics.high_band_power << "\n";
    }
    write_text_file(run.out_dir + "/run_report.txt", report.str());
    std::printf("plan steps: %s\n", plan_steps_string(plan).c_str());
    std::printf("wrote %d image(s) to %s\n", run.images, run.out_dir.c_str());
    return metrics;
}

int cmd_sample(const std::string& config_path, bool baseline) {
    Config cfg = parse_config(config_path, kSampleKeys);
    SampleRun run = build_sample_run(cfg, baseline);
    run_sample(run, cfg);
    return 0;
}

// ---- sweep ----

int cmd_sweep(const std::string& config_path, const std::string& param, const std::string& values) {
    static const std::set<std::string> sweepable{"init_noise_level", "shift", "scaling_method"};
    if (!sweepable.count(param))
        throw UsageError("sweep supports init_noise_level, shift, scaling_method; got '" + param + "'");
    Config base = parse_config(config_path, kSampleKeys);
    std::vector<std::string> vals = split(values, ',');
    if (vals.empty()) throw UsageError("sweep needs at least one value");
    std::string out_root = base.str("out_dir");
    ensure_dir(out_root);

    std::ofstream summary(out_root + "/sweep_summary.csv");
    if (!summary) throw std::runtime_error("cannot write sweep_summary.csv");
    summary << "param,value,total_executed_steps,planned_cost,spectrum_error,high_band_power\n";
    for (const std::string& v : vals) {
        Config cfg = base;
        cfg.kv[param] = v;
        cfg.kv["out_dir"] = out_root + "/" + param + "_" + v;
        SampleRun run = build_sample_run(cfg, false);
        SampleMetrics m = run_sample(run, cfg);
        summary << param << "," << v << "," << m.total_executed << "," << m.planned_cost << ","
                << m.spectrum_error << "," << m.high_band_power << "\n";
    }
    std::printf("sweep summary: %s/sweep_summary.csv\n", out_root.c_str());
    return 0;
}

// ---- analyze ----

int cmd_analyze(const std::string& batch_path, const std::string& out_path, double alpha, double c,
                bool has_spec) {
    std::vector<Tensor> batch = load_image_batch(batch_path);
    SpectralProfile profile = radial_power_spectrum(batch);

    std::ostringstream csv;
    csv << "band_lo,band_hi,power";
    const GrfSpec* specp = nullptr;
    GrfSpec spec;
    SpectralProfile want;
    if (has_spec) {
        spec = GrfSpec::power_law(batch[0].dim(batch[0].rank() - 1), alpha, c);
        want = expected_profile(spec);
        specp = &spec;
        csv << ",expected,rel_error";
    }
    csv << "\n";
    for (size_t b = 0; b < profile.power.size(); ++b) {
        csv << profile.band_lo[b] << "," << profile.band_hi[b] << "," << profile.power[b];
        if (specp) {
            double rel = std::abs(profile.power[b] - want.power[b]) / std::max(want.power[b], 1e-12);
            csv << "," << want.power[b] << "," << rel;
        }
        csv << "\n";
    }
    if (out_path.empty())
        std::fputs(csv.str().c_str(), stdout);
    else
        write_text_file(out_path, csv.str());
    return 0;
}

// ---- benchmark ----

struct TableRow {
    std::string model, method, source;
    std::vector<int> resolutions;
    std::vector<int> steps;
    double tflops = 0.0;
};

std::vector<TableRow> parse_cost_table(const std::string& path) {
    require_exists(path, "calibration table");
    std::istringstream in(read_text_file(path));
    std::string line;
    std::vector<TableRow> rows;
    bool header = true;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        if (header) {
            header = false;
            continue;
        }
        std::vector<std::string> cols = split(line, ',');
        if (cols.size() != 6) throw UsageError(path + ": expected 6 columns, got: " + line);
        TableRow row;
        row.model = cols[0];
        row.method = cols[1];
        for (const std::string& r : split(cols[2], ';')) row.resolutions.push_back(std::stoi(r));
        for (const std::string& s : split(cols[3], ';')) row.steps.push_back(std::stoi(s));
        row.tflops = std::stod(cols[4]);
        row.source = cols[5];
        if (row.resolutions.size() != row.steps.size())
            throw UsageError(path + ": resolution/step count mismatch in: " + line);
        rows.push_back(row);
    }
    if (rows.empty()) throw UsageError(path + ": no data rows");
    return rows;
}

int cmd_benchmark(const std::string& table_path, bool local) {
    std::vector<TableRow> rows = parse_cost_table(table_path);
    std::vector<std::string> models;
    for (const TableRow& r : rows)
        if (std::find(models.begin(), models.end(), r.model) == models.end()) models.push_back(r.model);

    for (const std::string& model : models) {
        const TableRow *base = nullptr, *two_stage = nullptr;
        std::vector<const TableRow*> others;
        for (const TableRow& r : rows) {
            if (r.model != model) continue;
            if (r.method == "baseline" && r.resolutions.size() == 1)
                base = &r;
            else if (!two_stage && r.resolutions.size() == 2)
                two_stage = &r;
            else
                others.push_back(&r);
        }
        if (!base || !two_stage) {
            std::printf("%s: need a baseline row and a two-stage row to calibrate, skipping\n",
                        model.c_str());
            continue;
        }
        int hi_res = base->resolutions[0];
        double per_hi = base->tflops / base->steps[0];
        int lo_res = 0, lo_steps = 0, hi_steps = 0;
        for (size_t i = 0; i < two_stage->resolutions.size(); ++i) {
            if (two_stage->resolutions[i] == hi_res)
                hi_steps = two_stage->steps[i];
            else {
                lo_res = two_stage->resolutions[i];
                lo_steps = two_stage->steps[i];
            }
        }
        if (lo_res == 0 || hi_steps == 0)
            throw UsageError(model + ": two-stage row must pair the baseline resolution with a lower one");
        double per_lo = (two_stage->tflops - hi_steps * per_hi) / lo_steps;

        CostParams params = fit_cost(
            {{CostParams{}.tokens_of(lo_res), per_lo}, {CostParams{}.tokens_of(hi_res), per_hi}});
        std::printf("%s: per-step %.4f @%d / %.4f @%d TFLOPs, fit a=%.6g b=%.6g%s\n", model.c_str(),
                    per_lo, lo_res, per_hi, hi_res, params.a, params.b,
                    params.near_linear ? " (near-linear, quadratic term clamped)" : "");

        auto predict = [&](const TableRow& r) {
            double total = 0.0;
            for (size_t i = 0; i < r.resolutions.size(); ++i)
                total += r.steps[i] * params.step_cost(r.resolutions[i]);
            return total;
        };
        std::printf("  %-14s %10s %10s %7s\n", "method", "reported", "predicted", "err%");
        for (const TableRow* r : others) {
            double pred = predict(*r);
            double err = 100.0 * std::abs(pred - r->tflops) / r->tflops;
            std::printf("  %-14s %10.1f %10.1f %6.2f%%\n", r->method.c_str(), r->tflops, pred, err);
        }
    }

    if (local) {
        // wall-time self-calibration with the analytic predictor; timings go
        // to stderr and no files are written
        IdentityCodec codec;
        AnalyticBackbone backbone(PredMode::Velocity);
        GrfSpec spec32 = GrfSpec::power_law(32, 2.0, 1.0);
        backbone.register_spec(spec32);
        backbone.register_spec(pooled_spec(spec32));

        auto time_single = [&](int res, int steps, uint64_t seed) {
            NoiseSchedule sched = build_schedule(steps, res, res, false);
            Rng rng(seed);
            return measure_wall_time(
                [&] { sample_single_stage(backbone, sched, {1, res, res}, rng); });
        };
        double per16 = time_single(16, 16, 1) / 16.0;
        double per32 = time_single(32, 16, 2) / 16.0;
        CostParams local_params;
        local_params.patch = 1;
        local_params.context_tokens = 0;
        local_params = fit_cost({{local_params.tokens_of(16), per16}, {local_params.tokens_of(32), per32}},
                                1, 0);

        SamplerConfig scfg;
        scfg.min_resolution = 16;
        scfg.target_resolution = 32;
        scfg.base_resolution = 32;
        scfg.base_steps = 16;
        scfg.scaling_method = ScalingMethod::LatentBilinear;
        scfg.seed = 3;
        StagePlan plan = plan_stages(16, 32, 32, 16, scfg.sigma_init, true);
        CostReport report = predict_plan_cost(local_params, plan);

        double t_two = measure_wall_time([&] { sample_lssgen(scfg, backbone, nullptr, codec); });
        double t_base = time_single(32, 16, 4);
        std::fprintf(stderr, "local fit: a=%.3e b=%.3e (per-step %.3e @16, %.3e @32 s)\n",
                     local_params.a, local_params.b, per16, per32);
        std::fprintf(stderr, "predicted speedup %.3f, measured %.3f (%.4fs vs %.4fs)\n",
                     report.speedup, t_base / t_two, t_two, t_base);
    }
    return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"progressive-resolution latent sampling toolkit"};
    app.require_subcommand(1);

    std::string config_path, param, values, batch_path, out_path, table_path;
    double alpha = 2.0, c = 1.0;
    bool baseline = false, lssgen = false, local = false;

    CLI::App* gen = app.add_subcommand("gen-data", "generate a random-field dataset");
    gen->add_option("--config", config_path)->required();

    CLI::App* tae = app.add_subcommand("train-ae", "train the autoencoder codec");
    tae->add_option("--config", config_path)->required();

    CLI::App* tbb = app.add_subcommand("train-backbone", "train the denoising backbone");
    tbb->add_option("--config", config_path)->required();

    CLI::App* tup = app.add_subcommand("train-upsampler", "train the 2x latent upsampler");
    tup->add_option("--config", config_path)->required();

    CLI::App* smp = app.add_subcommand("sample", "generate images");
    smp->add_option("--config", config_path)->required();
    smp->add_flag("--baseline", baseline, "single-stage run at the target resolution");
    smp->add_flag("--lssgen", lssgen, "progressive multi-stage run (default)");

    CLI::App* swp = app.add_subcommand("sweep", "run a parameter ablation");
    swp->add_option("--config", config_path)->required();
    swp->add_option("--param", param)->required();
    swp->add_option("--values", values)->required();

    CLI::App* ana = app.add_subcommand("analyze", "radial power spectrum of a batch");
    ana->add_option("--spectrum", batch_path)->required();
    ana->add_option("--out", out_path);
    CLI::Option* ana_alpha = ana->add_option("--alpha", alpha);
    ana->add_option("--c", c);

    CLI::App* bench = app.add_subcommand("benchmark", "cost-model calibration");
    bench->add_option("--calibrate", table_path)->required();
    bench->add_flag("--local", local, "also time local runs against the fitted model");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) return cmd_gen_data(config_path);
        if (tae->parsed()) return cmd_train_ae(config_path);
        if (tbb->parsed()) return cmd_train_backbone(config_path);
        if (tup->parsed()) return cmd_train_upsampler(config_path);
        if (smp->parsed()) {
            if (baseline && lssgen) throw UsageError("--baseline and --lssgen are mutually exclusive");
            return cmd_sample(config_path, baseline);
        }
        if (swp->parsed()) return cmd_sweep(config_path, param, values);
        if (ana->parsed()) return cmd_analyze(batch_path, out_path, alpha, c, !ana_alpha->empty());
        if (bench->parsed()) return cmd_benchmark(table_path, local);
        throw UsageError("no subcommand given");
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 3;
    }
}

}  // namespace lss
