#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "s2s/baselines.hpp"
#include "s2s/checkpoint.hpp"
#include "s2s/image_io.hpp"
#include "s2s/manifest.hpp"
#include "s2s/metrics.hpp"
#include "s2s/msp.hpp"
#include "s2s/simulate.hpp"
#include "s2s/svd.hpp"
#include "s2s/toml.hpp"
#include "s2s/train.hpp"
#include "s2s/version.hpp"

// Command implementations behind the s2s tool. Each command owns one run
// directory: it takes the directory lock, writes its artifacts, and drops a
// manifest recording the command line, effective config, seeds, and artifact
// hashes. Rerunning the recorded command line reproduces the artifacts
// byte-identically.

namespace s2s::run {

// Thrown after a training abort has already written its last-good artifacts;
// the driver maps it to its own exit code.
struct TrainAborted : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string fmt_idx(const char* stem, int i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%04d.png", stem, i);
    return buf;
}

inline bool is_image_name(const std::string& n) {
    auto ends = [&](const char* e) {
        const std::size_t m = std::string(e).size();
        return n.size() > m && n.compare(n.size() - m, m, e) == 0;
    };
    return ends(".png") || ends(".pgm") || ends(".pnm");
}

// Sorted image basenames in dir.
inline std::vector<std::string> list_images(const std::string& dir) {
    if (!std::filesystem::is_directory(dir))
        throw std::invalid_argument("not a directory: " + dir);
    std::vector<std::string> names;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && is_image_name(e.path().filename().string()))
            names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    return names;
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

// ---- name mappings shared by CLI flags and config files ------------------

inline img::InterpKind interp_from_name(const std::string& s) {
    if (s == "bilinear") return img::InterpKind::Bilinear;
    if (s == "bicubic") return img::InterpKind::Bicubic;
    if (s == "area") return img::InterpKind::Area;
    throw std::invalid_argument("unknown interpolation kind: " + s);
}

inline std::string interp_name(img::InterpKind k) {
    switch (k) {
        case img::InterpKind::Bilinear: return "bilinear";
        case img::InterpKind::Area: return "area";
        case img::InterpKind::Bicubic: return "bicubic";
    }
    throw std::logic_error("unreachable");
}

inline train::LossConfig loss_from_cli(const std::string& s) {
    if (s == "mse_l1") return train::LossConfig::MseRecL1Con;
    if (s == "mse_mse") return train::LossConfig::MseRecMseCon;
    if (s == "l1_l1") return train::LossConfig::L1RecL1Con;
    if (s == "mse_only") return train::LossConfig::MseRecOnly;
    if (s == "l1_mse") return train::LossConfig::L1RecMseCon;
    return train::loss_config_from_name(s);
}

inline train::BranchConfig branches_from_cli(const std::string& s) {
    if (s == "one") return train::BranchConfig::OneEncoder;
    return train::branch_config_from_name(s);
}

inline train::TrainMode mode_from_cli(const std::string& s) {
    if (s == "s2s") return train::TrainMode::Speckle2Self;
    if (s == "n2t") return train::TrainMode::Noise2True;
    if (s == "n2n") return train::TrainMode::Noise2Noise;
    return train::train_mode_from_name(s);
}

// ---- config plumbing ------------------------------------------------------

inline void check_keys(const toml::Table& t, const std::string& section,
                       const std::vector<std::string>& allowed) {
    for (const auto& k : t.keys()) {
        if (k.compare(0, section.size() + 1, section + ".") != 0) continue;
        const std::string leaf = k.substr(section.size() + 1);
        if (std::find(allowed.begin(), allowed.end(), leaf) == allowed.end())
            throw toml::TomlError("unknown key in [" + section + "]: " + leaf);
    }
}

inline std::vector<double> tilts_for(double range_deg, int n) {
    if (n < 1) throw std::invalid_argument("sim: n_compound must be >= 1");
    std::vector<double> t(static_cast<std::size_t>(n));
    if (n == 1) return t;  // single view, no steering
    for (int i = 0; i < n; ++i) t[i] = -range_deg + 2.0 * range_deg * i / (n - 1);
    return t;
}

struct DatasetSpec {
    int count = 16;
    std::string kind = "blobs";  // blobs | vessel
    std::uint64_t phantom_seed = 1000;
    double vessel_radius_frac = 0.18;
};

// Effective simulation settings: SimConfig plus the tilt fan parameter the
// config file exposes instead of an explicit angle list.
struct SimSpec {
    sim::SimConfig cfg;
    double tilt_range_deg = 2.0;

    void resolve_tilts() { cfg.tilt_angles_deg = tilts_for(tilt_range_deg, cfg.n_compound); }
};

inline SimSpec sim_spec_from_toml(const toml::Table& t) {
    SimSpec s;
    check_keys(t, "sim",
               {"f_c_mhz", "frac_bandwidth", "lateral_sigma_mm", "tilt_range_deg", "n_compound",
                "dynamic_range_db", "scatterer_density", "field_width_mm", "field_depth_mm",
                "grid_w", "grid_h"});
    auto& c = s.cfg;
    c.f_c_mhz = t.get_double("sim.f_c_mhz", c.f_c_mhz);
    c.frac_bandwidth = t.get_double("sim.frac_bandwidth", c.frac_bandwidth);
    c.lateral_sigma_mm = t.get_double("sim.lateral_sigma_mm", c.lateral_sigma_mm);
    s.tilt_range_deg = t.get_double("sim.tilt_range_deg", s.tilt_range_deg);
    c.n_compound = static_cast<int>(t.get_int("sim.n_compound", c.n_compound));
    c.dynamic_range_db = t.get_double("sim.dynamic_range_db", c.dynamic_range_db);
    c.scatterer_density = t.get_double("sim.scatterer_density", c.scatterer_density);
    c.field_width_mm = t.get_double("sim.field_width_mm", c.field_width_mm);
    c.field_depth_mm = t.get_double("sim.field_depth_mm", c.field_depth_mm);
    c.grid_w = static_cast<int>(t.get_int("sim.grid_w", c.grid_w));
    c.grid_h = static_cast<int>(t.get_int("sim.grid_h", c.grid_h));
    s.resolve_tilts();
    return s;
}

inline nlohmann::json sim_spec_json(const SimSpec& s) {
    const auto& c = s.cfg;
    return {{"f_c_mhz", c.f_c_mhz},
            {"frac_bandwidth", c.frac_bandwidth},
            {"lateral_sigma_mm", c.lateral_sigma_mm},
            {"tilt_range_deg", s.tilt_range_deg},
            {"n_compound", c.n_compound},
            {"dynamic_range_db", c.dynamic_range_db},
            {"scatterer_density", c.scatterer_density},
            {"field_width_mm", c.field_width_mm},
            {"field_depth_mm", c.field_depth_mm},
            {"grid_w", c.grid_w},
            {"grid_h", c.grid_h}};
}

inline double jnum(const nlohmann::json& j, const char* k, double dflt) {
    if (!j.contains(k)) return dflt;
    if (!j.at(k).is_number()) throw std::invalid_argument(std::string("config: ") + k + " must be a number");
    return j.at(k).get<double>();
}

inline SimSpec sim_spec_from_json(const nlohmann::json& j) {
    SimSpec s;
    auto& c = s.cfg;
    c.f_c_mhz = jnum(j, "f_c_mhz", c.f_c_mhz);
    c.frac_bandwidth = jnum(j, "frac_bandwidth", c.frac_bandwidth);
    c.lateral_sigma_mm = jnum(j, "lateral_sigma_mm", c.lateral_sigma_mm);
    s.tilt_range_deg = jnum(j, "tilt_range_deg", s.tilt_range_deg);
    c.n_compound = static_cast<int>(jnum(j, "n_compound", c.n_compound));
    c.dynamic_range_db = jnum(j, "dynamic_range_db", c.dynamic_range_db);
    c.scatterer_density = jnum(j, "scatterer_density", c.scatterer_density);
    c.field_width_mm = jnum(j, "field_width_mm", c.field_width_mm);
    c.field_depth_mm = jnum(j, "field_depth_mm", c.field_depth_mm);
    c.grid_w = static_cast<int>(jnum(j, "grid_w", c.grid_w));
    c.grid_h = static_cast<int>(jnum(j, "grid_h", c.grid_h));
    s.resolve_tilts();
    return s;
}

inline DatasetSpec dataset_spec_from_toml(const toml::Table& t) {
    DatasetSpec d;
    check_keys(t, "dataset", {"count", "kind", "phantom_seed", "vessel_radius_frac"});
    d.count = static_cast<int>(t.get_int("dataset.count", d.count));
    d.kind = t.get_string("dataset.kind", d.kind);
    d.phantom_seed = static_cast<std::uint64_t>(
        t.get_int("dataset.phantom_seed", static_cast<long long>(d.phantom_seed)));
    d.vessel_radius_frac = t.get_double("dataset.vessel_radius_frac", d.vessel_radius_frac);
    if (d.kind != "blobs" && d.kind != "vessel")
        throw std::invalid_argument("dataset.kind must be blobs or vessel");
    if (d.count < 1) throw std::invalid_argument("dataset.count must be >= 1");
    return d;
}

struct TrainSpec {
    train::TrainConfig cfg;
    nn::ArchConfig arch;
    int checkpoint_every = 0;            // 0 disables periodic checkpoints
    std::uint64_t n2n_seed_offset = 7777;
};

inline TrainSpec train_spec_from_toml(const toml::Table& t) {
    TrainSpec s;
    check_keys(t, "arch",
               {"base_channels", "enc_conv_blocks", "enc_res_blocks", "dec_conv_blocks",
                "dec_res_blocks"});
    check_keys(t, "train",
               {"mode", "loss", "branches", "interp", "lr", "batch_size", "epochs", "seed",
                "checkpoint_every", "n2n_seed_offset"});
    auto& a = s.arch;
    a.base_channels = static_cast<int>(t.get_int("arch.base_channels", a.base_channels));
    a.enc_conv_blocks = static_cast<int>(t.get_int("arch.enc_conv_blocks", a.enc_conv_blocks));
    a.enc_res_blocks = static_cast<int>(t.get_int("arch.enc_res_blocks", a.enc_res_blocks));
    a.dec_conv_blocks = static_cast<int>(t.get_int("arch.dec_conv_blocks", a.dec_conv_blocks));
    a.dec_res_blocks = static_cast<int>(t.get_int("arch.dec_res_blocks", a.dec_res_blocks));
    auto& c = s.cfg;
    c.mode = mode_from_cli(t.get_string("train.mode", train::train_mode_name(c.mode)));
    c.loss = loss_from_cli(t.get_string("train.loss", train::loss_config_name(c.loss)));
    c.branches = branches_from_cli(t.get_string("train.branches", train::branch_config_name(c.branches)));
    c.interp = interp_from_name(t.get_string("train.interp", interp_name(c.interp)));
    c.lr = t.get_double("train.lr", c.lr);
    c.batch_size = static_cast<int>(t.get_int("train.batch_size", c.batch_size));
    c.epochs = static_cast<int>(t.get_int("train.epochs", c.epochs));
    c.seed = static_cast<std::uint64_t>(t.get_int("train.seed", static_cast<long long>(c.seed)));
    s.checkpoint_every = static_cast<int>(t.get_int("train.checkpoint_every", s.checkpoint_every));
    s.n2n_seed_offset = static_cast<std::uint64_t>(
        t.get_int("train.n2n_seed_offset", static_cast<long long>(s.n2n_seed_offset)));
    return s;
}

inline nlohmann::json train_spec_json(const TrainSpec& s) {
    return {{"arch",
             {{"base_channels", s.arch.base_channels},
              {"enc_conv_blocks", s.arch.enc_conv_blocks},
              {"enc_res_blocks", s.arch.enc_res_blocks},
              {"dec_conv_blocks", s.arch.dec_conv_blocks},
              {"dec_res_blocks", s.arch.dec_res_blocks},
              {"n_branches", s.arch.n_branches}}},
            {"train",
             {{"mode", train::train_mode_name(s.cfg.mode)},
              {"loss", train::loss_config_name(s.cfg.loss)},
              {"branches", train::branch_config_name(s.cfg.branches)},
              {"interp", interp_name(s.cfg.interp)},
              {"lr", s.cfg.lr},
              {"batch_size", s.cfg.batch_size},
              {"epochs", s.cfg.epochs},
              {"seed", s.cfg.seed},
              {"checkpoint_every", s.checkpoint_every},
              {"n2n_seed_offset", s.n2n_seed_offset}}}};
}

// ---- run directory --------------------------------------------------------

struct RunDir {
    std::string dir;
    RunLock lock;
    RunManifest manifest;
    Timer timer;

    RunDir(const std::string& d, std::vector<std::string> cmdline)
        : dir((std::filesystem::create_directories(d), d)), lock(d) {
        manifest.cmdline = std::move(cmdline);
    }

    std::string path(const std::string& rel) const { return dir + "/" + rel; }

    void record(const std::string& rel) { manifest.artifacts[rel] = sha256_file(path(rel)); }

    void save_image(const img::Image& im, const std::string& rel) {
        img::save_image(im, path(rel));
        record(rel);
    }

    void save_model(const nn::Model<float>& m, const std::string& rel) {
        nn::save_checkpoint(m, path(rel));
        record(rel);
    }

    void save_csv(const std::string& rel, const std::string& header,
                  const std::vector<std::vector<std::string>>& rows) {
        write_csv(path(rel), header, rows);
        record(rel);
    }

    void finish() {
        manifest.wall_seconds = timer.seconds();
        write_manifest(dir, manifest);
    }
};

// Pairs a prediction name with its reference. A noisy_* name prefers its
// clean_* counterpart (so a dataset directory works directly as --ref);
// otherwise the exact name. Empty result means no reference.
inline std::string ref_name_for(const std::string& pred,
                                const std::vector<std::string>& ref_names) {
    if (pred.compare(0, 5, "noisy") == 0) {
        const std::string swapped = "clean" + pred.substr(5);
        if (std::find(ref_names.begin(), ref_names.end(), swapped) != ref_names.end())
            return swapped;
    }
    if (std::find(ref_names.begin(), ref_names.end(), pred) != ref_names.end()) return pred;
    return {};
}

inline img::Image plane_to_unit(const img::Plane& p) {
    double lo = p.data[0], hi = p.data[0];
    for (double v : p.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi > lo ? hi - lo : 1.0;
    std::vector<double> px(p.data.size());
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = (p.data[i] - lo) / span;
    return img::Image::from_clamped(p.width, p.height, px);
}

// Mean of a correlation matrix's off-diagonal entries, NaN entries skipped.
inline double mean_offdiag(const std::vector<double>& m, int k) {
    double sum = 0.0;
    int n = 0;
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            if (i == j || std::isnan(m[static_cast<std::size_t>(i) * k + j])) continue;
            sum += m[static_cast<std::size_t>(i) * k + j];
            ++n;
        }
    return n > 0 ? sum / n : std::nan("");
}

}  // namespace detail

// ---- simulate --------------------------------------------------------------

struct SimulateOpts {
    std::string targets;  // directory of clean targets; empty generates phantoms
    std::string config;   // TOML with [sim] and optional [dataset]; empty uses defaults
    std::string out;
    std::uint64_t seed = 42;
};

inline void cmd_simulate(const SimulateOpts& o, const std::vector<std::string>& cmdline) {
    toml::Table t;
    if (!o.config.empty()) t = toml::parse_file(o.config);
    detail::SimSpec spec = detail::sim_spec_from_toml(t);
    detail::DatasetSpec ds = detail::dataset_spec_from_toml(t);
    spec.cfg.validate();

    std::vector<img::Image> targets;
    std::vector<std::vector<std::uint8_t>> masks;
    if (!o.targets.empty()) {
        for (const auto& name : detail::list_images(o.targets))
            targets.push_back(img::load_image(o.targets + "/" + name));
        if (targets.empty()) throw std::invalid_argument("no images found in " + o.targets);
    } else if (ds.kind == "vessel") {
        masks.resize(static_cast<std::size_t>(ds.count));
        for (int i = 0; i < ds.count; ++i)
            targets.push_back(sim::make_vessel_phantom(spec.cfg.grid_w, spec.cfg.grid_h,
                                                       ds.vessel_radius_frac, &masks[i]));
    } else {
        for (int i = 0; i < ds.count; ++i)
            targets.push_back(sim::make_phantom(spec.cfg.grid_w, spec.cfg.grid_h,
                                                ds.phantom_seed + static_cast<std::uint64_t>(i)));
    }

    detail::RunDir run(o.out, cmdline);
    run.manifest.config = {{"sim", detail::sim_spec_json(spec)},
                           {"dataset",
                            {{"count", static_cast<int>(targets.size())},
                             {"kind", ds.kind},
                             {"phantom_seed", ds.phantom_seed},
                             {"vessel_radius_frac", ds.vessel_radius_frac},
                             {"targets", o.targets}}}};

    for (std::size_t i = 0; i < targets.size(); ++i) {
        sim::SimConfig cfg = spec.cfg;
        cfg.seed = o.seed + i;
        run.manifest.seeds.push_back(cfg.seed);
        img::Image clean = targets[i].width() == cfg.grid_w && targets[i].height() == cfg.grid_h
                               ? targets[i]
                               : img::resize(targets[i], cfg.grid_w, cfg.grid_h, img::InterpKind::Area);
        run.save_image(clean, detail::fmt_idx("clean", static_cast<int>(i)));
        run.save_image(sim::simulate_bmode(targets[i], cfg), detail::fmt_idx("noisy", static_cast<int>(i)));
        if (!masks.empty()) {
            std::vector<double> px(masks[i].begin(), masks[i].end());
            run.save_image(img::Image(cfg.grid_w, cfg.grid_h, std::move(px)),
                           detail::fmt_idx("mask", static_cast<int>(i)));
        }
    }
    run.finish();
    std::printf("simulate: wrote %zu clean/noisy pairs to %s\n", targets.size(), run.dir.c_str());
}

// ---- train -----------------------------------------------------------------

struct TrainOpts {
    std::string data;
    std::string config;
    std::string out;
    // CLI overrides; empty / negative means "use the config file value"
    std::string mode, loss, branches, interp;
    double lr = -1.0;
    int batch = -1;
    int epochs = -1;
    long long seed = -1;
    int checkpoint_every = -1;
};

namespace detail {

struct LoadedDataset {
    std::vector<std::string> noisy_names;
    train::TrainData data;
};

inline LoadedDataset load_train_data(const std::string& dir, const TrainSpec& spec) {
    LoadedDataset ld;
    std::vector<std::string> all = list_images(dir);
    for (const auto& n : all)
        if (n.compare(0, 5, "noisy") == 0) ld.noisy_names.push_back(n);
    const bool named_pairs = !ld.noisy_names.empty();
    if (!named_pairs) ld.noisy_names = all;  // a bare directory of observations
    if (ld.noisy_names.empty()) throw std::invalid_argument("no training images in " + dir);
    for (const auto& n : ld.noisy_names) ld.data.noisy.push_back(img::load_image(dir + "/" + n));

    if (spec.cfg.mode == train::TrainMode::Noise2True) {
        if (!named_pairs)
            throw std::invalid_argument("noise2true needs clean_/noisy_ pairs in " + dir);
        for (const auto& n : ld.noisy_names) {
            const std::string clean = "clean" + n.substr(5);
            if (!std::filesystem::exists(dir + "/" + clean))
                throw std::invalid_argument("missing clean pair for " + n);
            ld.data.targets.push_back(img::load_image(dir + "/" + clean));
        }
    } else if (spec.cfg.mode == train::TrainMode::Noise2Noise) {
        if (!named_pairs)
            throw std::invalid_argument("noise2noise needs a simulated dataset in " + dir);
        if (spec.n2n_seed_offset == 0)
            std::fputs("warning: n2n_seed_offset is 0; paired observations share seeds and are not independent\n",
                       stderr);
        RunManifest dm = read_manifest(dir + "/manifest.json");
        if (!dm.config.contains("sim"))
            throw std::invalid_argument("dataset manifest lacks a sim config; cannot draw second observations");
        SimSpec sim_spec = sim_spec_from_json(dm.config.at("sim"));
        if (dm.seeds.size() < ld.noisy_names.size())
            throw std::invalid_argument("dataset manifest records fewer seeds than images");
        ld.data.targets.resize(ld.data.noisy.size(), img::Image(1, 1));
        std::vector<img::Image> cleans;
        for (const auto& n : ld.noisy_names)
            cleans.push_back(img::load_image(dir + "/clean" + n.substr(5)));
        for (std::size_t i = 0; i < cleans.size(); ++i) {
            sim::SimConfig c2 = sim_spec.cfg;
            c2.seed = dm.seeds[i] + spec.n2n_seed_offset;
            ld.data.targets[i] = sim::simulate_bmode(cleans[i], c2);
        }
    }
    return ld;
}

}  // namespace detail

inline void cmd_train(const TrainOpts& o, const std::vector<std::string>& cmdline) {
    toml::Table t;
    if (!o.config.empty()) t = toml::parse_file(o.config);
    detail::TrainSpec spec = detail::train_spec_from_toml(t);
    if (!o.mode.empty()) spec.cfg.mode = detail::mode_from_cli(o.mode);
    if (!o.loss.empty()) spec.cfg.loss = detail::loss_from_cli(o.loss);
    if (!o.branches.empty()) spec.cfg.branches = detail::branches_from_cli(o.branches);
    if (!o.interp.empty()) spec.cfg.interp = detail::interp_from_name(o.interp);
    if (o.lr > 0.0) spec.cfg.lr = o.lr;
    if (o.batch > 0) spec.cfg.batch_size = o.batch;
    if (o.epochs > 0) spec.cfg.epochs = o.epochs;
    if (o.seed >= 0) spec.cfg.seed = static_cast<std::uint64_t>(o.seed);
    if (o.checkpoint_every >= 0) spec.checkpoint_every = o.checkpoint_every;
    spec.cfg.validate();
    spec.arch.n_branches = spec.cfg.mode == train::TrainMode::Speckle2Self
                               ? train::n_branches_for(spec.cfg.branches)
                               : 1;
    spec.arch.validate();

    detail::LoadedDataset ld = detail::load_train_data(o.data, spec);

    detail::RunDir run(o.out, cmdline);
    run.manifest.config = detail::train_spec_json(spec);
    run.manifest.config["data"] = o.data;
    run.manifest.seeds = {spec.cfg.seed};

    nn::Model<float> model = nn::build_model<float>(spec.arch, spec.cfg.seed);
    const int print_every = std::max(1, spec.cfg.epochs / 10);
    train::TrainCallbacks cb;
    cb.on_epoch = [&](const train::TrainHistoryRow& r, const nn::Model<float>& m) {
        if (r.epoch == 1 || r.epoch % print_every == 0 || r.epoch == spec.cfg.epochs)
            std::printf("epoch %d/%d loss %.6f\n", r.epoch, spec.cfg.epochs, r.total_loss);
        if (spec.checkpoint_every > 0 && r.epoch % spec.checkpoint_every == 0 &&
            r.epoch < spec.cfg.epochs) {
            char buf[48];
            std::snprintf(buf, sizeof buf, "model_epoch_%04d.s2s", r.epoch);
            run.save_model(m, buf);
        }
    };

    auto write_history = [&](const train::TrainHistory& h) {
        std::ofstream os(run.path("history.csv"));
        h.write_csv(os);
        os.close();
        run.record("history.csv");
    };

    try {
        train::TrainHistory hist = train::train(model, ld.data, spec.cfg, cb);
        run.save_model(model, "model.s2s");
        write_history(hist);
        run.finish();
        std::printf("train: %d epochs on %zu images, final loss %.6f -> %s\n", spec.cfg.epochs,
                    ld.data.noisy.size(), hist.rows.back().total_loss, run.path("model.s2s").c_str());
    } catch (const train::AbortError& e) {
        run.save_model(e.last_good, "model_lastgood.s2s");
        write_history(e.history);
        run.manifest.config["aborted"] = e.what();
        run.finish();
        throw TrainAborted(e.what());
    }
}

// ---- denoise ---------------------------------------------------------------

struct DenoiseOpts {
    std::string model;
    std::string input;  // image file or directory
    std::string out;
};

inline void cmd_denoise(const DenoiseOpts& o, const std::vector<std::string>& cmdline) {
    nn::Model<float> model = nn::load_checkpoint(o.model);
    std::vector<std::pair<std::string, std::string>> inputs;  // path, output name
    if (std::filesystem::is_directory(o.input)) {
        for (const auto& n : detail::list_images(o.input)) inputs.emplace_back(o.input + "/" + n, n);
        if (inputs.empty()) throw std::invalid_argument("no images found in " + o.input);
    } else {
        if (!std::filesystem::exists(o.input))
            throw std::invalid_argument("no such input: " + o.input);
        inputs.emplace_back(o.input, std::filesystem::path(o.input).filename().string());
    }

    detail::RunDir run(o.out, cmdline);
    run.manifest.config = {{"model", o.model}, {"input", o.input}};
    for (const auto& [path, name] : inputs)
        run.save_image(train::denoise(model, img::load_image(path)), name);
    run.finish();
    std::printf("denoise: wrote %zu images to %s\n", inputs.size(), run.dir.c_str());
}

// ---- eval --------------------------------------------------------------------

struct EvalOpts {
    std::string pred;
    std::string ref;
    std::string out;
};

inline void cmd_eval(const EvalOpts& o, const std::vector<std::string>& cmdline) {
    const std::vector<std::string> pred_names = detail::list_images(o.pred);
    const std::vector<std::string> ref_names = detail::list_images(o.ref);
    if (pred_names.empty()) throw std::invalid_argument("no images found in " + o.pred);

    detail::RunDir run(o.out, cmdline);
    run.manifest.config = {{"pred", o.pred}, {"ref", o.ref}};
    std::vector<std::vector<std::string>> rows;
    double sum_ssim = 0.0, sum_psnr = 0.0, sum_hp = 0.0, sum_hr = 0.0;
    int n_ok = 0;
    for (const auto& name : pred_names) {
        const std::string rn = detail::ref_name_for(name, ref_names);
        if (rn.empty()) {
            rows.push_back({name, "nan", "nan", "nan", "nan", "missing_ref"});
            continue;
        }
        const img::Image p = img::load_image(o.pred + "/" + name);
        const img::Image r = img::load_image(o.ref + "/" + rn);
        if (p.width() != r.width() || p.height() != r.height()) {
            rows.push_back({name, "nan", "nan", "nan", "nan", "dim_mismatch"});
            continue;
        }
        const double s = metrics::ssim(p, r);
        const double q = metrics::psnr(p, r);
        const double hp = metrics::glcm_homogeneity(p);
        const double hr = metrics::glcm_homogeneity(r);
        rows.push_back({name, fmt_g(s), fmt_g(q), fmt_g(hp), fmt_g(hr), "ok"});
        sum_ssim += s;
        sum_psnr += q;
        sum_hp += hp;
        sum_hr += hr;
        ++n_ok;
    }
    if (n_ok > 0)
        rows.push_back({"mean", fmt_g(sum_ssim / n_ok), fmt_g(sum_psnr / n_ok), fmt_g(sum_hp / n_ok),
                        fmt_g(sum_hr / n_ok), "ok"});
    run.save_csv("eval.csv", "image,ssim,psnr,hom_pred,hom_ref,status", rows);
    run.finish();
    std::printf("eval: %d/%zu pairs scored -> %s\n", n_ok, pred_names.size(),
                run.path("eval.csv").c_str());
}

// ---- analyze ----------------------------------------------------------------

struct FreqOpts {
    std::string input;
    std::string out;
    int mask = 0;  // 0 picks the default for the image size
    std::string interp = "bilinear";
};

inline void cmd_analyze_freq(const FreqOpts& o, const std::vector<std::string>& cmdline) {
    const std::vector<std::string> names = detail::list_images(o.input);
    if (names.empty()) throw std::invalid_argument("no images found in " + o.input);
    const img::InterpKind kind = detail::interp_from_name(o.interp);
    const std::vector<double> scales = {1.0, 0.5, 0.25};
    const std::vector<int> ksizes = {1, 5, 9};
    const int K = 3;

    detail::RunDir run(o.out, cmdline);
    run.manifest.config = {{"input", o.input}, {"mask", o.mask}, {"interp", o.interp}};

    std::vector<double> sums[4];  // msp low/high, lpf low/high
    std::vector<int> counts[4];
    for (auto& s : sums) s.assign(static_cast<std::size_t>(K) * K, 0.0);
    for (auto& c : counts) c.assign(static_cast<std::size_t>(K) * K, 0);
    auto accumulate = [&](int slot, const std::vector<double>& m) {
        for (std::size_t i = 0; i < m.size(); ++i)
            if (!std::isnan(m[i])) {
                sums[slot][i] += m[i];
                ++counts[slot][i];
            }
    };

    bool first = true;
    for (const auto& name : names) {
        const img::Image im = img::load_image(o.input + "/" + name);
        const int m = o.mask > 0 ? o.mask : msp::default_mask_half_width(im.width(), im.height());
        const msp::CorrReport rm = msp::cross_scale_corr(msp::msp_variants(im, scales, kind), m);
        const msp::CorrReport rl = msp::cross_scale_corr(msp::lpf_variants(im, ksizes), m);
        accumulate(0, rm.low_corr);
        accumulate(1, rm.high_corr);
        accumulate(2, rl.low_corr);
        accumulate(3, rl.high_corr);
        if (first) {
            const msp::BandPair bp = msp::band_split(im, m);
            run.save_image(detail::plane_to_unit(bp.low), "band_low.png");
            run.save_image(detail::plane_to_unit(bp.high), "band_high.png");
            first = false;
        }
    }

    const char* files[4] = {"msp_low_corr.csv", "msp_high_corr.csv", "lpf_low_corr.csv",
                            "lpf_high_corr.csv"};
    std::vector<std::string> labels[2];
    for (double s : scales) labels[0].push_back("s" + fmt_g(s));
    for (int k : ksizes) labels[1].push_back("k" + std::to_string(k));
    std::vector<double> means[4];
    for (int f = 0; f < 4; ++f) {
        means[f].assign(static_cast<std::size_t>(K) * K, std::nan(""));
        for (std::size_t i = 0; i < means[f].size(); ++i)
            if (counts[f][i] > 0) means[f][i] = sums[f][i] / counts[f][i];
        const auto& lab = labels[f / 2];
        std::string header = "variant";
        for (const auto& l : lab) header += "," + l;
        std::vector<std::vector<std::string>> rows;
        for (int i = 0; i < K; ++i) {
            std::vector<std::string> row = {lab[i]};
            for (int j = 0; j < K; ++j) row.push_back(fmt_g(means[f][static_cast<std::size_t>(i) * K + j]));
            rows.push_back(std::move(row));
        }
        run.save_csv(files[f], header, rows);
    }
    run.save_csv("summary.csv", "method,band,mean_offdiag",
                 {{"msp", "low", fmt_g(detail::mean_offdiag(means[0], K))},
                  {"msp", "high", fmt_g(detail::mean_offdiag(means[1], K))},
                  {"lpf", "low", fmt_g(detail::mean_offdiag(means[2], K))},
                  {"lpf", "high", fmt_g(detail::mean_offdiag(means[3], K))}});
    run.finish();
    std::printf("analyze freq: %zu images -> %s\n", names.size(), run.path("summary.csv").c_str());
}

struct SvdOpts {
    std::string input;
    std::string out;
    int patch = 48;
    int topk = 5;
};

inline void cmd_analyze_svd(const SvdOpts& o, const std::vector<std::string>& cmdline) {
    if (o.patch < 2) throw std::invalid_argument("svd: patch must be >= 2");
    if (o.topk < 1) throw std::invalid_argument("svd: topk must be >= 1");
    const std::vector<std::string> names = detail::list_images(o.input);
    if (names.empty()) throw std::invalid_argument("no images found in " + o.input);

    detail::RunDir run(o.out, cmdline);
    run.manifest.config = {{"input", o.input}, {"patch", o.patch}, {"topk", o.topk}};
    std::vector<std::vector<std::string>> spec_rows, sum_rows;
    double sum_frac = 0.0;
    int n_ok = 0;
    for (const auto& name : names) {
        const img::Image im = img::load_image(o.input + "/" + name);
        if (im.width() < o.patch || im.height() < o.patch) {
            sum_rows.push_back({name, "nan", "too_small"});
            continue;
        }
        const int x0 = (im.width() - o.patch) / 2, z0 = (im.height() - o.patch) / 2;
        const metrics::SingularSpectrum sp =
            metrics::singular_spectrum(img::extract_patch(im, x0, z0, o.patch, o.patch));
        for (std::size_t i = 0; i < sp.values.size(); ++i)
            spec_rows.push_back({name, std::to_string(i), fmt_g(sp.values[i])});
        const double frac = metrics::spectral_energy_topk(sp, o.topk);
        sum_rows.push_back({name, fmt_g(frac), "ok"});
        sum_frac += frac;
        ++n_ok;
    }
    if (n_ok > 0) sum_rows.push_back({"mean", fmt_g(sum_frac / n_ok), "ok"});
    run.save_csv("spectra.csv", "image,index,sigma", spec_rows);
    run.save_csv("svd_summary.csv", "image,topk_energy,status", sum_rows);
    run.finish();
    std::printf("analyze svd: %d/%zu patches -> %s\n", n_ok, names.size(),
                run.path("svd_summary.csv").c_str());
}

// ---- ablate ------------------------------------------------------------------

struct AblateOpts {
    std::string suite;  // loss | interp | scales
    std::string data;
    std::string config;
    std::string out;
};

inline void cmd_ablate(const AblateOpts& o, const std::vector<std::string>& cmdline) {
    toml::Table t;
    if (!o.config.empty()) t = toml::parse_file(o.config);
    detail::TrainSpec base = detail::train_spec_from_toml(t);
    base.cfg.validate();

    struct Variant {
        std::string label;
        train::TrainConfig cfg;
    };
    std::vector<Variant> variants;
    if (o.suite == "loss") {
        for (train::LossConfig l :
             {train::LossConfig::MseRecL1Con, train::LossConfig::MseRecMseCon,
              train::LossConfig::L1RecL1Con, train::LossConfig::MseRecOnly,
              train::LossConfig::L1RecMseCon}) {
            Variant v{train::loss_config_name(l), base.cfg};
            v.cfg.loss = l;
            variants.push_back(std::move(v));
        }
    } else if (o.suite == "interp") {
        for (img::InterpKind k : {img::InterpKind::Bilinear, img::InterpKind::Bicubic}) {
            Variant v{detail::interp_name(k), base.cfg};
            v.cfg.interp = k;
            variants.push_back(std::move(v));
        }
    } else if (o.suite == "scales") {
        for (train::BranchConfig b :
             {train::BranchConfig::HML, train::BranchConfig::HL, train::BranchConfig::ML,
              train::BranchConfig::HM, train::BranchConfig::OneEncoder}) {
            Variant v{train::branch_config_name(b), base.cfg};
            v.cfg.branches = b;
            variants.push_back(std::move(v));
        }
    } else {
        throw std::invalid_argument("unknown ablation suite: " + o.suite +
                                    " (expected loss, interp, or scales)");
    }

    // Held-out split: last fifth (at least one image) is never trained on.
    std::vector<std::string> all = detail::list_images(o.data);
    std::vector<std::string> noisy_names;
    for (const auto& n : all)
        if (n.compare(0, 5, "noisy") == 0) noisy_names.push_back(n);
    if (noisy_names.size() < 2)
        throw std::invalid_argument("ablate: need at least two noisy_/clean_ pairs in " + o.data);
    const std::size_t n_eval = std::max<std::size_t>(1, noisy_names.size() / 5);
    const std::size_t n_train = noisy_names.size() - n_eval;
    train::TrainData train_data;
    std::vector<img::Image> eval_noisy, eval_clean;
    for (std::size_t i = 0; i < noisy_names.size(); ++i) {
        const std::string clean = "clean" + noisy_names[i].substr(5);
        if (!std::filesystem::exists(o.data + "/" + clean))
            throw std::invalid_argument("missing clean pair for " + noisy_names[i]);
        if (i < n_train) {
            train_data.noisy.push_back(img::load_image(o.data + "/" + noisy_names[i]));
        } else {
            eval_noisy.push_back(img::load_image(o.data + "/" + noisy_names[i]));
            eval_clean.push_back(img::load_image(o.data + "/" + clean));
        }
    }

    detail::RunDir run(o.out, cmdline);
    run.manifest.config = detail::train_spec_json(base);
    run.manifest.config["suite"] = o.suite;
    run.manifest.config["data"] = o.data;
    run.manifest.config["n_train"] = n_train;
    run.manifest.config["n_eval"] = n_eval;
    run.manifest.seeds = {base.cfg.seed};

    struct Row {
        std::string label;
        double ssim, psnr, hom;
    };
    std::vector<Row> results;
    for (const auto& v : variants) {
        nn::ArchConfig arch = base.arch;
        arch.n_branches = train::n_branches_for(v.cfg.branches);
        nn::Model<float> model = nn::build_model<float>(arch, v.cfg.seed);
        const train::TrainHistory hist = train::train(model, train_data, v.cfg);
        std::filesystem::create_directories(run.path(v.label));
        run.save_model(model, v.label + "/model.s2s");
        {
            std::ofstream os(run.path(v.label + "/history.csv"));
            hist.write_csv(os);
        }
        run.record(v.label + "/history.csv");
        double s = 0.0, q = 0.0, h = 0.0;
        for (std::size_t i = 0; i < eval_noisy.size(); ++i) {
            const img::Image den = train::denoise(model, eval_noisy[i]);
            s += metrics::ssim(den, eval_clean[i]);
            q += metrics::psnr(den, eval_clean[i]);
            h += metrics::glcm_homogeneity(den);
        }
        const double inv = 1.0 / static_cast<double>(eval_noisy.size());
        results.push_back({v.label, s * inv, q * inv, h * inv});
        std::printf("ablate %s: %s mean ssim %.4f\n", o.suite.c_str(), v.label.c_str(), s * inv);
    }

    std::stable_sort(results.begin(), results.end(),
                     [](const Row& a, const Row& b) { return a.ssim > b.ssim; });
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < results.size(); ++i)
        rows.push_back({std::to_string(i + 1), results[i].label, fmt_g(results[i].ssim),
                        fmt_g(results[i].psnr), fmt_g(results[i].hom)});
    run.save_csv("summary.csv", "rank,variant,mean_ssim,mean_psnr,mean_homogeneity", rows);
    run.finish();
    std::printf("ablate %s: winner %s -> %s\n", o.suite.c_str(), results.front().label.c_str(),
                run.path("summary.csv").c_str());
}

// ---- baseline ----------------------------------------------------------------

struct BaselineOpts {
    std::string method;  // srad | nlm
    std::string input;
    std::string ref;     // optional reference directory for ssim/psnr columns
    std::string config;  // optional TOML with [srad] / [nlm]
    std::string out;
};

inline void cmd_baseline(const BaselineOpts& o, const std::vector<std::string>& cmdline) {
    if (o.method != "srad" && o.method != "nlm")
        throw std::invalid_argument("unknown baseline method: " + o.method +
                                    " (expected srad or nlm)");
    toml::Table t;
    if (!o.config.empty()) t = toml::parse_file(o.config);
    baseline::SradConfig srad_cfg;
    baseline::NlmConfig nlm_cfg;
    detail::check_keys(t, "srad", {"iterations", "dt", "roi"});
    detail::check_keys(t, "nlm", {"h", "patch", "window"});
    srad_cfg.iterations = static_cast<int>(t.get_int("srad.iterations", srad_cfg.iterations));
    srad_cfg.dt = t.get_double("srad.dt", srad_cfg.dt);
    if (t.has("srad.roi")) {
        const std::vector<double> r = t.get_doubles("srad.roi", {});
        if (r.size() != 4) throw std::invalid_argument("srad.roi must be [x, z, w, h]");
        srad_cfg.homogeneous_roi = {static_cast<int>(r[0]), static_cast<int>(r[1]),
                                    static_cast<int>(r[2]), static_cast<int>(r[3])};
    }
    nlm_cfg.h = t.get_double("nlm.h", nlm_cfg.h);
    nlm_cfg.patch = static_cast<int>(t.get_int("nlm.patch", nlm_cfg.patch));
    nlm_cfg.window = static_cast<int>(t.get_int("nlm.window", nlm_cfg.window));
    if (o.method == "srad") srad_cfg.validate();
    if (o.method == "nlm") nlm_cfg.validate();

    const std::vector<std::string> names = detail::list_images(o.input);
    if (names.empty()) throw std::invalid_argument("no images found in " + o.input);
    std::vector<std::string> ref_names;
    if (!o.ref.empty()) ref_names = detail::list_images(o.ref);

    detail::RunDir run(o.out, cmdline);
    run.manifest.config = {{"method", o.method}, {"input", o.input}, {"ref", o.ref}};
    if (o.method == "srad")
        run.manifest.config["srad"] = {{"iterations", srad_cfg.iterations}, {"dt", srad_cfg.dt}};
    else
        run.manifest.config["nlm"] = {{"h", nlm_cfg.h}, {"patch", nlm_cfg.patch}, {"window", nlm_cfg.window}};

    std::vector<std::vector<std::string>> rows;
    double sum_ssim = 0.0;
    int n_ref = 0;
    for (const auto& name : names) {
        const img::Image in = img::load_image(o.input + "/" + name);
        const img::Image out =
            o.method == "srad" ? baseline::srad(in, srad_cfg) : baseline::nlm(in, nlm_cfg);
        run.save_image(out, name);
        const double hi = metrics::glcm_homogeneity(in);
        const double ho = metrics::glcm_homogeneity(out);
        const std::string rn = detail::ref_name_for(name, ref_names);
        if (rn.empty()) {
            rows.push_back({o.method, name, fmt_g(hi), fmt_g(ho), "nan", "nan", "nan",
                            o.ref.empty() ? "no_ref" : "missing_ref"});
            continue;
        }
        const img::Image ref = img::load_image(o.ref + "/" + rn);
        const double si = metrics::ssim(in, ref);
        const double so = metrics::ssim(out, ref);
        rows.push_back({o.method, name, fmt_g(hi), fmt_g(ho), fmt_g(si), fmt_g(so),
                        fmt_g(metrics::psnr(out, ref)), "ok"});
        sum_ssim += so;
        ++n_ref;
    }
    run.save_csv("baseline.csv", "method,image,hom_in,hom_out,ssim_in,ssim_out,psnr_out,status",
                 rows);
    run.finish();
    if (n_ref > 0)
        std::printf("baseline %s: %zu images, mean ssim %.4f -> %s\n", o.method.c_str(),
                    names.size(), sum_ssim / n_ref, run.dir.c_str());
    else
        std::printf("baseline %s: %zu images -> %s\n", o.method.c_str(), names.size(),
                    run.dir.c_str());
}

}  // namespace s2s::run
