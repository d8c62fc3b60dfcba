// atmask: command-line front end for the texture-aware masking pipeline.
// Subcommands: phantom, preprocess, tvm, mask, pretrain-toy, eval-metrics,
// compare-masking. Exit code 0 on success; any failure prints a single
// "atmask: error: <message>" line on stderr and exits nonzero.

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "atmask/mask_gen.hpp"
#include "atmask/metrics.hpp"
#include "atmask/parallel.hpp"
#include "atmask/phantom.hpp"
#include "atmask/recon_toy.hpp"
#include "atmask/serialize.hpp"
#include "atmask/slice_render.hpp"
#include "atmask/texture_map.hpp"
#include "atmask/volume_io.hpp"

namespace {

using namespace atmask;

std::string fmt_g(double v) {
    char b[64];
    std::snprintf(b, sizeof b, "%.9g", v);
    return b;
}

std::string fmt_exact(double v) {
    char b[64];
    std::snprintf(b, sizeof b, "%.17g", v);
    return b;
}

std::string dims_str(const std::array<int, 3>& d) {
    return std::to_string(d[0]) + "x" + std::to_string(d[1]) + "x" + std::to_string(d[2]);
}

VariationMap map_from_volume(const Volume3D& v) {
    VariationMap m;
    m.dims = v.dims;
    m.data = v.data;
    m.normalized = true;
    return m;
}

Volume3D volume_from_map(const VariationMap& m, std::array<float, 3> spacing) {
    Volume3D v = make_volume(m.dims, spacing);
    v.data = m.data;
    return v;
}

// Zero-pad each axis up to the next multiple of patch_size.
Volume3D pad_to_patch(const Volume3D& v, int patch_size) {
    std::array<int, 3> nd;
    for (int a = 0; a < 3; ++a)
        nd[a] = ((v.dims[a] + patch_size - 1) / patch_size) * patch_size;
    if (nd == v.dims) return v;
    Volume3D out = make_volume(nd, v.spacing);
    for (int i0 = 0; i0 < v.dims[0]; ++i0)
        for (int i1 = 0; i1 < v.dims[1]; ++i1)
            for (int i2 = 0; i2 < v.dims[2]; ++i2)
                out.data[out.index(i0, i1, i2)] = v.data[v.index(i0, i1, i2)];
    return out;
}

// Volumes in a directory (*.raw, *.nii), sorted by filename.
std::vector<std::filesystem::path> volume_files(const std::string& dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const std::string ext = e.path().extension().string();
        if (ext == ".raw" || ext == ".nii") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty())
        throw std::runtime_error(dir + ": no .raw or .nii volumes found");
    return files;
}

struct PhantomArgs {
    std::string kind = "sphere_shell";
    std::vector<int> dims{64, 64, 64};
    std::vector<float> spacing{1.0f, 1.0f, 1.0f};
    std::vector<float> center;
    float radius = 10.0f;
    int axis = 0;
    float noise = 0.0f;
    std::vector<int> box_lo;
    std::vector<int> box_hi;
    float inside = 400.0f;
    float outside = -1000.0f;
    std::uint64_t seed = 0;
    std::string out;
    std::string label_out;
};

struct PreprocessArgs {
    std::string input, output;
    float hu_lo = -1000.0f, hu_hi = 500.0f;
    std::string normalization = "unit_range";
    float target_spacing = 0.0f;
};

struct TvmArgs {
    std::string input, output;
    TvmConfig cfg;
    std::string partial_group = "zero";
    std::string cue_norm = "slice";
};

struct MaskArgs {
    std::string tvm;
    std::string volume;
    int patch_size = 16;
    float ratio = 0.75f;
    float beta = 0.65f;
    float tau = 0.5f;
    std::string tau_mode = "absolute";
    std::uint64_t seed = 0;
    bool pad = false;
    float window_lo = 0.0f, window_hi = 1.0f;
    std::string out_patch_mask, out_voxel_mask, masked_out, render;
};

struct PretrainArgs {
    std::string data_dir;
    int steps = 200;
    float lr = 1e-2f;
    std::string optimizer = "sgd";
    std::uint64_t seed = 0;
    int embed_dim = 64;
    std::string masked_input = "token";
    float loss_eps = 1e-8f;
    TvmConfig tvm_cfg;
    std::string partial_group = "zero";
    std::string cue_norm = "slice";
    int patch_size = 16;
    float ratio = 0.75f;
    float beta = 0.65f;
    float tau = 0.5f;
    std::string tau_mode = "absolute";
    std::string out_weights, out_trace;
};

struct EvalArgs {
    std::string pred, gt;
    std::vector<float> spacing;
    double eps = 1e-8;
};

struct CompareArgs {
    std::string data_dir;
    std::vector<float> ratios{0.75f};
    std::vector<float> betas{0.0f, 0.65f};
    int num_seeds = 3;
    std::uint64_t seed_base = 0;
    int pretrain_steps = 0;
    float lr = 1e-2f;
    int embed_dim = 32;
    TvmConfig tvm_cfg;
    std::string partial_group = "zero";
    std::string cue_norm = "slice";
    int patch_size = 16;
    float tau = 0.5f;
    std::string tau_mode = "absolute";
    float window_lo = 0.0f, window_hi = 1.0f;
    std::string out_table;
    std::string render_dir;
};

PartialGroupMode parse_partial(const std::string& s) {
    return s == "remainder" ? PartialGroupMode::process_remainder
                            : PartialGroupMode::zero_remainder;
}

CueNormScope parse_cue_norm(const std::string& s) {
    return s == "global" ? CueNormScope::global : CueNormScope::per_slice;
}

TauMode parse_tau_mode(const std::string& s) {
    return s == "quantile" ? TauMode::quantile : TauMode::absolute;
}

void add_tvm_flags(CLI::App* cmd, TvmConfig& cfg, std::string& partial, std::string& cue) {
    cmd->add_option("--alpha", cfg.alpha, "Gradient weight in [0,1]")->capture_default_str();
    cmd->add_option("--stride", cfg.stride_s, "Slice-group size")->capture_default_str();
    cmd->add_option("--window", cfg.var_window_w, "Variance mean-filter window (odd)")
        ->capture_default_str();
    cmd->add_option("--sigma", cfg.gaussian_sigma, "Gaussian blur sigma in voxels (0 = off)")
        ->capture_default_str();
    cmd->add_option("--partial-group", partial, "Trailing partial slice group: zero | remainder")
        ->check(CLI::IsMember({"zero", "remainder"}))
        ->capture_default_str();
    cmd->add_option("--cue-norm", cue, "Cue normalization scope: slice | global")
        ->check(CLI::IsMember({"slice", "global"}))
        ->capture_default_str();
}

int run_phantom(const PhantomArgs& a) {
    static const std::map<std::string, PhantomKind> kinds{
        {"sphere_shell", PhantomKind::sphere_shell},
        {"tube", PhantomKind::tube},
        {"textured_block", PhantomKind::textured_block},
        {"constant", PhantomKind::constant}};
    PhantomSpec spec;
    spec.kind = kinds.at(a.kind);
    spec.dims = {a.dims[0], a.dims[1], a.dims[2]};
    spec.spacing = {a.spacing[0], a.spacing[1], a.spacing[2]};
    if (a.center.size() == 3)
        spec.center = {a.center[0], a.center[1], a.center[2]};
    else
        spec.center = {static_cast<float>(a.dims[0]) / 2.0f, static_cast<float>(a.dims[1]) / 2.0f,
                       static_cast<float>(a.dims[2]) / 2.0f};
    spec.radius = a.radius;
    spec.axis = a.axis;
    spec.noise_amplitude = a.noise;
    spec.box_lo = a.box_lo.size() == 3 ? std::array<int, 3>{a.box_lo[0], a.box_lo[1], a.box_lo[2]}
                                       : std::array<int, 3>{0, 0, 0};
    spec.box_hi = a.box_hi.size() == 3 ? std::array<int, 3>{a.box_hi[0], a.box_hi[1], a.box_hi[2]}
                                       : spec.dims;
    spec.inside_value = a.inside;
    spec.outside_value = a.outside;
    spec.seed = a.seed;

    const Phantom ph = make_phantom(spec);
    save_volume(ph.volume, a.out);
    if (!a.label_out.empty()) save_volume(ph.label, a.label_out);
    std::cout << "phantom kind=" << a.kind << " dims=" << dims_str(spec.dims)
              << " label_voxels=" << fmt_g([&] {
                     double s = 0.0;
                     for (float x : ph.label.data) s += x;
                     return s;
                 }())
              << "\n";
    return 0;
}

int run_preprocess(const PreprocessArgs& a) {
    Volume3D v = load_volume(a.input);
    if (a.target_spacing > 0.0f) v = resample_isotropic(v, a.target_spacing);
    PreprocessConfig cfg;
    cfg.hu_lo = a.hu_lo;
    cfg.hu_hi = a.hu_hi;
    cfg.normalization =
        a.normalization == "zmuv" ? Normalization::zero_mean_unit_var : Normalization::unit_range;
    std::vector<std::string> warnings;
    v = preprocess(v, cfg, &warnings);
    for (const std::string& w : warnings) std::cerr << "atmask: warning: " << w << "\n";
    save_volume(v, a.output);
    std::cout << "preprocess dims=" << dims_str(v.dims) << " out=" << a.output << "\n";
    return 0;
}

int run_tvm(const TvmArgs& a) {
    TvmConfig cfg = a.cfg;
    cfg.partial_group_mode = parse_partial(a.partial_group);
    cfg.cue_norm = parse_cue_norm(a.cue_norm);
    const Volume3D v = load_volume(a.input);
    const VariationMap map = compute_variation_map(v, cfg);
    save_volume(volume_from_map(map, v.spacing), a.output);
    std::cout << "tvm dims=" << dims_str(map.dims) << " out=" << a.output << "\n";
    return 0;
}

int run_mask(const MaskArgs& a) {
    Volume3D map_vol = load_volume(a.tvm);
    const std::array<int, 3> orig_dims = map_vol.dims;

    Volume3D vol;
    bool have_vol = !a.volume.empty();
    if (have_vol) {
        vol = load_volume(a.volume);
        if (!vol.same_dims(map_vol))
            throw std::runtime_error("mask: volume dims " + dims_str(vol.dims) +
                                     " do not match map dims " + dims_str(map_vol.dims));
    }
    if (a.pad) {
        map_vol = pad_to_patch(map_vol, a.patch_size);
        if (have_vol) vol = pad_to_patch(vol, a.patch_size);
    }

    MaskConfig cfg;
    cfg.patch_size = a.patch_size;
    cfg.mask_ratio_r = a.ratio;
    cfg.high_var_fraction_beta = a.beta;
    cfg.threshold_tau = a.tau;
    cfg.tau_mode = parse_tau_mode(a.tau_mode);
    cfg.seed = a.seed;

    const VariationMap map = map_from_volume(map_vol);
    const PatchScores scores = patch_scores(map, a.patch_size);
    const float tau = effective_tau(scores, cfg);
    const PatchMask pm = generate_mask(scores, cfg);
    const CoverageStats st = mask_coverage_stats(pm, scores, tau);

    if (!a.out_patch_mask.empty()) save_patch_mask(pm, a.out_patch_mask);
    if (!a.out_voxel_mask.empty() || !a.masked_out.empty() || !a.render.empty()) {
        const Volume3D voxel_mask = expand_mask(pm, a.patch_size, map_vol.spacing);
        if (!a.out_voxel_mask.empty()) save_volume(voxel_mask, a.out_voxel_mask);
        if (!a.masked_out.empty()) {
            if (!have_vol) throw std::runtime_error("mask: --masked-out requires --volume");
            save_volume(apply_mask(vol, voxel_mask), a.masked_out);
        }
        if (!a.render.empty()) {
            if (!have_vol) throw std::runtime_error("mask: --render requires --volume");
            const RenderOptions ro{a.window_lo, a.window_hi};
            write_png_gray8(render_mid_axial_overlay(vol, pm, scores, tau, a.patch_size, ro),
                            a.render);
        }
    }

    std::cout << "mask n_p=" << scores.n_patches() << " n_high=" << scores.count_high(tau)
              << " tau=" << fmt_g(tau) << " m=" << pm.m << " m_h=" << pm.m_h << " m_r=" << pm.m_r
              << " frac_masked_high=" << fmt_g(st.frac_masked_high)
              << " frac_high_masked=" << fmt_g(st.frac_high_masked)
              << " mean_u_masked=" << fmt_g(st.mean_u_masked)
              << " mean_u_unmasked=" << fmt_g(st.mean_u_unmasked);
    if (a.pad)
        std::cout << " orig_dims=" << dims_str(orig_dims)
                  << " padded_dims=" << dims_str(map_vol.dims);
    std::cout << "\n";
    return 0;
}

int run_pretrain(const PretrainArgs& a) {
    std::vector<Volume3D> volumes;
    for (const auto& p : volume_files(a.data_dir)) volumes.push_back(load_volume(p.string()));

    TvmConfig tvm_cfg = a.tvm_cfg;
    tvm_cfg.partial_group_mode = parse_partial(a.partial_group);
    tvm_cfg.cue_norm = parse_cue_norm(a.cue_norm);

    MaskConfig mask_cfg;
    mask_cfg.patch_size = a.patch_size;
    mask_cfg.mask_ratio_r = a.ratio;
    mask_cfg.high_var_fraction_beta = a.beta;
    mask_cfg.threshold_tau = a.tau;
    mask_cfg.tau_mode = parse_tau_mode(a.tau_mode);

    TrainConfig train_cfg;
    train_cfg.learning_rate = a.lr;
    train_cfg.steps = a.steps;
    train_cfg.optimizer = a.optimizer == "adamw" ? Optimizer::adamw_like : Optimizer::sgd;
    train_cfg.loss_eps = a.loss_eps;
    train_cfg.masked_input =
        a.masked_input == "zeros" ? MaskedInput::zeros : MaskedInput::mask_token;
    train_cfg.embed_dim = a.embed_dim;
    train_cfg.seed = a.seed;

    const PretrainResult res = pretrain_toy(volumes, tvm_cfg, mask_cfg, train_cfg);

    if (!a.out_weights.empty()) save_model(res.model, a.out_weights);
    if (!a.out_trace.empty()) {
        std::ofstream f(a.out_trace, std::ios::binary);
        if (!f) throw std::runtime_error(a.out_trace + ": cannot open for writing");
        f << "step\tloss\n";
        for (std::size_t i = 0; i < res.trace.size(); ++i)
            f << i << "\t" << fmt_exact(res.trace[i]) << "\n";
    }
    std::cout << "pretrain-toy steps=" << a.steps << " volumes=" << volumes.size();
    if (!res.trace.empty())
        std::cout << " initial_loss=" << fmt_exact(res.trace.front())
                  << " final_loss=" << fmt_exact(res.trace.back());
    std::cout << "\n";
    return 0;
}

int run_eval(const EvalArgs& a) {
    SegPair pair;
    pair.prediction = load_volume(a.pred);
    pair.ground_truth = load_volume(a.gt);
    if (a.spacing.size() == 3) {
        pair.prediction.spacing = {a.spacing[0], a.spacing[1], a.spacing[2]};
        pair.ground_truth.spacing = pair.prediction.spacing;
    }
    const MetricsReport r = compute_metrics(pair, a.eps);
    std::cout << "dsc=" << fmt_g(r.dsc) << "\n";
    std::cout << "iou=" << fmt_g(r.iou) << "\n";
    std::cout << "hd95=" << (r.hd95_defined ? fmt_g(r.hd95) : "undefined") << "\n";
    return 0;
}

int run_compare(const CompareArgs& a) {
    const auto files = volume_files(a.data_dir);

    TvmConfig tvm_cfg = a.tvm_cfg;
    tvm_cfg.partial_group_mode = parse_partial(a.partial_group);
    tvm_cfg.cue_norm = parse_cue_norm(a.cue_norm);

    std::vector<Volume3D> volumes;
    std::vector<PatchScores> scores;
    std::vector<std::string> names;
    for (const auto& p : files) {
        volumes.push_back(load_volume(p.string()));
        const VariationMap map = compute_variation_map(volumes.back(), tvm_cfg);
        scores.push_back(patch_scores(map, a.patch_size));
        names.push_back(p.stem().string());
    }

    std::vector<float> ratios = a.ratios, betas = a.betas;
    std::sort(ratios.begin(), ratios.end());
    std::sort(betas.begin(), betas.end());

    std::ostringstream table;
    table << "volume\tr\tbeta\tseed\tn_p\tn_high\tm\tm_h\tm_r\tfrac_masked_high\t"
             "frac_high_masked\tmean_u_masked\tmean_u_unmasked\tfinal_loss\n";

    for (float r : ratios)
        for (float beta : betas)
            for (int si = 0; si < a.num_seeds; ++si) {
                const std::uint64_t seed = a.seed_base + static_cast<std::uint64_t>(si);
                for (std::size_t vi = 0; vi < volumes.size(); ++vi) {
                    MaskConfig mc;
                    mc.patch_size = a.patch_size;
                    mc.mask_ratio_r = r;
                    mc.high_var_fraction_beta = beta;
                    mc.threshold_tau = a.tau;
                    mc.tau_mode = parse_tau_mode(a.tau_mode);
                    mc.seed = seed;
                    const float tau = effective_tau(scores[vi], mc);
                    const PatchMask pm = generate_mask(scores[vi], mc);
                    const CoverageStats st = mask_coverage_stats(pm, scores[vi], tau);

                    std::string loss = "-";
                    if (a.pretrain_steps > 0) {
                        TrainConfig tc;
                        tc.learning_rate = a.lr;
                        tc.steps = a.pretrain_steps;
                        tc.embed_dim = a.embed_dim;
                        tc.seed = seed;
                        const PretrainResult res =
                            pretrain_toy({volumes[vi]}, tvm_cfg, mc, tc);
                        loss = fmt_exact(res.trace.back());
                    }
                    table << names[vi] << "\t" << fmt_g(r) << "\t" << fmt_g(beta) << "\t" << seed
                          << "\t" << scores[vi].n_patches() << "\t"
                          << scores[vi].count_high(tau) << "\t" << pm.m << "\t" << pm.m_h << "\t"
                          << pm.m_r << "\t" << fmt_g(st.frac_masked_high) << "\t"
                          << fmt_g(st.frac_high_masked) << "\t" << fmt_g(st.mean_u_masked) << "\t"
                          << fmt_g(st.mean_u_unmasked) << "\t" << loss << "\n";

                    if (!a.render_dir.empty() && si == 0) {
                        const std::string name = names[vi] + "_r" + fmt_g(r) + "_b" +
                                                 fmt_g(beta) + "_s" + std::to_string(seed) +
                                                 ".png";
                        const RenderOptions ro{a.window_lo, a.window_hi};
                        write_png_gray8(
                            render_mid_axial_overlay(volumes[vi], pm, scores[vi], tau,
                                                     a.patch_size, ro),
                            (std::filesystem::path(a.render_dir) / name).string());
                    }
                }
            }

    if (!a.out_table.empty()) {
        std::ofstream f(a.out_table, std::ios::binary);
        if (!f) throw std::runtime_error(a.out_table + ": cannot open for writing");
        f << table.str();
    } else {
        std::cout << table.str();
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Texture-aware masking pipeline for 3D volumes"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from an INI config file");
    app.allow_config_extras(false);
    bool dump_config = false;
    app.add_flag("--dump-config", dump_config,
                 "Print the explicitly set options as INI and exit");
    int threads = 0;
    app.add_option("--threads", threads, "Worker thread count (0 = auto)")
        ->envname("ATMASK_THREADS");

    PhantomArgs pa;
    CLI::App* phantom = app.add_subcommand("phantom", "Generate a synthetic volume and label");
    phantom->configurable()->fallthrough();
    phantom->add_option("--kind", pa.kind, "sphere_shell | tube | textured_block | constant")
        ->check(CLI::IsMember({"sphere_shell", "tube", "textured_block", "constant"}))
        ->capture_default_str();
    phantom->add_option("--dims", pa.dims, "Volume dims")->expected(3)->capture_default_str();
    phantom->add_option("--spacing", pa.spacing, "Voxel spacing (mm)")
        ->expected(3)
        ->capture_default_str();
    phantom->add_option("--center", pa.center, "Structure center (voxels; default dims/2)")
        ->expected(3)
        ->run_callback_for_default(false);
    phantom->add_option("--radius", pa.radius, "Structure radius (voxels)")->capture_default_str();
    phantom->add_option("--axis", pa.axis, "Tube axis (0, 1 or 2)")->capture_default_str();
    phantom->add_option("--noise", pa.noise, "Uniform noise half-width")->capture_default_str();
    phantom->add_option("--box-lo", pa.box_lo, "textured_block lower corner")
        ->expected(3)
        ->run_callback_for_default(false);
    phantom->add_option("--box-hi", pa.box_hi, "textured_block upper corner (exclusive)")
        ->expected(3)
        ->run_callback_for_default(false);
    phantom->add_option("--inside", pa.inside, "Structure intensity")->capture_default_str();
    phantom->add_option("--outside", pa.outside, "Background intensity")->capture_default_str();
    phantom->add_option("--seed", pa.seed, "Noise seed")->envname("ATMASK_SEED")
        ->capture_default_str();
    phantom->add_option("--out", pa.out, "Output volume path")->required();
    phantom->add_option("--label-out", pa.label_out, "Output label path");

    PreprocessArgs ra;
    CLI::App* prep = app.add_subcommand("preprocess", "Window, normalize and resample a volume");
    prep->configurable()->fallthrough();
    prep->add_option("--input", ra.input, "Input volume")->required();
    prep->add_option("--output", ra.output, "Output volume")->required();
    prep->add_option("--hu-lo", ra.hu_lo, "Window low edge")->capture_default_str();
    prep->add_option("--hu-hi", ra.hu_hi, "Window high edge")->capture_default_str();
    prep->add_option("--normalization", ra.normalization, "unit_range | zmuv")
        ->check(CLI::IsMember({"unit_range", "zmuv"}))
        ->capture_default_str();
    prep->add_option("--target-spacing", ra.target_spacing,
                     "Isotropic resample spacing in mm (0 = keep)")
        ->capture_default_str();

    TvmArgs ta;
    CLI::App* tvm = app.add_subcommand("tvm", "Compute the texture-variation map");
    tvm->configurable()->fallthrough();
    tvm->add_option("--input", ta.input, "Input volume")->required();
    tvm->add_option("--output", ta.output, "Output map (volume format)")->required();
    add_tvm_flags(tvm, ta.cfg, ta.partial_group, ta.cue_norm);

    MaskArgs ma;
    CLI::App* mask = app.add_subcommand("mask", "Draw a texture-guided patch mask");
    mask->configurable()->fallthrough();
    mask->add_option("--tvm", ma.tvm, "Variation map path")->required();
    mask->add_option("--volume", ma.volume, "Matching volume (for --masked-out/--render)");
    mask->add_option("--patch-size", ma.patch_size, "Cubic patch edge")->capture_default_str();
    mask->add_option("--ratio", ma.ratio, "Masking ratio r")->capture_default_str();
    mask->add_option("--beta", ma.beta, "High-variation budget share")->capture_default_str();
    mask->add_option("--tau", ma.tau, "High-variation threshold")->capture_default_str();
    mask->add_option("--tau-mode", ma.tau_mode, "absolute | quantile")
        ->check(CLI::IsMember({"absolute", "quantile"}))
        ->capture_default_str();
    mask->add_option("--seed", ma.seed, "Sampling seed")->envname("ATMASK_SEED")
        ->capture_default_str();
    mask->add_flag("--pad-to-patch", ma.pad, "Zero-pad dims up to a patch multiple");
    mask->add_option("--window-lo", ma.window_lo, "Render window low edge")
        ->capture_default_str();
    mask->add_option("--window-hi", ma.window_hi, "Render window high edge")
        ->capture_default_str();
    mask->add_option("--out-patch-mask", ma.out_patch_mask, "Patch mask output path");
    mask->add_option("--out-voxel-mask", ma.out_voxel_mask, "Voxel mask output path");
    mask->add_option("--masked-out", ma.masked_out, "Masked volume output path");
    mask->add_option("--render", ma.render, "Mid-axial overlay PNG path");

    PretrainArgs tr;
    CLI::App* pre = app.add_subcommand("pretrain-toy", "Train the toy masked autoencoder");
    pre->configurable()->fallthrough();
    pre->add_option("--data-dir", tr.data_dir, "Directory of .raw/.nii volumes")->required();
    pre->add_option("--steps", tr.steps, "Optimizer steps")->capture_default_str();
    pre->add_option("--lr", tr.lr, "Learning rate")->capture_default_str();
    pre->add_option("--optimizer", tr.optimizer, "sgd | adamw")
        ->check(CLI::IsMember({"sgd", "adamw"}))
        ->capture_default_str();
    pre->add_option("--seed", tr.seed, "Base seed")->envname("ATMASK_SEED")
        ->capture_default_str();
    pre->add_option("--embed-dim", tr.embed_dim, "Bottleneck width")->capture_default_str();
    pre->add_option("--masked-input", tr.masked_input, "token | zeros")
        ->check(CLI::IsMember({"token", "zeros"}))
        ->capture_default_str();
    pre->add_option("--loss-eps", tr.loss_eps, "Loss denominator epsilon")->capture_default_str();
    add_tvm_flags(pre, tr.tvm_cfg, tr.partial_group, tr.cue_norm);
    pre->add_option("--patch-size", tr.patch_size, "Cubic patch edge")->capture_default_str();
    pre->add_option("--ratio", tr.ratio, "Masking ratio r")->capture_default_str();
    pre->add_option("--beta", tr.beta, "High-variation budget share")->capture_default_str();
    pre->add_option("--tau", tr.tau, "High-variation threshold")->capture_default_str();
    pre->add_option("--tau-mode", tr.tau_mode, "absolute | quantile")
        ->check(CLI::IsMember({"absolute", "quantile"}))
        ->capture_default_str();
    pre->add_option("--out-weights", tr.out_weights, "Weights blob output path");
    pre->add_option("--out-trace", tr.out_trace, "Loss trace TSV output path");

    EvalArgs ea;
    CLI::App* ev = app.add_subcommand("eval-metrics", "DSC/IoU/HD95 for a mask pair");
    ev->configurable()->fallthrough();
    ev->add_option("--pred", ea.pred, "Predicted binary volume")->required();
    ev->add_option("--gt", ea.gt, "Ground-truth binary volume")->required();
    ev->add_option("--spacing", ea.spacing, "Override spacing (mm)")
        ->expected(3)
        ->run_callback_for_default(false);
    ev->add_option("--eps", ea.eps, "Overlap epsilon")->capture_default_str();

    CompareArgs ca;
    CLI::App* cmp = app.add_subcommand(
        "compare-masking", "Sweep (r, beta, seed) and tabulate coverage and toy loss");
    cmp->configurable()->fallthrough();
    cmp->add_option("--data-dir", ca.data_dir, "Directory of .raw/.nii volumes")->required();
    cmp->add_option("--ratios", ca.ratios, "Masking ratios to sweep")
        ->expected(-1)
        ->capture_default_str();
    cmp->add_option("--betas", ca.betas, "Beta values to sweep")
        ->expected(-1)
        ->capture_default_str();
    cmp->add_option("--seeds", ca.num_seeds, "Number of seeds per cell")->capture_default_str();
    cmp->add_option("--seed", ca.seed_base, "First seed value")->envname("ATMASK_SEED")
        ->capture_default_str();
    cmp->add_option("--pretrain-steps", ca.pretrain_steps,
                    "Toy pretraining steps per cell (0 = skip)")
        ->capture_default_str();
    cmp->add_option("--lr", ca.lr, "Toy learning rate")->capture_default_str();
    cmp->add_option("--embed-dim", ca.embed_dim, "Toy bottleneck width")->capture_default_str();
    add_tvm_flags(cmp, ca.tvm_cfg, ca.partial_group, ca.cue_norm);
    cmp->add_option("--patch-size", ca.patch_size, "Cubic patch edge")->capture_default_str();
    cmp->add_option("--tau", ca.tau, "High-variation threshold")->capture_default_str();
    cmp->add_option("--tau-mode", ca.tau_mode, "absolute | quantile")
        ->check(CLI::IsMember({"absolute", "quantile"}))
        ->capture_default_str();
    cmp->add_option("--window-lo", ca.window_lo, "Render window low edge")
        ->capture_default_str();
    cmp->add_option("--window-hi", ca.window_hi, "Render window high edge")
        ->capture_default_str();
    cmp->add_option("--out-table", ca.out_table, "Stats table path (default stdout)");
    cmp->add_option("--render-dir", ca.render_dir, "Directory for overlay PNGs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "atmask: error: " << e.what() << "\n";
        return e.get_exit_code() == 0 ? 1 : e.get_exit_code();
    }

    try {
        if (threads > 0) set_thread_count(threads);
        if (dump_config) {
            // Defaults are omitted: a dump of only explicit settings reads back
            // cleanly and re-dumps to the same bytes.
            std::cout << app.config_to_str(false, true);
            return 0;
        }
        if (app.got_subcommand(phantom)) return run_phantom(pa);
        if (app.got_subcommand(prep)) return run_preprocess(ra);
        if (app.got_subcommand(tvm)) return run_tvm(ta);
        if (app.got_subcommand(mask)) return run_mask(ma);
        if (app.got_subcommand(pre)) return run_pretrain(tr);
        if (app.got_subcommand(ev)) return run_eval(ea);
        if (app.got_subcommand(cmp)) return run_compare(ca);
        std::cerr << "atmask: error: no subcommand\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "atmask: error: " << e.what() << "\n";
        return 1;
    }
}
