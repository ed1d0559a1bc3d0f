#include "igs/pipeline/commands.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "igs/core/errors.hpp"
#include "igs/datasets/dataset.hpp"
#include "igs/datasets/image_io.hpp"
#include "igs/datasets/metrics.hpp"
#include "igs/pipeline/config.hpp"
#include "igs/streamio/binary.hpp"
#include "igs/streamio/delta.hpp"
#include "igs/streamio/model_file.hpp"
#include "igs/synopsis/decode.hpp"
#include "igs/synopsis/trainer.hpp"

namespace igs {

namespace {

namespace fs = std::filesystem;

void write_text(const std::string& path, const std::string& text) {
    write_file_bytes(path, std::span<const uint8_t>(
                               reinterpret_cast<const uint8_t*>(text.data()),
                               text.size()));
}

std::string read_text(const std::string& path) {
    std::vector<uint8_t> b = read_file_bytes(path);
    std::string s(b.begin(), b.end());
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    return s;
}

std::string level_path(const std::string& dir, int level) {
    return dir + "/L" + std::to_string(level) + ".igs";
}

std::vector<TrainItem> train_items(const Dataset& ds) {
    std::vector<TrainItem> items;
    for (int i : ds.train_views) items.push_back({ds.cameras[i], &ds.images[i]});
    return items;
}

constexpr const char* kMetricsHeader =
    "phase,iteration,total,l1,dssim,vol,sparsity,active_anchors,active_slots\n";

MetricsSink csv_sink(std::ostringstream& out) {
    return [&out](const MetricsRow& r) {
        out << r.phase << "," << r.iteration << "," << r.total << "," << r.l1 << ","
            << r.dssim << "," << r.vol << "," << r.sparsity << ","
            << r.active_anchors << "," << r.active_slots << "\n";
    };
}

Image render_snapshot(const LevelSnapshot& snap, const Camera& cam, int threads) {
    LevelView view = make_view(snap);
    DecodeResult dr = decode_level(view, cam.position(), DecodePhase::inference);
    RenderOptions opts;
    opts.threads = threads;
    return render_image(dr.prims, cam, opts);
}

void cmd_gen(const SceneGenConfig& cfg, const std::string& out) {
    gen_synthetic_scene(cfg, out);
    std::printf("gen: %d gaussians, %d cameras, %dx%d -> %s\n", cfg.n_gauss,
                cfg.n_cams, cfg.width, cfg.height, out.c_str());
}

void cmd_train(const std::string& data, const std::string& config_path,
               const std::string& out) {
    RunConfig cfg = load_config(config_path);
    Dataset ds = load_dataset(data);
    ModelMeta meta = make_meta(cfg, ds.bb_min, ds.bb_max);
    Hierarchy h = init_hierarchy(meta, ds.points, cfg.voxel_size, cfg.seed);

    fs::create_directories(out);
    write_text(out + "/config.txt", config_text(cfg));
    write_text(out + "/dataset.txt", fs::absolute(data).string() + "\n");

    std::ostringstream metrics;
    metrics.precision(10);
    metrics << kMetricsHeader;
    std::vector<TrainItem> items = train_items(ds);
    int top = meta.lmax - 1;
    try {
        train_full(h, items, full_phase(cfg), csv_sink(metrics));
    } catch (const NumericalError&) {
        // Keep the last good state reachable, then surface the failure.
        refresh_codebook_indices(h);
        save_model(h.snapshot(top), level_path(out, top));
        write_text(out + "/metrics.csv", metrics.str());
        throw;
    }
    save_model(h.snapshot(top), level_path(out, top));
    write_text(out + "/metrics.csv", metrics.str());
    std::printf("train: %d anchors, %d iterations -> %s\n", h.anchor_count(),
                cfg.full_iters, level_path(out, top).c_str());
}

void cmd_unfold(const std::string& ckpt, const std::string& config_path) {
    RunConfig cfg = load_config(config_path);
    Dataset ds = load_dataset(read_text(ckpt + "/dataset.txt"));
    LevelSnapshot snap = load_model(level_path(ckpt, cfg.levels - 1));
    Hierarchy h = hierarchy_from_snapshot(snap);

    // The foundational level is identical under every ablation mode, so the
    // mode is an unfold-time choice; rewrite the finest checkpoint so all
    // levels agree on it.
    AblationMode mode = ablation_from_name(cfg.mode);
    if (mode != h.meta.mode) {
        h.meta.mode = mode;
        save_model(h.snapshot(h.meta.lmax - 1), level_path(ckpt, h.meta.lmax - 1));
    }

    write_text(ckpt + "/config.unfold.txt", config_text(cfg));
    std::ostringstream metrics;
    metrics.precision(10);
    metrics << kMetricsHeader;
    std::vector<TrainItem> items = train_items(ds);
    TrainPhaseConfig phase = unfold_phase(cfg);
    try {
        for (int level = h.meta.lmax - 2; level >= 0; --level) {
            unfold_level(h, level, items, phase, csv_sink(metrics));
            save_model(h.snapshot(level), level_path(ckpt, level));
            std::printf("unfold: L%d keeps %d/%d slots\n", level,
                        h.active_slot_count(level), h.active_slot_count(level + 1));
        }
    } catch (const NumericalError&) {
        write_text(ckpt + "/metrics.unfold.csv", metrics.str());
        throw;
    }
    write_text(ckpt + "/metrics.unfold.csv", metrics.str());
}

void cmd_pack(const std::string& ckpt, const std::string& out) {
    LevelSnapshot base = load_model(level_path(ckpt, 0));
    int lmax = base.meta.lmax;
    std::vector<LevelSnapshot> snaps;
    snaps.push_back(std::move(base));
    for (int l = 1; l < lmax; ++l) snaps.push_back(load_model(level_path(ckpt, l)));

    fs::create_directories(out);
    std::vector<uint8_t> base_raw = read_file_bytes(level_path(ckpt, 0));
    int zlevel = snaps[0].meta.deflate_level;
    save_compressed(base_raw, zlevel, out + "/base.igsz");

    std::ostringstream sizes;
    sizes << "stage,raw_bytes,compressed_bytes,cumulative_compressed\n";
    int64_t cum = compressed_size(base_raw, zlevel);
    sizes << "base," << base_raw.size() << "," << cum << "," << cum << "\n";
    for (int l = 0; l + 1 < lmax; ++l) {
        DeltaStats stats;
        std::vector<uint8_t> delta = compute_delta(snaps[l], snaps[l + 1], &stats);
        std::string name = "delta_L" + std::to_string(l + 1);
        write_file_bytes(out + "/" + name + ".igsd", delta);
        int64_t cs = compressed_size(delta, zlevel);
        cum += cs;
        sizes << name << "," << delta.size() << "," << cs << "," << cum << "\n";
        std::printf("pack: %s carries %d new anchors, %d patches, %d grid tables\n",
                    name.c_str(), stats.new_anchors, stats.patched_anchors,
                    stats.new_grid_levels);
    }
    write_text(out + "/sizes.csv", sizes.str());
    write_text(out + "/ckpt.txt", fs::absolute(ckpt).string() + "\n");
}

void cmd_stream_sim(const std::string& pack, const std::string& out) {
    std::string ckpt = read_text(pack + "/ckpt.txt");
    Dataset ds = load_dataset(read_text(ckpt + "/dataset.txt"));
    int view = ds.test_views.at(0);
    fs::create_directories(out);

    auto verify = [&](int level, std::span<const uint8_t> bytes) {
        std::vector<uint8_t> ref = read_file_bytes(level_path(ckpt, level));
        if (bytes.size() != ref.size() ||
            !std::equal(bytes.begin(), bytes.end(), ref.begin()))
            throw IoError(IoCode::hierarchy_mismatch,
                          "reconstructed L" + std::to_string(level) +
                              " differs from its checkpoint");
        write_file_bytes(level_path(out, level), bytes);
    };

    std::vector<uint8_t> bytes = load_compressed(pack + "/base.igsz");
    verify(0, bytes);
    LevelSnapshot cur = parse_model(bytes);
    auto render_stage = [&](const LevelSnapshot& s) {
        Camera cam = ds.cameras[view].scaled(s.meta.resolution_scale(s.level));
        write_ppm(render_snapshot(s, cam, 1),
                  out + "/stage" + std::to_string(s.level) + ".ppm");
    };
    render_stage(cur);
    for (int l = 1; l < cur.meta.lmax; ++l) {
        std::vector<uint8_t> delta =
            read_file_bytes(pack + "/delta_L" + std::to_string(l) + ".igsd");
        cur = apply_delta(cur, delta);
        bytes = serialize_model(cur);
        verify(l, bytes);
        render_stage(cur);
    }
    std::printf("stream-sim: %d stages reconstructed bit-exactly\n", cur.meta.lmax);
}

void cmd_render(const std::string& ckpt_file, int camera, const std::string& out) {
    LevelSnapshot snap = load_model(ckpt_file);
    std::string dir = fs::path(ckpt_file).parent_path().string();
    if (dir.empty()) dir = ".";
    Dataset ds = load_dataset(read_text(dir + "/dataset.txt"));
    if (camera < 0 || camera >= static_cast<int>(ds.cameras.size()))
        throw ValidationError("render: camera index out of range");
    write_ppm(render_snapshot(snap, ds.cameras[camera], 1), out);
}

void cmd_eval(const std::string& ckpt, const std::string& data,
              const std::string& out) {
    Dataset ds = load_dataset(data);
    std::vector<EvalRow> rows;
    LevelSnapshot first = load_model(level_path(ckpt, 0));
    int lmax = first.meta.lmax;
    RenderOptions opts;
    for (int l = 0; l < lmax; ++l) {
        LevelSnapshot snap = l == 0 ? std::move(first) : load_model(level_path(ckpt, l));
        std::vector<EvalRow> lr = evaluate_level(snap, ds, opts);
        double mp = mean_psnr(lr);
        double ms = 0.0;
        for (const EvalRow& r : lr) ms += r.ssim;
        ms /= static_cast<double>(lr.size());
        rows.insert(rows.end(), lr.begin(), lr.end());
        rows.push_back({l, -1, mp, ms});  // view -1 marks the per-level mean
        std::printf("eval: L%d mean psnr %.3f ssim %.4f\n", l, mp, ms);
    }
    write_text(out, eval_csv(rows));
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"anchor gaussian LOD trainer and streaming packer"};
    app.require_subcommand(1);

    SceneGenConfig gen_cfg;
    std::vector<int> res{64, 64};
    std::string gen_out;
    CLI::App* gen = app.add_subcommand("gen", "generate a synthetic dataset");
    gen->add_option("--seed", gen_cfg.seed);
    gen->add_option("--gaussians", gen_cfg.n_gauss);
    gen->add_option("--cameras", gen_cfg.n_cams);
    gen->add_option("--res", res)->expected(2);
    gen->add_option("--out", gen_out)->required();

    std::string train_data, train_config, train_out;
    CLI::App* train = app.add_subcommand("train", "full-fidelity training");
    train->add_option("--data", train_data)->required();
    train->add_option("--config", train_config);
    train->add_option("--out", train_out)->required();

    std::string unfold_ckpt, unfold_config;
    CLI::App* unfold = app.add_subcommand("unfold", "derive the coarser levels");
    unfold->add_option("--ckpt", unfold_ckpt)->required();
    unfold->add_option("--config", unfold_config);

    std::string pack_ckpt, pack_out;
    CLI::App* pack = app.add_subcommand("pack", "base payload plus deltas");
    pack->add_option("--ckpt", pack_ckpt)->required();
    pack->add_option("--out", pack_out)->required();

    std::string sim_pack, sim_out;
    CLI::App* sim = app.add_subcommand("stream-sim", "replay base and deltas");
    sim->add_option("--pack", sim_pack)->required();
    sim->add_option("--out", sim_out)->required();

    std::string render_ckpt, render_out;
    int render_camera = 0;
    CLI::App* render = app.add_subcommand("render", "render one view");
    render->add_option("--ckpt", render_ckpt)->required();
    render->add_option("--camera", render_camera);
    render->add_option("--out", render_out)->required();

    std::string eval_ckpt, eval_data, eval_out;
    CLI::App* eval = app.add_subcommand("eval", "per-level metrics");
    eval->add_option("--ckpt", eval_ckpt)->required();
    eval->add_option("--data", eval_data)->required();
    eval->add_option("--out", eval_out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "error: usage: %s\n", e.what());
        return static_cast<int>(ExitCode::usage);
    }

    try {
        if (gen->parsed()) {
            gen_cfg.width = res.at(0);
            gen_cfg.height = res.at(1);
            cmd_gen(gen_cfg, gen_out);
        } else if (train->parsed()) {
            cmd_train(train_data, train_config, train_out);
        } else if (unfold->parsed()) {
            cmd_unfold(unfold_ckpt, unfold_config);
        } else if (pack->parsed()) {
            cmd_pack(pack_ckpt, pack_out);
        } else if (sim->parsed()) {
            cmd_stream_sim(sim_pack, sim_out);
        } else if (render->parsed()) {
            cmd_render(render_ckpt, render_camera, render_out);
        } else if (eval->parsed()) {
            cmd_eval(eval_ckpt, eval_data, eval_out);
        }
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: usage: %s\n", e.what());
        return static_cast<int>(ExitCode::usage);
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: validation: %s\n", e.what());
        return static_cast<int>(ExitCode::validation);
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "error: numerical: %s\n", e.what());
        return static_cast<int>(ExitCode::numerical);
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: io/%s: %s\n", io_code_name(e.code), e.what());
        return static_cast<int>(ExitCode::io);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: internal: %s\n", e.what());
        return static_cast<int>(ExitCode::validation);
    }
    return static_cast<int>(ExitCode::ok);
}

}  // namespace igs
