#include "igs/pipeline/config.hpp"

#include <cstdio>
#include <map>
#include <sstream>

#include "igs/core/errors.hpp"
#include "igs/streamio/binary.hpp"

namespace igs {

namespace {

// One field list drives parsing and dumping so the two can never drift.
template <class C, class F>
void visit_fields(C& c, F&& f) {
    f("seed", c.seed);
    f("levels", c.levels);
    f("offsets_per_anchor", c.offsets_per_anchor);
    f("n_codes", c.n_codes);
    f("code_dim", c.code_dim);
    f("fused_dim", c.fused_dim);
    f("mlp_hidden", c.mlp_hidden);
    f("grid_levels", c.grid_levels);
    f("grid_table_log2", c.grid_table_log2);
    f("grid_feature_dim", c.grid_feature_dim);
    f("grid_n_min", c.grid_n_min);
    f("grid_n_max", c.grid_n_max);
    f("grid_schedule", c.grid_schedule);
    f("mode", c.mode);
    f("voxel_size", c.voxel_size);
    f("full_iters", c.full_iters);
    f("unfold_iters", c.unfold_iters);
    f("lambda_ssim", c.lambda_ssim);
    f("lambda_vol", c.lambda_vol);
    f("lambda_group", c.lambda_group);
    f("lambda_mask", c.lambda_mask);
    f("mask_threshold", c.mask_threshold);
    f("lr_pos", c.lr_pos);
    f("lr_offsets", c.lr_offsets);
    f("lr_logscale", c.lr_logscale);
    f("lr_grid", c.lr_grid);
    f("lr_mlp", c.lr_mlp);
    f("lr_codebook", c.lr_codebook);
    f("lr_vlogits", c.lr_vlogits);
    f("lr_mask", c.lr_mask);
    f("lr_final_ratio", c.lr_final_ratio);
    f("threads", c.threads);
    f("deflate_level", c.deflate_level);
    f("log_every", c.log_every);
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

void assign(const std::string& key, const std::string& raw, int& out) {
    size_t used = 0;
    out = std::stoi(raw, &used);
    if (used != raw.size())
        throw ValidationError("config: bad integer for " + key + ": " + raw);
}

void assign(const std::string& key, const std::string& raw, uint64_t& out) {
    size_t used = 0;
    out = std::stoull(raw, &used);
    if (used != raw.size())
        throw ValidationError("config: bad integer for " + key + ": " + raw);
}

void assign(const std::string& key, const std::string& raw, double& out) {
    size_t used = 0;
    out = std::stod(raw, &used);
    if (used != raw.size())
        throw ValidationError("config: bad number for " + key + ": " + raw);
}

void assign(const std::string&, const std::string& raw, std::string& out) { out = raw; }

void assign(const std::string& key, const std::string& raw, std::vector<int>& out) {
    out.clear();
    std::istringstream ss(raw);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        int v = 0;
        assign(key, trim(tok), v);
        out.push_back(v);
    }
    if (out.empty()) throw ValidationError("config: empty list for " + key);
}

std::string format(uint64_t v) { return std::to_string(v); }
std::string format(int v) { return std::to_string(v); }
std::string format(const std::string& v) { return v; }

std::string format(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string format(const std::vector<int>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(v[i]);
    }
    return s;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config line " + std::to_string(lineno) +
                                  ": expected key=value");
        std::string key = trim(t.substr(0, eq));
        if (kv.count(key))
            throw ValidationError("config: duplicate key " + key);
        kv[key] = trim(t.substr(eq + 1));
    }

    RunConfig cfg;
    visit_fields(cfg, [&](const char* name, auto& field) {
        auto it = kv.find(name);
        if (it == kv.end()) return;
        try {
            assign(name, it->second, field);
        } catch (const std::invalid_argument&) {
            throw ValidationError("config: bad value for " + std::string(name));
        } catch (const std::out_of_range&) {
            throw ValidationError("config: value out of range for " + std::string(name));
        }
        kv.erase(it);
    });
    if (!kv.empty())
        throw ValidationError("config: unknown key " + kv.begin()->first);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    if (path.empty()) return RunConfig{};
    std::vector<uint8_t> b = read_file_bytes(path);
    return parse_config_text(std::string(b.begin(), b.end()));
}

std::string config_text(const RunConfig& cfg) {
    std::string out;
    visit_fields(cfg, [&](const char* name, const auto& field) {
        out += name;
        out += " = ";
        out += format(field);
        out += "\n";
    });
    return out;
}

ModelMeta make_meta(const RunConfig& cfg, const Vec3& bb_min, const Vec3& bb_max) {
    ModelMeta meta;
    meta.lmax = cfg.levels;
    meta.K = cfg.offsets_per_anchor;
    meta.n_codes = cfg.n_codes;
    meta.code_dim = cfg.code_dim;
    meta.fused_dim = cfg.fused_dim;
    meta.mlp_hidden = cfg.mlp_hidden;
    meta.mode = ablation_from_name(cfg.mode);
    meta.deflate_level = cfg.deflate_level;
    if (cfg.grid_table_log2 < 4 || cfg.grid_table_log2 > 24)
        throw ValidationError("config: grid_table_log2 out of range");
    meta.grid.levels = cfg.grid_levels;
    meta.grid.table_size = 1u << cfg.grid_table_log2;
    meta.grid.feature_dim = cfg.grid_feature_dim;
    meta.grid.n_min = cfg.grid_n_min;
    meta.grid.n_max = cfg.grid_n_max;
    meta.grid.bb_min = bb_min;
    meta.grid.bb_max = bb_max;
    meta.active_schedule = cfg.grid_schedule;
    meta.validate();
    return meta;
}

namespace {

TrainPhaseConfig phase_common(const RunConfig& cfg) {
    TrainPhaseConfig p;
    p.loss.lambda_ssim = cfg.lambda_ssim;
    p.loss.lambda_vol = cfg.lambda_vol;
    p.loss.lambda_group = cfg.lambda_group;
    p.lambda_mask = cfg.lambda_mask;
    p.mask_threshold = cfg.mask_threshold;
    p.rates.pos = cfg.lr_pos;
    p.rates.offsets = cfg.lr_offsets;
    p.rates.logscale = cfg.lr_logscale;
    p.rates.grid = cfg.lr_grid;
    p.rates.mlp = cfg.lr_mlp;
    p.rates.codebook = cfg.lr_codebook;
    p.rates.vlogits = cfg.lr_vlogits;
    p.rates.mask = cfg.lr_mask;
    p.rates.final_ratio = cfg.lr_final_ratio;
    p.render.threads = cfg.threads;
    p.seed = cfg.seed;
    p.log_every = cfg.log_every;
    return p;
}

}  // namespace

TrainPhaseConfig full_phase(const RunConfig& cfg) {
    TrainPhaseConfig p = phase_common(cfg);
    p.iterations = cfg.full_iters;
    return p;
}

TrainPhaseConfig unfold_phase(const RunConfig& cfg) {
    TrainPhaseConfig p = phase_common(cfg);
    p.iterations = cfg.unfold_iters;
    return p;
}

}  // namespace igs
