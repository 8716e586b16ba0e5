#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include <json.hpp>

#include "decu/codec.hpp"
#include "decu/dataset.hpp"
#include "decu/ensemble.hpp"
#include "decu/errors.hpp"

namespace decu {

namespace detail {

inline void check_keys(const nlohmann::json& obj,
                       std::initializer_list<const char*> allowed, const std::string& where) {
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* k : allowed)
            if (item.key() == k) {
                known = true;
                break;
            }
        if (!known) throw ConfigError("config: unknown key '" + where + item.key() + "'");
    }
}

template <typename T>
T get_field(const nlohmann::json& obj, const char* key, const T& fallback,
            const std::string& where) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: bad value for '" + where + key + "': " + e.what());
    }
}

} // namespace detail

// The whole run in one file: seeds, model dims, schedule, ensemble, dataset,
// training and experiment parameters. Unknown keys are rejected so a typo
// cannot silently fall back to a default. All seeds derive from master_seed
// unless pinned explicitly.
struct RunConfig {
    std::uint64_t master_seed = 1;

    int hidden = 128;
    int class_embed = 16;

    int T = 200;
    double beta_start = 1e-4;
    double beta_end = 2e-2;
    int ddim_steps = 50;

    int components = 5;
    std::vector<std::uint64_t> component_seeds; // empty: derive from master_seed

    DatasetConfig dataset;
    TrainingConfig training;

    std::vector<double> branch_fractions{1.0, 0.75, 0.5, 0.25};
    int n_noise = 8;
    int n_seeds = 5;
    int curve_seeds = 20;
    int curve_class = 0;

    CodecKind codec = CodecKind::Identity;

    int num_classes() const {
        return 3 * dataset.classes_per_small_bin + dataset.classes_max_bin;
    }

    void validate() const {
        if (T < 2) throw ConfigError("config: schedule.steps must be >= 2");
        if (!(beta_start > 0.0 && beta_start < beta_end && beta_end < 1.0))
            throw ConfigError("config: need 0 < beta_start < beta_end < 1");
        if (ddim_steps < 1 || ddim_steps > T || T % ddim_steps != 0)
            throw ConfigError("config: schedule.ddim_steps must divide schedule.steps");
        if (hidden < 1 || class_embed < 1)
            throw ConfigError("config: model dims must be >= 1");
        if (components < 2 || components > 16)
            throw ConfigError("config: ensemble.components must be in 2..16");
        if (!component_seeds.empty() &&
            component_seeds.size() != static_cast<std::size_t>(components))
            throw ConfigError("config: ensemble.component_seeds must be empty or match components");
        if (dataset.image_size < 8) throw ConfigError("config: dataset.image_size must be >= 8");
        if (codec == CodecKind::AvgPool2x && dataset.image_size % 2 != 0)
            throw ConfigError("config: avgpool2x codec needs an even image size");
        if (dataset.classes_per_small_bin < 1 || dataset.classes_max_bin < 1)
            throw ConfigError("config: dataset class counts must be >= 1");
        for (int i = 0; i < kNumBins; ++i) {
            if (dataset.per_component_counts[i] < 1)
                throw ConfigError("config: dataset.per_component_counts must be >= 1");
            if (i > 0 &&
                dataset.per_component_counts[i] <= dataset.per_component_counts[i - 1])
                throw ConfigError("config: dataset.per_component_counts must increase");
        }
        if (dataset.pool_per_class < dataset.per_component_counts[kNumBins - 1])
            throw ConfigError("config: dataset.pool_per_class must cover the largest bin");
        if (!(dataset.pixel_noise >= 0.0))
            throw ConfigError("config: dataset.pixel_noise must be >= 0");
        if (training.stage0_steps < 1 || training.component_steps < 1 ||
            training.batch_size < 1)
            throw ConfigError("config: training steps and batch size must be >= 1");
        if (!(training.lr > 0.0)) throw ConfigError("config: training.lr must be > 0");
        if (training.log_every < 1) throw ConfigError("config: training.log_every must be >= 1");
        if (branch_fractions.empty())
            throw ConfigError("config: experiment.branch_fractions must be nonempty");
        for (double f : branch_fractions)
            if (!(f > 0.0 && f <= 1.0))
                throw ConfigError("config: branch fractions must lie in (0, 1]");
        if (n_noise < 1 || n_seeds < 1 || curve_seeds < 1)
            throw ConfigError("config: experiment sample counts must be >= 1");
        if (curve_class < 0 || curve_class >= num_classes())
            throw ConfigError("config: experiment.curve_class out of range");
    }

    static RunConfig from_json(const nlohmann::json& j) {
        using nlohmann::json;
        if (!j.is_object()) throw ConfigError("config: root must be an object");
        detail::check_keys(j, {"master_seed", "model", "schedule", "ensemble", "dataset",
                               "training", "experiment", "codec"},
                           "");
        RunConfig c;
        c.master_seed = detail::get_field<std::uint64_t>(j, "master_seed", c.master_seed, "");

        const json empty = json::object();
        const json& model = j.contains("model") ? j.at("model") : empty;
        detail::check_keys(model, {"hidden", "class_embed"}, "model.");
        c.hidden = detail::get_field(model, "hidden", c.hidden, "model.");
        c.class_embed = detail::get_field(model, "class_embed", c.class_embed, "model.");

        const json& sched = j.contains("schedule") ? j.at("schedule") : empty;
        detail::check_keys(sched, {"steps", "beta_start", "beta_end", "ddim_steps"},
                           "schedule.");
        c.T = detail::get_field(sched, "steps", c.T, "schedule.");
        c.beta_start = detail::get_field(sched, "beta_start", c.beta_start, "schedule.");
        c.beta_end = detail::get_field(sched, "beta_end", c.beta_end, "schedule.");
        c.ddim_steps = detail::get_field(sched, "ddim_steps", c.ddim_steps, "schedule.");

        const json& ens = j.contains("ensemble") ? j.at("ensemble") : empty;
        detail::check_keys(ens, {"components", "component_seeds"}, "ensemble.");
        c.components = detail::get_field(ens, "components", c.components, "ensemble.");
        c.component_seeds = detail::get_field(ens, "component_seeds", c.component_seeds,
                                              "ensemble.");

        const json& ds = j.contains("dataset") ? j.at("dataset") : empty;
        detail::check_keys(ds,
                           {"image_size", "classes_per_small_bin", "classes_max_bin",
                            "pool_per_class", "per_component_counts", "pixel_noise"},
                           "dataset.");
        c.dataset.image_size = detail::get_field(ds, "image_size", c.dataset.image_size,
                                                 "dataset.");
        c.dataset.classes_per_small_bin = detail::get_field(
            ds, "classes_per_small_bin", c.dataset.classes_per_small_bin, "dataset.");
        c.dataset.classes_max_bin =
            detail::get_field(ds, "classes_max_bin", c.dataset.classes_max_bin, "dataset.");
        c.dataset.pool_per_class =
            detail::get_field(ds, "pool_per_class", c.dataset.pool_per_class, "dataset.");
        c.dataset.per_component_counts = detail::get_field(
            ds, "per_component_counts", c.dataset.per_component_counts, "dataset.");
        c.dataset.pixel_noise =
            detail::get_field(ds, "pixel_noise", c.dataset.pixel_noise, "dataset.");

        const json& tr = j.contains("training") ? j.at("training") : empty;
        detail::check_keys(tr,
                           {"stage0_steps", "component_steps", "batch_size", "lr",
                            "embed_init_scale", "log_every"},
                           "training.");
        c.training.stage0_steps =
            detail::get_field(tr, "stage0_steps", c.training.stage0_steps, "training.");
        c.training.component_steps =
            detail::get_field(tr, "component_steps", c.training.component_steps, "training.");
        c.training.batch_size =
            detail::get_field(tr, "batch_size", c.training.batch_size, "training.");
        c.training.lr = detail::get_field(tr, "lr", c.training.lr, "training.");
        c.training.embed_init_scale = detail::get_field(tr, "embed_init_scale",
                                                        c.training.embed_init_scale, "training.");
        c.training.log_every =
            detail::get_field(tr, "log_every", c.training.log_every, "training.");

        const json& ex = j.contains("experiment") ? j.at("experiment") : empty;
        detail::check_keys(
            ex, {"branch_fractions", "n_noise", "n_seeds", "curve_seeds", "curve_class"},
            "experiment.");
        c.branch_fractions =
            detail::get_field(ex, "branch_fractions", c.branch_fractions, "experiment.");
        c.n_noise = detail::get_field(ex, "n_noise", c.n_noise, "experiment.");
        c.n_seeds = detail::get_field(ex, "n_seeds", c.n_seeds, "experiment.");
        c.curve_seeds = detail::get_field(ex, "curve_seeds", c.curve_seeds, "experiment.");
        c.curve_class = detail::get_field(ex, "curve_class", c.curve_class, "experiment.");

        const std::string codec_name =
            detail::get_field<std::string>(j, "codec", "identity", "");
        if (codec_name == "identity")
            c.codec = CodecKind::Identity;
        else if (codec_name == "avgpool2x")
            c.codec = CodecKind::AvgPool2x;
        else
            throw ConfigError("config: unknown codec '" + codec_name + "'");

        c.validate();
        return c;
    }

    static RunConfig from_file(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("config: cannot open " + path.string());
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError("config: " + std::string(e.what()));
        }
        return from_json(j);
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["master_seed"] = master_seed;
        j["model"] = {{"hidden", hidden}, {"class_embed", class_embed}};
        j["schedule"] = {{"steps", T},
                         {"beta_start", beta_start},
                         {"beta_end", beta_end},
                         {"ddim_steps", ddim_steps}};
        j["ensemble"] = {{"components", components}, {"component_seeds", component_seeds}};
        j["dataset"] = {{"image_size", dataset.image_size},
                        {"classes_per_small_bin", dataset.classes_per_small_bin},
                        {"classes_max_bin", dataset.classes_max_bin},
                        {"pool_per_class", dataset.pool_per_class},
                        {"per_component_counts", dataset.per_component_counts},
                        {"pixel_noise", dataset.pixel_noise}};
        j["training"] = {{"stage0_steps", training.stage0_steps},
                         {"component_steps", training.component_steps},
                         {"batch_size", training.batch_size},
                         {"lr", training.lr},
                         {"embed_init_scale", training.embed_init_scale},
                         {"log_every", training.log_every}};
        j["experiment"] = {{"branch_fractions", branch_fractions},
                           {"n_noise", n_noise},
                           {"n_seeds", n_seeds},
                           {"curve_seeds", curve_seeds},
                           {"curve_class", curve_class}};
        j["codec"] = to_string(codec);
        return j;
    }

    // Canonical serialization (sorted keys, shortest round-trip numbers);
    // the config hash is taken over these bytes.
    std::string canonical() const { return to_json().dump(); }
    std::uint64_t hash() const { return fnv1a64(canonical()); }

    std::uint64_t dataset_seed() const { return SeededStream(master_seed).derive_key("dataset"); }
    std::uint64_t stage0_seed() const { return SeededStream(master_seed).derive_key("stage0"); }
    std::uint64_t experiment_seed(std::string_view which) const {
        return SeededStream(master_seed).derive("experiment").derive_key(which);
    }

    std::vector<std::uint64_t> resolved_component_seeds() const {
        if (!component_seeds.empty()) return component_seeds;
        std::vector<std::uint64_t> seeds;
        const SeededStream root(master_seed);
        for (int j = 0; j < components; ++j) seeds.push_back(root.derive_key("component", j));
        return seeds;
    }

    EnsembleSpec ensemble_spec() const {
        EnsembleSpec spec;
        spec.hidden = hidden;
        spec.class_embed_dim = class_embed;
        spec.components = components;
        spec.component_seeds = resolved_component_seeds();
        spec.stage0_seed = stage0_seed();
        spec.sched = make_schedule(T, beta_start, beta_end);
        spec.codec = Codec(codec, dataset.image_size);
        spec.ddim_steps = ddim_steps;
        spec.training = training;
        return spec;
    }
};

} // namespace decu
