// decu: train the embedding-table diffusion ensemble, generate with
// branching, and run the uncertainty / diversity experiments.
//
// Exit codes: 0 success, 2 usage or config error, 3 numerical failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "decu/decu.hpp"

namespace fs = std::filesystem;
using namespace decu;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

std::vector<std::vector<std::string>> loss_rows(const std::vector<LossRecord>& losses) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(losses.size());
    for (const auto& r : losses)
        rows.push_back({r.stage, std::to_string(r.step), format_double(r.loss)});
    return rows;
}

int run_train(const std::string& config_path, const std::string& out_dir) {
    const auto cfg = RunConfig::from_file(config_path);
    const auto ds = make_binned_dataset(cfg.dataset, cfg.dataset_seed());
    const auto spec = cfg.ensemble_spec();

    EnsembleBuildInfo info;
    const auto model = build_ensemble(ds, spec, &info);

    fs::create_directories(out_dir);
    const fs::path out(out_dir);
    save_ensemble(model, cfg.hash(), info.subset_hashes, out / "checkpoint.decu");

    const std::vector<std::string> header{"stage", "step", "loss"};
    write_csv(out / "losses.csv", header, loss_rows(info.losses));

    nlohmann::json man;
    man["backbone_hash"] = info.backbone_hash;
    man["checkpoint"] = "checkpoint.decu";
    man["component_seeds"] = spec.component_seeds;
    man["config_hash"] = cfg.hash();
    man["dataset_hash"] = ds.hash();
    man["losses"] = "losses.csv";
    man["master_seed"] = cfg.master_seed;
    man["subset_hashes"] = info.subset_hashes;
    write_file(out / "manifest.json", man.dump(2) + "\n");

    std::cout << "trained " << model.num_components() << " components over "
              << ds.num_classes() << " classes; checkpoint at "
              << (out / "checkpoint.decu").string() << "\n";
    return 0;
}

int run_generate(const std::string& checkpoint, int class_id, int branch_point,
                 std::uint64_t seed, const std::string& out_dir) {
    const auto loaded = load_ensemble(checkpoint);
    const auto& model = loaded.model;
    const int b = branch_point >= 0 ? branch_point : model.sched.T;

    const auto trace = generate_with_branching(model, class_id, b, seed, model.ddim_steps);

    fs::create_directories(out_dir);
    const fs::path out(out_dir);
    for (int j = 0; j < model.num_components(); ++j)
        write_pgm(out / ("component_" + std::to_string(j) + ".pgm"),
                  trace.decoded_images[j]);

    const auto map = per_pixel_uncertainty(model, class_id, b, seed);
    write_matrix_csv(out / "pixel_uncertainty.csv", map);

    const double uncertainty =
        paide(EnsemblePrediction::uniform(trace.first_step_means), Premetric::W2Squared);

    nlohmann::json man;
    man["branch_point"] = b;
    man["class"] = class_id;
    man["config_hash"] = loaded.config_hash;
    man["prefix_component"] = trace.prefix_component;
    man["seed"] = seed;
    man["uncertainty"] = uncertainty;
    write_file(out / "manifest.json", man.dump(2) + "\n");

    std::cout << format_double(uncertainty) << "\n";
    return 0;
}

int run_experiment(const std::string& which, const std::string& checkpoint,
                   const std::string& config_path, const std::string& out_dir,
                   bool has_seed, std::uint64_t seed, int class_flag, int branch_flag) {
    const auto cfg = RunConfig::from_file(config_path);
    const auto loaded = load_ensemble(checkpoint);
    const auto& model = loaded.model;
    if (loaded.config_hash != cfg.hash())
        throw ConfigError("experiment: checkpoint was trained with a different config");

    const auto ds = make_binned_dataset(cfg.dataset, cfg.dataset_seed());
    fs::create_directories(out_dir);
    const fs::path out(out_dir);
    const int stride = model.sched.T / model.ddim_steps;

    if (which == "bins") {
        // Branch at the penultimate grid step unless overridden.
        const int b = branch_flag >= 0 ? branch_flag : stride;
        const std::uint64_t s = has_seed ? seed : cfg.experiment_seed("bins");
        const auto res = run_bin_experiment(model, ds, b, cfg.n_noise, s);

        std::vector<std::vector<std::string>> rows;
        for (int c = 0; c < ds.num_classes(); ++c)
            rows.push_back({std::to_string(c), to_string(res.bins[c]),
                            format_double(res.per_class[c])});
        const std::vector<std::string> header{"class_id", "bin", "uncertainty"};
        write_csv(out / "bins.csv", header, rows);

        std::vector<std::vector<std::string>> srows;
        for (const auto& su : res.summary)
            srows.push_back({to_string(su.bin), std::to_string(su.count),
                             format_double(su.mean), format_double(su.median),
                             format_double(su.stddev)});
        const std::vector<std::string> sheader{"bin", "count", "mean", "median", "stddev"};
        write_csv(out / "bins_summary.csv", sheader, srows);
    } else if (which == "diversity") {
        std::vector<int> bps;
        for (double f : cfg.branch_fractions)
            bps.push_back(branch_point_for_fraction(f, model.sched.T, model.ddim_steps));
        const std::uint64_t s = has_seed ? seed : cfg.experiment_seed("diversity");
        const auto table = run_diversity_experiment(model, ds, bps, cfg.n_seeds, s);

        std::vector<std::vector<std::string>> rows;
        for (const auto& cell : table.cells)
            rows.push_back({std::to_string(cell.b), to_string(cell.bin),
                            format_double(cell.mean), format_double(cell.stddev)});
        const std::vector<std::string> header{"b", "bin", "mean", "std"};
        write_csv(out / "diversity.csv", header, rows);
    } else if (which == "curve") {
        const int b = branch_flag >= 0 ? branch_flag : model.sched.T;
        const int cls = class_flag >= 0 ? class_flag : cfg.curve_class;
        const std::uint64_t s = has_seed ? seed : cfg.experiment_seed("curve");
        const auto curve = mean_uncertainty_curve(model, cls, b, cfg.curve_seeds, s);

        std::vector<std::vector<std::string>> rows;
        for (const auto& [step, u] : curve)
            rows.push_back({std::to_string(step), format_double(u)});
        const std::vector<std::string> header{"steps_past_branch", "uncertainty"};
        write_csv(out / "curve.csv", header, rows);
    } else { // pixels
        const int b = branch_flag >= 0 ? branch_flag : model.sched.T;
        const std::uint64_t s = has_seed ? seed : cfg.experiment_seed("pixels");
        const double lnm = std::log(static_cast<double>(model.num_components()));
        const SeededStream root(s);
        // One representative class per bin: the first of each block.
        for (int bin = 0; bin < kNumBins; ++bin) {
            int cls = -1;
            for (int c = 0; c < ds.num_classes(); ++c)
                if (static_cast<int>(ds.class_bins[c]) == bin) {
                    cls = c;
                    break;
                }
            if (cls < 0) continue;
            const int use_cls = class_flag >= 0 ? class_flag : cls;
            const auto map =
                per_pixel_uncertainty(model, use_cls, b, root.derive_key("class", use_cls));
            const std::string stem = "pixels_class" + std::to_string(use_cls);
            write_matrix_csv(out / (stem + ".csv"), map);
            write_pgm(out / (stem + ".pgm"), map, lnm);
            if (class_flag >= 0) break;
        }
    }
    return 0;
}

int run_inspect(const std::string& checkpoint) {
    const auto loaded = load_ensemble(checkpoint);
    const auto& model = loaded.model;
    const auto& bb = model.backbone;
    std::cout << "checkpoint: DECU1\n"
              << "latent_dim: " << bb.data_dim << "\n"
              << "hidden: " << bb.hidden << "\n"
              << "class_embed: " << bb.class_embed_dim << "\n"
              << "classes: " << model.num_classes() << "\n"
              << "schedule_steps: " << model.sched.T << "\n"
              << "beta_start: " << format_double(model.sched.betas.front()) << "\n"
              << "beta_end: " << format_double(model.sched.betas.back()) << "\n"
              << "ddim_steps: " << model.ddim_steps << "\n"
              << "codec: " << to_string(model.codec.kind) << "\n"
              << "image_size: " << model.codec.image_size << "\n"
              << "components: " << model.num_components() << "\n"
              << "config_hash: " << loaded.config_hash << "\n";
    for (int j = 0; j < model.num_components(); ++j)
        std::cout << "component " << j << ": seed " << model.component_seeds[j]
                  << ", subset_hash " << loaded.subset_hashes[j] << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"DECU: diffusion ensembles with pairwise-distance uncertainty estimates"};
    app.require_subcommand(1);

    std::string config_path, checkpoint_path, out_dir;
    std::uint64_t seed = 0;
    int class_id = -1;
    int branch_point = -1;
    std::string which;

    auto* train = app.add_subcommand("train", "train an ensemble from a config file");
    train->add_option("--config", config_path, "run config (JSON)")->required();
    train->add_option("--out", out_dir, "output directory")->required();

    auto* gen = app.add_subcommand("generate", "branched generation from a checkpoint");
    gen->add_option("--checkpoint", checkpoint_path, "DECU1 checkpoint")->required();
    gen->add_option("--class", class_id, "class id")->required();
    gen->add_option("--branch-point", branch_point, "branch step (default: T)");
    gen->add_option("--seed", seed, "generation seed");
    gen->add_option("--out", out_dir, "output directory")->required();

    auto* exp = app.add_subcommand("experiment", "run an experiment against a checkpoint");
    exp->add_option("which", which, "bins|diversity|curve|pixels")
        ->required()
        ->check(CLI::IsMember({"bins", "diversity", "curve", "pixels"}));
    exp->add_option("--checkpoint", checkpoint_path, "DECU1 checkpoint")->required();
    exp->add_option("--config", config_path, "run config (JSON)")->required();
    exp->add_option("--out", out_dir, "output directory")->required();
    exp->add_option("--seed", seed, "override the derived experiment seed");
    exp->add_option("--class", class_id, "class override (curve, pixels)");
    exp->add_option("--branch-point", branch_point, "branch step override");

    auto* inspect = app.add_subcommand("inspect", "print a checkpoint manifest");
    inspect->add_option("--checkpoint", checkpoint_path, "DECU1 checkpoint")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (train->parsed()) return run_train(config_path, out_dir);
        if (gen->parsed()) return run_generate(checkpoint_path, class_id, branch_point, seed,
                                               out_dir);
        if (exp->parsed())
            return run_experiment(which, checkpoint_path, config_path, out_dir,
                                  exp->count("--seed") > 0, seed, class_id, branch_point);
        if (inspect->parsed()) return run_inspect(checkpoint_path);
    } catch (const TrainingDiverged& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
