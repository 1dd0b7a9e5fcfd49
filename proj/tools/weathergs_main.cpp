#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "weathergs/checkpoint.hpp"
#include "weathergs/config.hpp"
#include "weathergs/error.hpp"
#include "weathergs/image_io.hpp"
#include "weathergs/pipeline.hpp"
#include "weathergs/renderer.hpp"
#include "weathergs/threading.hpp"

namespace fs = std::filesystem;
using namespace wgs;

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    std::string instruction;
    int64_t seed = -1;
    int threads = -1;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool with_instruction = false) {
    cmd->add_option("--config", flags.config_path, "Pipeline config JSON (defaults when omitted)");
    cmd->add_option("--out", flags.out_dir, "Output directory (overrides config)");
    cmd->add_option("--seed", flags.seed, "Global seed (overrides config)");
    cmd->add_option("--threads", flags.threads, "Worker threads, 0 = all cores (overrides config)");
    if (with_instruction)
        cmd->add_option("--instruction", flags.instruction,
                        "Weather-removal instruction (overrides config)");
}

PipelineConfig resolve_config(const CommonFlags& flags) {
    PipelineConfig config = flags.config_path.empty() ? default_pipeline_config()
                                                      : load_pipeline_config(flags.config_path);
    if (!flags.out_dir.empty()) config.out_dir = flags.out_dir;
    if (flags.seed >= 0) config.seed = static_cast<uint64_t>(flags.seed);
    if (flags.threads >= 0) config.threads = flags.threads;
    if (!flags.instruction.empty()) config.instruction = flags.instruction;
    config.validate();
    if (config.threads > 0) set_thread_count(config.threads);
    return config;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"WeatherGS desk-scale pipeline: synthesize weather-corrupted multi-view "
                 "datasets, preprocess them dense-to-sparse, train occlusion-masked "
                 "Gaussian splats, and evaluate against clean ground truth"};
    app.require_subcommand(1);

    // synth
    CommonFlags synth_flags;
    CLI::App* synth = app.add_subcommand("synth", "Generate the synthetic dataset");
    add_common(synth, synth_flags);

    // preprocess
    CommonFlags pre_flags;
    std::string pre_manifest;
    CLI::App* pre = app.add_subcommand("preprocess", "Run the dense-to-sparse stage (AEF + LED)");
    add_common(pre, pre_flags, /*with_instruction=*/true);
    pre->add_option("--manifest", pre_manifest, "Dataset manifest path")->required();

    // train
    CommonFlags train_flags;
    std::string train_manifest;
    bool use_masks = true, use_processed = true;
    CLI::App* tr = app.add_subcommand("train", "Optimize a Gaussian cloud");
    add_common(tr, train_flags);
    tr->add_option("--manifest", train_manifest, "Dataset manifest path")->required();
    tr->add_option("--use-masks", use_masks,
                   "Use predicted occlusion masks (false reproduces w/o LED)");
    tr->add_option("--use-processed", use_processed,
                   "Train on AEF-processed images (false reproduces w/o AEF)");

    // render
    std::string render_checkpoint, render_manifest, render_camera, render_out;
    int64_t render_view = -1;
    CLI::App* rd = app.add_subcommand("render", "Render one view from a checkpoint");
    rd->add_option("--checkpoint", render_checkpoint, "Checkpoint path")->required();
    rd->add_option("--manifest", render_manifest, "Manifest providing the camera");
    rd->add_option("--view-id", render_view, "View index into the manifest");
    rd->add_option("--camera", render_camera, "Camera spec JSON (alternative to manifest)");
    rd->add_option("--out", render_out, "Output PPM path")->required();

    // eval
    std::string eval_manifest, eval_checkpoint, eval_out;
    CLI::App* ev = app.add_subcommand("eval", "Evaluate a checkpoint on the test views");
    ev->add_option("--manifest", eval_manifest, "Dataset manifest path")->required();
    ev->add_option("--checkpoint", eval_checkpoint, "Checkpoint path")->required();
    ev->add_option("--out", eval_out, "Report path stem (writes <stem>.csv and <stem>.txt)")
        ->required();

    // pipeline
    CommonFlags pipe_flags;
    CLI::App* pipe = app.add_subcommand(
        "pipeline", "Full run: synth, preprocess, ablation trainings, comparison");
    add_common(pipe, pipe_flags, /*with_instruction=*/true);

    CLI11_PARSE(app, argc, argv);

    if (synth->parsed()) {
        const PipelineConfig config = resolve_config(synth_flags);
        bool skipped = false;
        const std::string manifest_path = run_synth_stage(config, &skipped);
        if (skipped) std::cout << "dataset up to date: ";
        std::cout << manifest_path << "\n";
        return 0;
    }

    if (pre->parsed()) {
        const PipelineConfig config = resolve_config(pre_flags);
        PreprocessConfig pp = config.preprocess;
        pp.seed = config.seed;
        const PreprocessResult result = run_preprocess(pre_manifest, config.instruction, pp);
        std::cout << "plugin: " << (result.plugin == TaskPlugin::Derain ? "Derain" : "Desnow")
                  << "\nmean mask coverage: " << result.mean_mask_coverage << "\n";
        if (result.led_low_contrast)
            std::cout << "warning: LED saw no cross-view contrast; masks are empty\n";
        return 0;
    }

    if (tr->parsed()) {
        const PipelineConfig config = resolve_config(train_flags);
        const DatasetManifest manifest = load_manifest(train_manifest);
        TrainConfig tc = config.train;
        tc.seed = config.seed;
        TrainOptions opts;
        opts.use_masks = use_masks;
        opts.use_processed = use_processed;
        opts.out_dir = config.out_dir;
        opts.config_hash = config_hash(config);
        const TrainResult result = train(manifest, tc, opts);
        std::cout << result.final_checkpoint_path << "\n";
        return 0;
    }

    if (rd->parsed()) {
        const CheckpointData ckpt = load_checkpoint(render_checkpoint);
        Camera camera;
        if (!render_manifest.empty()) {
            const DatasetManifest manifest = load_manifest(render_manifest);
            require(render_view >= 0 &&
                        render_view < static_cast<int64_t>(manifest.views.size()),
                    ErrorCode::Validation,
                    "render: --view-id out of range (manifest has " +
                        std::to_string(manifest.views.size()) + " views)");
            camera = manifest.views[static_cast<size_t>(render_view)].camera;
        } else {
            require(!render_camera.empty(), ErrorCode::Validation,
                    "render: pass --manifest with --view-id, or --camera");
            camera = load_camera_json(render_camera);
        }
        save_image(render_out, render(ckpt.cloud, camera));
        std::cout << render_out << "\n";
        return 0;
    }

    if (ev->parsed()) {
        const DatasetManifest manifest = load_manifest(eval_manifest);
        const CheckpointData ckpt = load_checkpoint(eval_checkpoint);
        EvalReport report = evaluate(manifest, ckpt.cloud);
        report.checkpoint_path = eval_checkpoint;
        write_report_csv(eval_out + ".csv", report);
        std::ofstream txt(eval_out + ".txt", std::ios::binary);
        require(txt.good(), ErrorCode::IoFailure, "eval: cannot write " + eval_out + ".txt");
        txt << report_table(report);
        std::cout << report_table(report);
        return 0;
    }

    if (pipe->parsed()) {
        const PipelineConfig config = resolve_config(pipe_flags);
        const PipelineSummary summary = run_full_pipeline(config);
        std::cout << "plugin: " << (summary.plugin == TaskPlugin::Derain ? "Derain" : "Desnow")
                  << "\n"
                  << summary.table.text;
        return 0;
    }
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.is_validation() ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
