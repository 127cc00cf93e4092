// SPDX-License-Identifier: Apache-2.0
// framepick: command-line front end for the pipeline and the review service.
#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "framepick/config.hpp"
#include "framepick/ingest.hpp"
#include "framepick/pipeline.hpp"
#include "framepick/remote.hpp"
#include "framepick/service.hpp"
#include "framepick/synth.hpp"
#include "framepick/validate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace framepick;

namespace {

EngineConfig config_or_default(const std::string& path) {
    return path.empty() ? EngineConfig{} : load_config(path);
}

int run_stage(const std::string& stage, const std::string& bundle, const std::string& config, int workers) {
    pipeline::RunOptions opts;
    opts.until = stage;
    if (workers > 0) opts.workers = workers;
    const auto run = pipeline::run_pipeline(bundle, config_or_default(config), opts);
    std::cout << run.to_json().dump(2) << "\n";
    return run.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"framepick: keyframe, crop and thumbnail candidate pipeline"};
    app.require_subcommand(1);

    std::string bundle, config;
    int workers = 0;

    auto* validate = app.add_subcommand("validate", "Check a dataset bundle");
    validate->add_option("--bundle", bundle, "Bundle directory")->required();

    std::vector<CLI::App*> stage_cmds;
    for (const auto& stage : pipeline::kStages) {
        auto* cmd = app.add_subcommand(stage, "Run the pipeline up to and including '" + stage + "'");
        cmd->add_option("--bundle", bundle, "Bundle directory")->required();
        cmd->add_option("--config", config, "Config file (JSON)");
        cmd->add_option("--workers", workers, "Worker threads (overrides the config)");
        stage_cmds.push_back(cmd);
    }

    std::vector<std::string> serve_bundles;
    std::string host;
    int port = 0;
    auto* serve = app.add_subcommand("serve", "Serve finished bundles over HTTP");
    serve->add_option("--bundle", serve_bundles, "Bundle directory (repeatable)")->required();
    serve->add_option("--config", config, "Config file (JSON)");
    serve->add_option("--host", host, "Listen address (default from config)");
    serve->add_option("--port", port, "Listen port (default FRAMEPICK_PORT, then config)");

    std::string endpoint, templates;
    auto* keywords = app.add_subcommand("keywords", "Extract keywords from the manifest summary via the remote endpoint");
    keywords->add_option("--bundle", bundle, "Bundle directory")->required();
    keywords->add_option("--config", config, "Config file (JSON)");
    keywords->add_option("--endpoint", endpoint, "Completion endpoint (default FRAMEPICK_KEYWORD_ENDPOINT)");
    keywords->add_option("--templates", templates, "Prompt template directory (default <bundle>/templates)");

    std::string out_dir;
    synth::SyntheticSpec spec;
    auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic bundle");
    synth_cmd->add_option("--out", out_dir, "Target directory")->required();
    synth_cmd->add_option("--frames", spec.frames, "Frame count");
    synth_cmd->add_option("--shots", spec.shots, "Shot count");
    synth_cmd->add_option("--seed", spec.seed, "Random seed");
    bool no_saliency = false;
    synth_cmd->add_flag("--no-saliency", no_saliency, "Omit saliency maps");

    std::string reference;
    auto* match = app.add_subcommand("match", "Compare reference thumbnail embeddings with keyframes and proposals");
    match->add_option("--bundle", bundle, "Bundle directory with a finished run")->required();
    match->add_option("--reference", reference, "Tensor file with one reference embedding per row")->required();
    match->add_option("--config", config, "Config file (JSON); tier thresholds come from 'reference'");

    auto* show_config = app.add_subcommand("config", "Print the effective config as JSON");
    show_config->add_option("--config", config, "Config file (JSON)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*validate) {
            const auto b = ingest::load_bundle(bundle);
            const auto report = validate_dataset(b.manifest, b.artifacts);
            std::cout << report.to_json().dump(2) << "\n";
            return report.usable() ? 0 : 2;
        }
        for (std::size_t i = 0; i < stage_cmds.size(); ++i)
            if (*stage_cmds[i]) return run_stage(pipeline::kStages[i], bundle, config, workers);
        if (*serve) {
            auto cfg = config_or_default(config);
            if (port == 0) {
                if (const char* env = std::getenv("FRAMEPICK_PORT")) port = std::atoi(env);
            }
            if (port == 0) port = cfg.service.port;
            if (host.empty()) host = cfg.service.host;
            std::vector<fs::path> roots(serve_bundles.begin(), serve_bundles.end());
            service::Service svc(roots, cfg);
            service::HttpServer server(svc);
            std::cerr << "serving " << roots.size() << " video(s) on http://" << host << ":" << port << "\n";
            server.listen(host, port);
            return 0;
        }
        if (*keywords) {
            const auto cfg = config_or_default(config);
            const auto b = ingest::load_bundle(bundle);
            ingest::KeywordClientConfig kc;
            kc.endpoint = endpoint.empty() ? cfg.keywords.endpoint : endpoint;
            kc.max_keywords = cfg.keywords.max_keywords;
            kc.max_tokens = cfg.keywords.max_tokens;
            kc.retries = cfg.keywords.retries;
            kc.timeout_s = cfg.keywords.timeout_s;
            ingest::load_keyword_templates(kc, templates.empty() ? b.paths.templates_dir : fs::path(templates));
            std::vector<std::string> metadata;
            for (const auto& k : b.manifest.keywords) metadata.push_back(k.text);
            const auto result = ingest::extract_keywords_remote(b.manifest.summary, b.manifest.title, kc, metadata);
            std::cout << json{{"keywords", result.keywords},
                              {"fell_back", result.fell_back},
                              {"attempts", result.attempts},
                              {"warnings", result.warnings}}
                             .dump(2)
                      << "\n";
            return 0;
        }
        if (*synth_cmd) {
            spec.write_saliency = !no_saliency;
            const auto truth = synth::write_synthetic_bundle(out_dir, spec);
            std::ofstream(fs::path(out_dir) / "framepick.json") << to_json(synth::synthetic_config()).dump(2) << "\n";
            std::cout << json{{"bundle", out_dir},
                              {"frames", truth.shot_of_frame.size()},
                              {"faces", truth.identity_of.size()},
                              {"config", (fs::path(out_dir) / "framepick.json").string()}}
                             .dump(2)
                      << "\n";
            return 0;
        }
        if (*match) {
            const auto cfg = config_or_default(config);
            const auto refs = ingest::read_tensor_file(reference);
            std::cout << pipeline::reference_report(bundle, refs, cfg.reference).dump(2) << "\n";
            return 0;
        }
        if (*show_config) {
            std::cout << to_json(config_or_default(config)).dump(2) << "\n";
            return 0;
        }
    } catch (const ingest::RemoteParseError& e) {
        std::cerr << "error: " << e.what() << "\nraw response: " << e.raw << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
