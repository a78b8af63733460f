// SPDX-License-Identifier: Apache-2.0
// panosearch: benchmark runs, dataset tooling and the episode service.

#include <panosearch/errors.hpp>
#include <panosearch/harness.hpp>
#include <panosearch/remote_agent.hpp>
#include <panosearch/service.hpp>
#include <panosearch/sft.hpp>
#include <panosearch/synthetic.hpp>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <csignal>
#include <fstream>
#include <iostream>
#include <semaphore>

using namespace panosearch;

namespace
{

std::binary_semaphore g_shutdown {0};

extern "C" void on_signal(int)
{
    g_shutdown.release();
}

struct ViewArgs
{
    int width = 1920;
    int height = 1080;
    double hfov = 90.0;

    void add(CLI::App* cmd)
    {
        cmd->add_option("--width", width, "Observation width in pixels")->capture_default_str();
        cmd->add_option("--height", height, "Observation height in pixels")->capture_default_str();
        cmd->add_option("--hfov", hfov, "Horizontal field of view in degrees")->capture_default_str();
    }

    [[nodiscard]] ViewSpec spec() const { return ViewSpec(width, height, hfov); }
};

int cmd_validate(const std::filesystem::path& manifest, bool checkPanoramas)
{
    auto ds = parse_dataset(manifest, ParseOptions {false});
    std::vector<std::string> problems;
    if (checkPanoramas)
        problems = check_panorama_refs(ds);
    for (auto const& p: problems)
        std::cerr << p << '\n';
    std::size_t hos = 0;
    for (auto const& t: ds.instances)
        hos += t.task_type == TaskType::HOS;
    fmt::print("{}: {} instances ({} HOS, {} HPS), split {}, manifest version {}\n",
               manifest.string(), ds.instances.size(), hos, ds.instances.size() - hos, to_string(ds.split),
               ds.manifest_version);
    return problems.empty() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app {"Panoramic visual search benchmark tools"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Debug logging");

    // validate
    auto* validate = app.add_subcommand("validate", "Check a dataset manifest");
    std::filesystem::path vDataset;
    bool vSkipPanos = false;
    validate->add_option("--dataset", vDataset, "Manifest (JSONL)")->required();
    validate->add_flag("--skip-panoramas", vSkipPanos, "Do not check that panorama files exist");

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset with planted targets");
    std::uint64_t sSeed = 0;
    SynthSpec sSpec;
    std::filesystem::path sOut = "synthetic";
    synth->add_option("--seed", sSeed, "Generator seed")->capture_default_str();
    synth->add_option("--n-hos", sSpec.n_hos, "Object search instances")->capture_default_str();
    synth->add_option("--n-hps", sSpec.n_hps, "Path search instances")->capture_default_str();
    synth->add_option("--pano-width", sSpec.pano_width, "Panorama width (height = width / 2)")->capture_default_str();
    synth->add_option("--out", sOut, "Output directory")->capture_default_str();

    // run
    auto* run = app.add_subcommand("run", "Run a benchmark");
    std::filesystem::path rDataset;
    std::filesystem::path rOut;
    std::string rAgent = "oracle";
    std::uint64_t rSeed = 0;
    RunConfig rConfig;
    ViewArgs rView;
    bool rNoImages = false;
    std::string rVariant;
    EndpointConfig endpoint;
    endpoint.auth_token_env_var = "";
    run->add_option("--dataset", rDataset, "Manifest (JSONL)")->required();
    run->add_option("--agent", rAgent, "oracle | random | sweep | remote")->capture_default_str();
    run->add_option("--out", rOut, "Run directory")->required();
    run->add_option("--seed", rSeed, "Seed for the scripted baselines")->capture_default_str();
    run->add_option("--max-turns", rConfig.episode.config.max_turns, "Turn cap")->capture_default_str();
    run->add_option("--history-window", rConfig.episode.config.history_window, "Observations kept in the prompt")
        ->capture_default_str();
    run->add_option("--workers", rConfig.workers, "Parallel task workers")->capture_default_str();
    run->add_option("--reward-variant", rVariant, "form_corr | form_corr_dist | form_dist (default per task)");
    run->add_flag("--resume", rConfig.resume, "Skip episodes already recorded in the run directory");
    run->add_flag("--no-images", rNoImages, "Do not write observation PNGs");
    run->add_flag("--few-shot", rConfig.episode.prompt.few_shot, "Include the worked example in the system prompt");
    rView.add(run);
    run->add_option("--endpoint", endpoint.base_url, "Remote: base URL, e.g. http://127.0.0.1:8000/v1");
    run->add_option("--model", endpoint.model_name, "Remote: model name");
    run->add_option("--token-env", endpoint.auth_token_env_var, "Remote: environment variable holding the bearer token");
    run->add_option("--temperature", endpoint.temperature, "Remote: sampling temperature")->capture_default_str();
    run->add_option("--timeout", endpoint.timeout_s, "Remote: request timeout in seconds")->capture_default_str();
    run->add_option("--retries", endpoint.max_retries, "Remote: retries per request")->capture_default_str();
    run->add_option("--concurrency", endpoint.max_concurrency, "Remote: requests in flight")->capture_default_str();

    // report
    auto* report = app.add_subcommand("report", "Aggregate the records of a run");
    std::filesystem::path pRun;
    bool pJson = false;
    report->add_option("--run", pRun, "Run directory")->required();
    report->add_flag("--json", pJson, "Print JSON instead of the table");

    // export-sft
    auto* exportSft = app.add_subcommand("export-sft", "Export logged episodes as fine-tuning conversations");
    std::filesystem::path eRun;
    std::filesystem::path eDataset;
    std::filesystem::path eOut;
    std::string eFilter = "success";
    SftOptions eOptions;
    exportSft->add_option("--run", eRun, "Run directory")->required();
    exportSft->add_option("--dataset", eDataset, "Manifest the run used")->required();
    exportSft->add_option("--out", eOut, "Output JSONL (default: <run>/sft.jsonl)");
    exportSft->add_option("--filter", eFilter, "success | all")
        ->check(CLI::IsMember({"success", "all"}))
        ->capture_default_str();
    exportSft->add_flag("--few-shot", eOptions.prompt.few_shot, "Include the worked example in the system prompt");

    // serve
    auto* serve = app.add_subcommand("serve", "Run the episode / render / task service");
    ServiceConfig svc;
    ViewArgs svcView;
    serve->add_option("--dataset", svc.manifest, "Manifest (JSONL)")->required();
    serve->add_option("--out", svc.out_dir, "Directory for records")->required();
    serve->add_option("--host", svc.host, "Listen address")->capture_default_str();
    serve->add_option("--port", svc.port, "Listen port")->capture_default_str();
    serve->add_option("--render-workers", svc.render_workers, "Concurrent renders")->capture_default_str();
    serve->add_option("--max-turns", svc.episode_defaults.max_turns, "Default turn cap")->capture_default_str();
    svcView.add(serve);

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

    try
    {
        if (validate->parsed())
            return cmd_validate(vDataset, !vSkipPanos);

        if (synth->parsed())
        {
            sSpec.pano_height = sSpec.pano_width / 2;
            auto const ds = generate_synthetic(sSeed, sSpec, sOut);
            fmt::print("wrote {} instances to {}\n", ds.instances.size(), (sOut / "manifest.jsonl").string());
            return 0;
        }

        if (run->parsed())
        {
            auto const ds = parse_dataset(rDataset);
            rConfig.episode.config.view = rView.spec();
            rConfig.out_dir = rOut;
            rConfig.write_images = !rNoImages;
            if (!rVariant.empty())
            {
                rConfig.episode.variant = reward_variant_from_string(rVariant);
                if (!rConfig.episode.variant)
                    throw ConfigError("unknown reward variant '" + rVariant + "'");
            }

            AgentFactory factory;
            if (rAgent == "remote")
            {
                auto client = std::make_shared<RemoteChatClient>(endpoint);
                factory = [client](const std::string&) { return std::make_unique<RemoteAgent>(client); };
            }
            else
            {
                factory = baseline_factory(rAgent, rSeed);
            }
            auto const summary = run_benchmark(ds, factory, rConfig);
            fmt::print("{} episodes ({} resumed)\n\n{}", summary.records.size(), summary.resumed,
                       format_report_table(summary.report));
            return 0;
        }

        if (report->parsed())
        {
            auto const records = load_records(pRun / kRecordsFile);
            auto const r = report_from_records(records);
            if (pJson)
                fmt::print("{}\n", report_to_json(r).dump(2));
            else
                fmt::print("{}", format_report_table(r));
            return 0;
        }

        if (exportSft->parsed())
        {
            auto const ds = parse_dataset(eDataset, ParseOptions {false});
            eOptions.success_only = eFilter == "success";
            if (eOut.empty())
                eOut = eRun / "sft.jsonl";
            auto const n = export_sft(eRun, ds, eOut, eOptions).size();
            fmt::print("exported {} trajectories to {}\n", n, eOut.string());
            return 0;
        }

        if (serve->parsed())
        {
            svc.episode_defaults.view = svcView.spec();
            EpisodeService service(svc);
            auto const port = service.bind();
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            service.start();
            spdlog::info("serving {} on {}:{}", svc.manifest.string(), svc.host, port);
            g_shutdown.acquire();
            spdlog::info("shutting down");
            service.stop();
            return 0;
        }
    }
    catch (const std::exception& e)
    {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 0;
}
