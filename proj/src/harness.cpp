// SPDX-License-Identifier: Apache-2.0
#include <panosearch/errors.hpp>
#include <panosearch/harness.hpp>
#include <panosearch/image.hpp>

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

namespace panosearch
{

EpisodeRecord start_record(std::string episodeId, const EpisodeState& state)
{
    EpisodeRecord r;
    r.episode_id = std::move(episodeId);
    r.task_id = state.task.id;
    r.task_type = state.task.task_type;
    r.difficulty = episode_difficulty(state.task, state.start_index);
    r.start_index = state.start_index;
    r.max_turns = state.config.max_turns;
    r.initial_direction = state.current;
    return r;
}

TurnRecord make_turn_record(const EpisodeState& state, bool wellFormed, std::string imagePath)
{
    auto const& h = state.history.back();
    TurnRecord t;
    t.turn = h.turn;
    t.observed_direction = h.observed_direction;
    t.action_raw = h.response_text;
    t.action = h.action;
    t.well_formed = wellFormed;
    t.feedback = h.feedback;
    t.direction = h.result_direction;
    t.image_path = std::move(imagePath);
    t.timestamp = utc_timestamp();
    return t;
}

void finalize_record(EpisodeRecord& record, const EpisodeState& state, std::optional<RewardVariant> variant)
{
    std::vector<std::string> responses;
    for (auto const& e: record.entries)
        responses.push_back(e.well_formed ? render_response("", e.action) : e.action_raw);

    auto const tol = state.tolerance();
    RewardParts parts;
    parts.r_corr = reward_correctness(state.success);
    parts.r_form = reward_format(responses);
    parts.r_dist = reward_distance(state.current, state.task.target, tol);

    TerminalRecord t;
    t.success = state.success;
    t.reason = std::string(to_string(state.reason));
    t.turns = state.turn;
    t.reward = compose_reward(variant.value_or(default_reward_variant(state.task.task_type)), parts);
    record.terminal = t;
}

namespace
{

struct ImageSink
{
    std::filesystem::path root;
    std::string episodeId;
    bool keepBytes = false;
    std::vector<std::shared_ptr<const std::vector<std::uint8_t>>> pngs;
    std::vector<std::string> paths;

    std::string add(const Observation& obs)
    {
        std::shared_ptr<const std::vector<std::uint8_t>> png;
        std::string rel;
        bool const haveRaster = obs.image.pixels.width() > 0;
        if (haveRaster && (keepBytes || !root.empty()))
            png = std::make_shared<const std::vector<std::uint8_t>>(encode_png(obs.image.pixels));
        if (png && !root.empty())
        {
            rel = turn_image_path(episodeId, obs.turn);
            auto const full = root / rel;
            std::filesystem::create_directories(full.parent_path());
            std::ofstream out(full, std::ios::binary);
            out.write(reinterpret_cast<const char*>(png->data()), static_cast<std::streamsize>(png->size()));
            if (!out)
                throw ResourceError("cannot write " + full.string());
        }
        pngs.push_back(keepBytes ? png : nullptr);
        paths.push_back(rel);
        return rel;
    }

    ImageRef get(int turn) const
    {
        auto const i = static_cast<std::size_t>(turn);
        if (i >= paths.size())
            return {};
        return {paths[i], pngs[i]};
    }
};

} // namespace

EpisodeRecord run_episode(const TaskInstance& task,
                          std::size_t startIndex,
                          const Panorama& pano,
                          Agent& agent,
                          const EpisodeRunOptions& options,
                          const std::string& episodeId)
{
    auto config = options.config;
    bool const wantImages = agent.wants_prompt() || !options.image_root.empty();
    if (!wantImages)
        config.render_observations = false;

    auto [state, obs] = reset(task, startIndex, config, pano);
    auto record = start_record(episodeId, state);

    ImageSink sink {options.image_root, episodeId, agent.wants_prompt(), {}, {}};
    record.initial_image_path = sink.add(obs);
    ImageProvider images = [&sink](int t) { return sink.get(t); };

    while (!state.done())
    {
        std::vector<ChatMessage> prompt;
        if (agent.wants_prompt())
            prompt = build_prompt(state, images, options.prompt);

        std::string response;
        try
        {
            response = agent.respond(state, prompt);
        }
        catch (const TransportError& e)
        {
            spdlog::error("episode {}: {}", episodeId, e.what());
            finalize_record(record, state, options.variant);
            record.terminal->success = false;
            record.terminal->errored = true;
            record.terminal->reason = "error";
            record.terminal->error_message = e.what();
            return record;
        }

        auto parsed = parse_response(response);
        obs = step(state, parsed.action, pano, response);
        record.entries.push_back(make_turn_record(state, parsed.well_formed, sink.add(obs)));
    }
    finalize_record(record, state, options.variant);
    return record;
}

AgentFactory baseline_factory(std::string kind, std::uint64_t runSeed)
{
    // validate eagerly so a typo fails before any episode runs
    (void) make_baseline_agent(kind, 0);
    return [kind = std::move(kind), runSeed](const std::string& episodeId) {
        return make_baseline_agent(kind, episode_seed(runSeed, episodeId));
    };
}

RunSummary run_benchmark(const Dataset& dataset, const AgentFactory& makeAgent, const RunConfig& config)
{
    config.episode.config.validate();
    if (config.workers < 1)
        throw InvalidArgument("workers must be at least 1");

    RunSummary summary;
    std::set<std::string> done;
    std::unique_ptr<RecordWriter> writer;
    auto options = config.episode;
    options.image_root.clear();

    if (!config.out_dir.empty())
    {
        std::filesystem::create_directories(config.out_dir);
        auto const path = config.out_dir / kRecordsFile;
        if (config.resume && std::filesystem::exists(path))
        {
            for (auto& r: load_records(path))
            {
                if (!r.terminal || !done.insert(r.episode_id).second)
                    continue;
                summary.records.push_back(std::move(r));
                ++summary.resumed;
            }
        }
        else if (std::filesystem::exists(path))
        {
            std::filesystem::remove(path);
        }
        writer = std::make_unique<RecordWriter>(path);
        if (config.write_images)
            options.image_root = config.out_dir;
    }

    std::mutex mutex;
    std::atomic<std::size_t> next {0};
    std::exception_ptr failure;

    auto worker = [&] {
        for (;;)
        {
            auto const i = next.fetch_add(1);
            if (i >= dataset.instances.size())
                return;
            auto const& task = dataset.instances[i];
            try
            {
                std::optional<Panorama> pano;
                for (std::size_t s = 0; s < task.start_orientations.size(); ++s)
                {
                    auto const id = make_episode_id(task.id, s);
                    if (done.contains(id))
                        continue;
                    if (!pano)
                        pano = load_task_panorama(dataset, task);
                    auto agent = makeAgent(id);
                    auto record = run_episode(task, s, *pano, *agent, options, id);
                    if (writer)
                        writer->append(record);
                    std::lock_guard lock(mutex);
                    summary.records.push_back(std::move(record));
                }
            }
            catch (...)
            {
                std::lock_guard lock(mutex);
                if (!failure)
                    failure = std::current_exception();
                next = dataset.instances.size();
                return;
            }
        }
    };

    {
        std::vector<std::jthread> threads;
        auto const n = std::min<std::size_t>(static_cast<std::size_t>(config.workers), dataset.instances.size());
        for (std::size_t t = 1; t < n; ++t)
            threads.emplace_back(worker);
        worker();
    }
    if (failure)
        std::rethrow_exception(failure);

    std::sort(summary.records.begin(), summary.records.end(),
              [](auto const& a, auto const& b) { return a.episode_id < b.episode_id; });
    summary.report = aggregate_report(
        [&] {
            std::vector<EpisodeResult> results;
            for (auto const& r: summary.records)
                if (auto e = to_episode_result(r))
                    results.push_back(*e);
            return results;
        }(),
        config.episode.config.max_turns);

    if (!config.out_dir.empty())
    {
        std::ofstream(config.out_dir / "report.json") << report_to_json(summary.report).dump(2) << '\n';
        std::ofstream(config.out_dir / "report.txt") << format_report_table(summary.report);
    }
    return summary;
}

} // namespace panosearch
