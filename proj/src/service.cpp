// SPDX-License-Identifier: Apache-2.0
#include <panosearch/errors.hpp>
#include <panosearch/harness.hpp>
#include <panosearch/image.hpp>
#include <panosearch/service.hpp>

#include <fmt/format.h>
#include <httplib.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <semaphore>
#include <shared_mutex>
#include <thread>

namespace panosearch
{

nlohmann::json direction_json(const Direction& d)
{
    return {{"yaw", d.yaw_deg()}, {"pitch", d.pitch_deg()}};
}

nlohmann::json box_json(const AngularBox& b)
{
    return {{"yaw", b.center().yaw_deg()},
            {"pitch", b.center().pitch_deg()},
            {"width", b.width_deg()},
            {"height", b.height_deg()}};
}

namespace
{

struct LiveEpisode
{
    mutable std::mutex mutex;
    EpisodeState state;
    EpisodeRecord record;
    std::optional<RewardVariant> variant;
    std::shared_ptr<const Panorama> pano;
    bool persisted = false;
};

ViewSpec view_from_json(const nlohmann::json& j, const ViewSpec& fallback)
{
    return ViewSpec(j.value("width", fallback.width_px()),
                    j.value("height", fallback.height_px()),
                    j.value("hfov", fallback.hfov_deg()));
}

EpisodeConfig config_from_json(const nlohmann::json& j, EpisodeConfig cfg)
{
    if (j.is_null())
        return cfg;
    if (!j.is_object())
        throw InvalidArgument("config must be an object");
    cfg.max_turns = j.value("max_turns", cfg.max_turns);
    cfg.history_window = j.value("history_window", cfg.history_window);
    cfg.render_observations = j.value("render", cfg.render_observations);
    if (j.contains("view"))
        cfg.view = view_from_json(j.at("view"), cfg.view);
    cfg.validate();
    return cfg;
}

Action action_from_wire(const nlohmann::json& j)
{
    auto const type = j.at("type").get<std::string>();
    auto const yaw = j.at("yaw").get<int>();
    auto const pitch = j.at("pitch").get<int>();
    if (type == "rotate")
        return Rotate {yaw, pitch};
    if (type == "submit")
        return Submit {yaw, pitch};
    throw InvalidArgument("action type must be 'rotate' or 'submit'");
}

bool safe_run_id(const std::string& id)
{
    return !id.empty() && id != "." && id != ".." && id.find('/') == std::string::npos
        && id.find('\\') == std::string::npos;
}

} // namespace

struct EpisodeService::Impl
{
    ServiceConfig config;

    mutable std::shared_mutex datasetMutex;
    Dataset dataset;
    std::map<std::string, int> taskVersions;

    mutable std::shared_mutex episodesMutex;
    std::map<std::string, std::shared_ptr<LiveEpisode>> episodes;
    std::atomic<std::uint64_t> episodeCounter {0};

    std::mutex panoMutex;
    std::map<std::string, std::shared_ptr<const Panorama>> panoramas;
    std::vector<std::string> panoOrder;

    std::counting_semaphore<256> renderSlots;
    std::unique_ptr<RecordWriter> writer;

    httplib::Server server;
    std::thread serverThread;
    int boundPort = -1;
    bool stopped = false;

    explicit Impl(ServiceConfig cfg):
        config(std::move(cfg)), renderSlots(std::clamp(config.render_workers, 1, 256))
    {
        if (config.render_workers < 1)
            throw ConfigError("render_workers must be at least 1");
        config.episode_defaults.validate();
        dataset = parse_dataset(config.manifest);
        for (auto const& t: dataset.instances)
            taskVersions[t.id] = 1;
        writer = std::make_unique<RecordWriter>(records_dir() / kRecordsFile);
    }

    std::filesystem::path records_dir() const { return config.out_dir / "service"; }

    std::shared_ptr<const Panorama> panorama_for(const TaskInstance& task)
    {
        std::filesystem::path path;
        {
            std::shared_lock lock(datasetMutex);
            path = dataset.panorama_path(task);
        }
        auto const key = path.lexically_normal().string();
        std::lock_guard lock(panoMutex);
        if (auto it = panoramas.find(key); it != panoramas.end())
            return it->second;
        if (!std::filesystem::is_regular_file(path))
            throw ResourceError("panorama not found: " + path.string());
        auto pano = std::make_shared<const Panorama>(Panorama::load(path, task.panorama_ref));
        panoramas[key] = pano;
        panoOrder.push_back(key);
        while (panoOrder.size() > std::max<std::size_t>(config.panorama_cache, 1))
        {
            panoramas.erase(panoOrder.front());
            panoOrder.erase(panoOrder.begin());
        }
        return pano;
    }

    TaskInstance task_by_id(const std::string& id) const
    {
        std::shared_lock lock(datasetMutex);
        auto const* t = dataset.find(id);
        if (t == nullptr)
            throw NotFound("unknown task '" + id + "'");
        return *t;
    }

    std::shared_ptr<LiveEpisode> episode(const std::string& id) const
    {
        std::shared_lock lock(episodesMutex);
        auto it = episodes.find(id);
        if (it == episodes.end())
            throw NotFound("unknown episode '" + id + "'");
        return it->second;
    }

    // Encodes the observation, stores it next to the records and returns the base64 payload.
    std::pair<std::string, std::string> store_image(const std::string& episodeId, const Observation& obs)
    {
        if (obs.image.pixels.width() == 0)
            return {};
        auto const png = encode_png(obs.image.pixels);
        std::string rel;
        if (config.write_images)
        {
            rel = turn_image_path(episodeId, obs.turn);
            auto const full = records_dir() / rel;
            std::filesystem::create_directories(full.parent_path());
            std::ofstream out(full, std::ios::binary);
            out.write(reinterpret_cast<const char*>(png.data()), static_cast<std::streamsize>(png.size()));
            if (!out)
                throw ResourceError("cannot write " + full.string());
        }
        return {base64_encode(png), rel};
    }

    static nlohmann::json observation_json(const Observation& obs, const std::string& b64)
    {
        return {
            {"image_png_b64", b64},
            {"feedback", obs.feedback_text},
            {"direction", direction_json(obs.direction)},
            {"turn", obs.turn},
        };
    }
};

EpisodeService::EpisodeService(ServiceConfig config): impl_(std::make_unique<Impl>(std::move(config)))
{
    auto& srv = impl_->server;
    // httplib defaults to SO_REUSEPORT, which would let a second server share
    // the port silently; plain SO_REUSEADDR still allows quick restarts.
    srv.set_socket_options([](socket_t sock) {
        int yes = 1;
        ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });

    auto guard = [](auto&& fn) {
        return [fn = std::forward<decltype(fn)>(fn)](const httplib::Request& req, httplib::Response& res) {
            auto fail = [&res](int status, const std::string& msg) {
                res.status = status;
                res.set_content(nlohmann::json {{"error", msg}}.dump(), "application/json");
            };
            try
            {
                fn(req, res);
            }
            catch (const NotFound& e)
            {
                fail(404, e.what());
            }
            catch (const nlohmann::json::exception& e)
            {
                fail(400, std::string("malformed request: ") + e.what());
            }
            catch (const InvalidArgument& e)
            {
                fail(400, e.what());
            }
            catch (const ParseError& e)
            {
                fail(400, e.what());
            }
            catch (const InvalidState& e)
            {
                fail(409, e.what());
            }
            catch (const std::exception& e)
            {
                spdlog::error("{} {}: {}", req.method, req.path, e.what());
                fail(500, e.what());
            }
        };
    };
    auto send_json = [](httplib::Response& res, const nlohmann::json& j) {
        res.set_content(j.dump(), "application/json");
    };
    auto send_png = [](httplib::Response& res, const std::vector<std::uint8_t>& png) {
        res.set_content(std::string(png.begin(), png.end()), "image/png");
    };

    srv.Post("/episodes", guard([this, send_json](const httplib::Request& req, httplib::Response& res) {
                 send_json(res, create_episode(nlohmann::json::parse(req.body)));
             }));
    srv.Post(R"(/episodes/([^/]+)/step)",
             guard([this, send_json](const httplib::Request& req, httplib::Response& res) {
                 send_json(res, step_episode(req.matches[1], nlohmann::json::parse(req.body)));
             }));
    srv.Get(R"(/episodes/([^/]+))", guard([this, send_json](const httplib::Request& req, httplib::Response& res) {
                send_json(res, record_to_json(episode_record(req.matches[1])));
            }));
    srv.Get(R"(/episodes/([^/]+)/images/(\d+))",
            guard([this, send_png](const httplib::Request& req, httplib::Response& res) {
                send_png(res, episode_image(req.matches[1], std::stoi(req.matches[2])));
            }));
    srv.Get("/render", guard([this, send_png](const httplib::Request& req, httplib::Response& res) {
                auto num = [&req](const char* key, std::optional<double> fallback) {
                    if (!req.has_param(key))
                    {
                        if (!fallback)
                            throw InvalidArgument(std::string("missing query parameter '") + key + "'");
                        return *fallback;
                    }
                    try
                    {
                        return std::stod(req.get_param_value(key));
                    }
                    catch (const std::exception&)
                    {
                        throw InvalidArgument(std::string("bad query parameter '") + key + "'");
                    }
                };
                if (!req.has_param("pano"))
                    throw InvalidArgument("missing query parameter 'pano'");
                ViewSpec const spec(static_cast<int>(num("w", 1280)),
                                    static_cast<int>(num("h", 720)),
                                    num("hfov", 90.0));
                Direction const dir(num("yaw", std::nullopt), num("pitch", std::nullopt));
                bool const cross = req.get_param_value("cross") != "0";
                send_png(res, render_png(req.get_param_value("pano"), dir, spec, cross));
            }));
    srv.Get("/tasks", guard([this, send_json](const httplib::Request&, httplib::Response& res) {
                send_json(res, list_tasks());
            }));
    srv.Post("/tasks", guard([this, send_json](const httplib::Request& req, httplib::Response& res) {
                 send_json(res, save_task(nlohmann::json::parse(req.body)));
             }));
    srv.Post(R"(/tasks/([^/]+)/backproject)",
             guard([this, send_json](const httplib::Request& req, httplib::Response& res) {
                 send_json(res, box_json(backproject(nlohmann::json::parse(req.body))));
             }));
    srv.Get("/report", guard([this, send_json](const httplib::Request& req, httplib::Response& res) {
                send_json(res, report(req.has_param("run") ? req.get_param_value("run") : "service"));
            }));
}

EpisodeService::~EpisodeService()
{
    try
    {
        stop();
    }
    catch (const std::exception& e)
    {
        spdlog::error("service shutdown: {}", e.what());
    }
}

std::filesystem::path EpisodeService::records_dir() const
{
    return impl_->records_dir();
}

nlohmann::json EpisodeService::create_episode(const nlohmann::json& body)
{
    auto const taskId = body.at("task_id").get<std::string>();
    auto const start = body.value("start_index", std::size_t {0});
    auto const cfg = config_from_json(body.value("config", nlohmann::json()), impl_->config.episode_defaults);
    std::optional<RewardVariant> variant;
    if (body.contains("config") && body["config"].contains("reward_variant"))
    {
        variant = reward_variant_from_string(body["config"]["reward_variant"].get<std::string>());
        if (!variant)
            throw InvalidArgument("unknown reward_variant");
    }

    auto const task = impl_->task_by_id(taskId);
    auto ep = std::make_shared<LiveEpisode>();
    ep->pano = impl_->panorama_for(task);
    ep->variant = variant;

    auto const id = fmt::format("{}-{:06}", make_episode_id(task.id, start), ++impl_->episodeCounter);
    Observation obs;
    {
        impl_->renderSlots.acquire();
        struct Release
        {
            std::counting_semaphore<256>& s;
            ~Release() { s.release(); }
        } release {impl_->renderSlots};
        auto r = reset(task, start, cfg, *ep->pano);
        ep->state = std::move(r.first);
        obs = std::move(r.second);
    }
    ep->record = start_record(id, ep->state);
    auto [b64, rel] = impl_->store_image(id, obs);
    ep->record.initial_image_path = rel;

    {
        std::unique_lock lock(impl_->episodesMutex);
        impl_->episodes[id] = ep;
    }
    return {{"episode_id", id}, {"observation", Impl::observation_json(obs, b64)}};
}

nlohmann::json EpisodeService::step_episode(const std::string& episodeId, const nlohmann::json& body)
{
    auto ep = impl_->episode(episodeId);
    std::lock_guard lock(ep->mutex);
    if (ep->state.done())
        throw InvalidState("episode '" + episodeId + "' has ended");

    std::string raw;
    Action action;
    bool wellFormed = false;
    if (body.contains("raw_response"))
    {
        raw = body.at("raw_response").get<std::string>();
        auto parsed = parse_response(raw);
        action = parsed.action;
        wellFormed = parsed.well_formed;
    }
    else if (body.contains("action"))
    {
        action = action_from_wire(body.at("action"));
        raw = render_response("", action);
        wellFormed = true;
    }
    else
    {
        throw InvalidArgument("step needs 'raw_response' or 'action'");
    }

    Observation obs;
    {
        impl_->renderSlots.acquire();
        struct Release
        {
            std::counting_semaphore<256>& s;
            ~Release() { s.release(); }
        } release {impl_->renderSlots};
        obs = step(ep->state, action, *ep->pano, raw);
    }
    auto [b64, rel] = impl_->store_image(episodeId, obs);
    ep->record.entries.push_back(make_turn_record(ep->state, wellFormed, rel));

    nlohmann::json out = {
        {"observation", Impl::observation_json(obs, b64)},
        {"done", obs.done},
        {"valid_action", action_text(action)},
    };
    if (ep->state.done())
    {
        finalize_record(ep->record, ep->state, ep->variant);
        impl_->writer->append(ep->record);
        ep->persisted = true;
        auto const& t = *ep->record.terminal;
        out["success"] = t.success;
        out["reason"] = t.reason;
        out["reward"] = {{"r_corr", t.reward.r_corr},
                         {"r_form", t.reward.r_form},
                         {"r_dist", t.reward.r_dist},
                         {"total", t.reward.total},
                         {"variant", std::string(to_string(t.reward.variant))}};
    }
    return out;
}

EpisodeRecord EpisodeService::episode_record(const std::string& episodeId) const
{
    auto ep = impl_->episode(episodeId);
    std::lock_guard lock(ep->mutex);
    return ep->record;
}

std::vector<std::uint8_t> EpisodeService::episode_image(const std::string& episodeId, int turn) const
{
    auto const record = episode_record(episodeId);
    std::string rel = turn == 0 ? record.initial_image_path : std::string();
    for (auto const& e: record.entries)
        if (e.turn == turn)
            rel = e.image_path;
    if (rel.empty())
        throw NotFound(fmt::format("no image for turn {} of episode '{}'", turn, episodeId));
    return read_file_bytes(records_dir() / rel);
}

std::vector<std::uint8_t> EpisodeService::render_png(
    const std::string& pano, const Direction& dir, const ViewSpec& spec, bool crosshair)
{
    std::optional<TaskInstance> task;
    {
        std::shared_lock lock(impl_->datasetMutex);
        if (auto const* t = impl_->dataset.find(pano))
            task = *t;
        else
            for (auto const& t: impl_->dataset.instances)
                if (t.panorama_ref == pano)
                    task = t;
    }
    if (!task)
        throw NotFound("unknown panorama '" + pano + "'");
    auto const p = impl_->panorama_for(*task);

    impl_->renderSlots.acquire();
    struct Release
    {
        std::counting_semaphore<256>& s;
        ~Release() { s.release(); }
    } release {impl_->renderSlots};
    auto view = render_view(*p, dir, spec);
    if (crosshair)
        view = overlay_crosshair(std::move(view));
    return encode_png(view.pixels);
}

nlohmann::json EpisodeService::list_tasks() const
{
    std::shared_lock lock(impl_->datasetMutex);
    auto tasks = nlohmann::json::array();
    for (auto const& t: impl_->dataset.instances)
    {
        auto j = task_to_json(t);
        j["version"] = impl_->taskVersions.at(t.id);
        tasks.push_back(std::move(j));
    }
    return {{"split", std::string(to_string(impl_->dataset.split))}, {"tasks", std::move(tasks)}};
}

nlohmann::json EpisodeService::save_task(const nlohmann::json& body)
{
    auto payload = body;
    std::optional<int> expected;
    if (payload.is_object() && payload.contains("version"))
    {
        expected = payload.at("version").get<int>();
        payload.erase("version");
    }
    auto task = task_from_json(payload);

    std::unique_lock lock(impl_->datasetMutex);
    auto& ds = impl_->dataset;
    if (!std::filesystem::is_regular_file(ds.panorama_path(task)))
        throw InvalidArgument("panorama_ref '" + task.panorama_ref + "' does not exist");

    nlohmann::json out = {{"task_id", task.id}};
    auto it = std::find_if(ds.instances.begin(), ds.instances.end(), [&](auto const& t) { return t.id == task.id; });
    auto& version = impl_->taskVersions[task.id];
    if (expected && *expected != version)
        out["warning"] = fmt::format("task '{}' was at version {}, edit was based on {}; overwritten", task.id, version, *expected);
    if (it == ds.instances.end())
        ds.instances.push_back(task);
    else
        *it = task;
    ++version;

    // write-then-rename keeps the manifest readable if we die mid-write
    auto tmp = impl_->config.manifest;
    tmp += ".tmp";
    write_dataset_file(ds, tmp);
    std::filesystem::rename(tmp, impl_->config.manifest);

    out["version"] = version;
    out["saved"] = true;
    return out;
}

AngularBox EpisodeService::backproject(const nlohmann::json& body) const
{
    auto const& v = body.at("view_dir");
    Direction const dir(v.at("yaw").get<double>(), v.at("pitch").get<double>());
    auto const spec = view_from_json(body.at("spec"), ViewSpec::training());
    auto const& r = body.at("rect_px");
    PixelRect rect;
    rect.x0 = r.at("x0").get<double>();
    rect.y0 = r.at("y0").get<double>();
    rect.x1 = r.at("x1").get<double>();
    rect.y1 = r.at("y1").get<double>();
    return backproject_bbox(dir, spec, rect);
}

nlohmann::json EpisodeService::report(const std::string& runId) const
{
    if (!safe_run_id(runId))
        throw InvalidArgument("bad run id '" + runId + "'");
    auto const dir = runId == "service" ? records_dir() : impl_->config.out_dir / runId;
    auto const path = dir / kRecordsFile;
    if (!std::filesystem::is_regular_file(path))
        throw NotFound("unknown run '" + runId + "'");
    auto const records = load_records(path);
    return report_to_json(report_from_records(records));
}

int EpisodeService::bind()
{
    auto& s = *impl_;
    if (s.boundPort >= 0)
        return s.boundPort;
    if (s.config.port == 0)
        s.boundPort = s.server.bind_to_any_port(s.config.host);
    else if (s.server.bind_to_port(s.config.host, s.config.port))
        s.boundPort = s.config.port;
    if (s.boundPort < 0)
        throw ConfigError(fmt::format("cannot listen on {}:{}", s.config.host, s.config.port));
    return s.boundPort;
}

void EpisodeService::start()
{
    bind();
    impl_->serverThread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

int EpisodeService::port() const noexcept
{
    return impl_->boundPort;
}

void EpisodeService::stop()
{
    auto& s = *impl_;
    if (s.stopped)
        return;
    s.stopped = true;
    s.server.stop();
    if (s.serverThread.joinable())
        s.serverThread.join();

    std::vector<EpisodeRecord> unfinished;
    {
        std::shared_lock lock(s.episodesMutex);
        for (auto const& [id, ep]: s.episodes)
        {
            std::lock_guard epLock(ep->mutex);
            if (!ep->persisted)
                unfinished.push_back(ep->record);
        }
    }
    if (!unfinished.empty())
    {
        RecordWriter w(records_dir() / "unfinished.jsonl");
        for (auto const& r: unfinished)
            w.append(r);
        spdlog::info("flushed {} unfinished episode(s)", unfinished.size());
    }
}

} // namespace panosearch
