// SPDX-License-Identifier: Apache-2.0
#pragma once

// Episode / render / task service (JSON over HTTP).
//
//   POST /episodes                     {task_id, start_index, config?}
//   POST /episodes/{id}/step           {raw_response} | {action: {type, yaw, pitch}}
//   GET  /episodes/{id}                EpisodeRecord
//   GET  /episodes/{id}/images/{turn}  PNG
//   GET  /render?pano=&yaw=&pitch=&hfov=&w=&h=&cross=
//   GET  /tasks    POST /tasks    POST /tasks/{id}/backproject
//   GET  /report?run=
//
// Every handler is a thin wrapper over the public member of the same name, so
// the wire and in-process paths share one implementation.

#include <panosearch/env.hpp>
#include <panosearch/projection.hpp>
#include <panosearch/records.hpp>
#include <panosearch/tasks.hpp>

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace panosearch
{

struct ServiceConfig
{
    std::filesystem::path manifest;   ///< dataset served (and updated by POST /tasks)
    std::filesystem::path out_dir;    ///< records of service episodes go to out_dir/service
    EpisodeConfig episode_defaults;
    int render_workers = 2;           ///< concurrent renders across all requests
    std::size_t panorama_cache = 8;   ///< decoded panoramas kept in memory
    bool write_images = true;
    std::string host = "127.0.0.1";
    int port = 8080;                  ///< 0 picks a free port
};

/// Thrown for unknown episode / task / run ids (HTTP 404).
class NotFound: public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

class EpisodeService
{
  public:
    /// Loads the dataset; ResourceError / ParseError when it cannot be read.
    explicit EpisodeService(ServiceConfig config);
    ~EpisodeService();

    EpisodeService(const EpisodeService&) = delete;
    EpisodeService& operator=(const EpisodeService&) = delete;

    nlohmann::json create_episode(const nlohmann::json& body);
    nlohmann::json step_episode(const std::string& episodeId, const nlohmann::json& body);
    EpisodeRecord episode_record(const std::string& episodeId) const;
    std::vector<std::uint8_t> episode_image(const std::string& episodeId, int turn) const;

    std::vector<std::uint8_t> render_png(const std::string& pano, const Direction& dir, const ViewSpec& spec, bool crosshair);

    nlohmann::json list_tasks() const;
    nlohmann::json save_task(const nlohmann::json& body);
    AngularBox backproject(const nlohmann::json& body) const;

    nlohmann::json report(const std::string& runId) const;

    /// Binds the listening socket (ConfigError when the port is busy); returns the port.
    int bind();
    /// Serves on a background thread until stop().
    void start();
    /// Stops serving and flushes unfinished episodes to out_dir/service/unfinished.jsonl.
    void stop();
    [[nodiscard]] int port() const noexcept;

    [[nodiscard]] std::filesystem::path records_dir() const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

nlohmann::json direction_json(const Direction& d);
nlohmann::json box_json(const AngularBox& b);

} // namespace panosearch
