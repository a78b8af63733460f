// SPDX-License-Identifier: Apache-2.0
#include <panosearch/errors.hpp>
#include <panosearch/policies.hpp>
#include <panosearch/scoring.hpp>

#include <cmath>

namespace panosearch
{

Action oracle_policy(const EpisodeState& state)
{
    if (judge_success(state.current, state.task, state.tolerance()))
    {
        auto const [yaw, pitch] = reported_angles(state.current);
        return Submit {yaw, pitch};
    }
    auto const& c = state.task.target.center();
    auto const dyaw = static_cast<int>(std::lround(angular_diff(c.yaw_deg(), state.current.yaw_deg())));
    auto const dpitch = static_cast<int>(std::lround(c.pitch_deg() - state.current.pitch_deg()));
    return Rotate {dyaw, dpitch};
}

Action RandomPolicy::next(const EpisodeState& state)
{
    if (rng_.chance(kSubmitProbability))
    {
        auto const [yaw, pitch] = reported_angles(state.current);
        return Submit {yaw, pitch};
    }
    auto const dyaw = rng_.integer(-180, 179);
    auto const dpitch = rng_.integer(-kPitchRange, kPitchRange);
    return Rotate {dyaw, dpitch};
}

Action sweep_policy(const ViewSpec& view, double overlap)
{
    if (!(overlap >= 0.0 && overlap < 1.0))
        throw InvalidArgument("sweep overlap must be in [0, 1)");
    return Rotate {static_cast<int>(std::lround(view.hfov_deg() * (1.0 - overlap))), 0};
}

std::string OracleAgent::respond(const EpisodeState& state, std::span<const ChatMessage>)
{
    auto const a = oracle_policy(state);
    auto const* think = std::holds_alternative<Submit>(a) ? "The target is at the centre of the view."
                                                          : "Turning toward the target.";
    return render_response(think, a);
}

std::string RandomAgent::respond(const EpisodeState& state, std::span<const ChatMessage>)
{
    return render_response("Picking a direction at random.", policy_.next(state));
}

std::string SweepAgent::respond(const EpisodeState& state, std::span<const ChatMessage>)
{
    return render_response("Sweeping to the right.", sweep_policy(state.config.view, overlap_));
}

std::uint64_t episode_seed(std::uint64_t runSeed, std::string_view episodeId) noexcept
{
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch: episodeId)
    {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    SplitRng mix(h ^ runSeed);
    return mix.next();
}

bool is_baseline_kind(std::string_view kind) noexcept
{
    return kind == "oracle" || kind == "random" || kind == "sweep";
}

std::unique_ptr<Agent> make_baseline_agent(std::string_view kind, std::uint64_t seed)
{
    if (kind == "oracle")
        return std::make_unique<OracleAgent>();
    if (kind == "random")
        return std::make_unique<RandomAgent>(seed);
    if (kind == "sweep")
        return std::make_unique<SweepAgent>();
    throw InvalidArgument("unknown baseline policy '" + std::string(kind) + "'");
}

} // namespace panosearch
