// SPDX-License-Identifier: Apache-2.0
#pragma once

// Agents turn the episode state (and, for model-backed agents, the rendered
// prompt) into one raw response string per turn. The scripted baselines here
// emit canonical <think>/<answer> responses so they exercise the same parsing
// path as a real model.

#include <panosearch/agent.hpp>
#include <panosearch/env.hpp>
#include <panosearch/synthetic.hpp>

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace panosearch
{

class Agent
{
  public:
    virtual ~Agent() = default;

    /// Raw response text for the next turn.
    virtual std::string respond(const EpisodeState& state, std::span<const ChatMessage> prompt) = 0;

    /// Whether respond() reads the prompt (lets the harness skip building it).
    [[nodiscard]] virtual bool wants_prompt() const noexcept { return false; }
};

/// One corrective turn toward the target centre, then submit. Reads the ground
/// truth, so it is only meaningful as an upper bound and as a test oracle.
Action oracle_policy(const EpisodeState& state);

/// Uniform yaw in [-180,180), pitch in [-30,30]; submit with probability 0.2.
class RandomPolicy
{
  public:
    static constexpr double kSubmitProbability = 0.2;
    static constexpr int kPitchRange = 30;

    explicit RandomPolicy(std::uint64_t seed) noexcept: rng_(seed) {}
    Action next(const EpisodeState& state);

  private:
    SplitRng rng_;
};

/// Rotate right by hfov * (1 - overlap) every turn; never submits.
Action sweep_policy(const ViewSpec& view, double overlap = 0.1);

class OracleAgent final: public Agent
{
  public:
    std::string respond(const EpisodeState& state, std::span<const ChatMessage> prompt) override;
};

class RandomAgent final: public Agent
{
  public:
    explicit RandomAgent(std::uint64_t seed) noexcept: policy_(seed) {}
    std::string respond(const EpisodeState& state, std::span<const ChatMessage> prompt) override;

  private:
    RandomPolicy policy_;
};

class SweepAgent final: public Agent
{
  public:
    explicit SweepAgent(double overlap = 0.1) noexcept: overlap_(overlap) {}
    std::string respond(const EpisodeState& state, std::span<const ChatMessage> prompt) override;

  private:
    double overlap_;
};

/// Stable 64-bit seed for an episode (FNV-1a of the id mixed with the run seed).
std::uint64_t episode_seed(std::uint64_t runSeed, std::string_view episodeId) noexcept;

/// "oracle" | "random" | "sweep"; anything else throws InvalidArgument.
std::unique_ptr<Agent> make_baseline_agent(std::string_view kind, std::uint64_t seed);

bool is_baseline_kind(std::string_view kind) noexcept;

} // namespace panosearch
