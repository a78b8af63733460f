// SPDX-License-Identifier: Apache-2.0
#pragma once

// Prompt construction for chat-style multimodal agents.
//
// A conversation is: one system message, then for every visible turn a user
// message (feedback slots + observation image) followed by the assistant's
// response, and finally the user message carrying the current observation.
// Only the newest `history_window` user messages keep their image.

#include <panosearch/env.hpp>
#include <panosearch/tasks.hpp>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace panosearch
{

enum class Role
{
    System,
    User,
    Assistant,
};

std::string_view to_string(Role r) noexcept;

struct ImageRef
{
    std::string path; ///< relative path for exports / logs
    std::shared_ptr<const std::vector<std::uint8_t>> png; ///< inline bytes for remote requests
};

struct ContentPart
{
    enum class Kind
    {
        Text,
        Image,
    };

    Kind kind = Kind::Text;
    std::string text;
    ImageRef image;
};

struct ChatMessage
{
    Role role = Role::User;
    std::vector<ContentPart> parts;

    /// Concatenated text parts, images shown as "<image>".
    [[nodiscard]] std::string text() const;
    [[nodiscard]] std::size_t image_count() const noexcept;
};

struct PromptOptions
{
    bool few_shot = false;
    /// Reproduce the original rotate() description, whose first yaw clause says "< 0" for both directions.
    bool verbatim_sign_typo = false;
};

struct PromptBundle
{
    std::string system_text;
    std::optional<std::string> few_shot;
    std::string user_turn_template;    ///< slots: {valid_action} {env_feedback} {done} {observation} {instruction}
    std::string initial_turn_template; ///< slots: {observation} {instruction}

    /// System message: task prompt, action description, optional few-shot block, format reminder.
    [[nodiscard]] std::string full_system_text() const;
};

inline constexpr std::string_view kObservationSlot = "<image>";

PromptBundle make_prompt_bundle(TaskType type, const PromptOptions& options = {});

std::string render_user_turn(const PromptBundle& bundle,
                             std::string_view validAction,
                             std::string_view envFeedback,
                             bool done,
                             std::string_view instruction);
std::string render_initial_turn(const PromptBundle& bundle, std::string_view instruction);

/// Observation image shown at turn `t` (0 = reset observation).
using ImageProvider = std::function<ImageRef(int turn)>;

struct PromptRequest
{
    const TaskInstance* task = nullptr;
    std::span<const HistoryEntry> history; ///< full history; windowing happens inside
    int current_turn = 0;
    int history_window = 5;
    PromptOptions options;
    ImageProvider images;
    /// Append the user message for the current observation (false for SFT exports).
    bool include_pending_user = true;
};

std::vector<ChatMessage> build_prompt(const PromptRequest& request);

/// Convenience: prompt for the live state of an episode.
std::vector<ChatMessage> build_prompt(const EpisodeState& state, const ImageProvider& images, const PromptOptions& options = {});

/// Plain-text transcript of a conversation (used by golden tests and logs).
std::string render_transcript(std::span<const ChatMessage> messages);

} // namespace panosearch
