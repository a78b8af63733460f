// SPDX-License-Identifier: Apache-2.0
#include <panosearch/agent.hpp>
#include <panosearch/errors.hpp>

#include <algorithm>

namespace panosearch
{

namespace
{

constexpr std::string_view kHosSystem =
    "You are a robot and perform object searching tasks according to instructions. Your goal is to rotate the camera "
    "to center the target object in the camera view, and then submit the task. The camera center is presented as a "
    "green cross in the picture.";

constexpr std::string_view kHpsSystem =
    "You are a robot and perform navigation tasks according to instructions. Your goal is to turn your camera center "
    "to the target direction you need to move towards to reach the target location. The camera center is presented "
    "as a green cross in the picture. Don't move in the unavailable direction, such as obstacles or gaps.";

constexpr std::string_view kActionsHead =
    "Actions you can take: rotate(yaw:int,pitch:int), submit(yaw:int,pitch:int)\n"
    "rotate(yaw:int,pitch:int): rotate the camera in the yaw and pitch direction relative to the current direction. "
    "Yaw is the rotation angle in the x-y plane, pitch is the rotation angle in the y-z plane. ";
constexpr std::string_view kYawSignFixed = "Yaw angle > 0 means rotate to the right, yaw angle < 0 means rotate to the left. ";
constexpr std::string_view kYawSignVerbatim = "Yaw angle < 0 means rotate to the right, yaw angle < 0 means rotate to the left. ";
constexpr std::string_view kActionsTail =
    "Pitch angle > 0 means look up, pitch angle < 0 means look down.\n"
    "submit(yaw:int,pitch:int): submit the task with the current camera view with the target object at the center, "
    "yaw and pitch are the angles of the current camera view, which is reported by the environment.\n"
    "You can only take one action at a time. The instruction will be provided with each observation. Look at the "
    "image carefully to complete the instruction.\n";

// Kept exactly as published, spelling slips included.
constexpr std::string_view kFewShot =
    "Example:\n"
    "Round 1:\n"
    "image_1\n"
    "<think>I need to find the coffee machine. I can see a table on on my left, a couch in front of me, and a door to "
    "the right. The coffee machine is likely on the table, which is to my left.</think><answer>rotate(-45,0)</answer>\n"
    "Round 2:\n"
    "Env_feedback: Last action is executed successfully, your current direction (yaw,pitch) is (315,0).\n"
    "image_2\n"
    "<think>From the secene, I see that by turning left 45 degrees, a kitchen table is in front of me. The coffee "
    "machine is on the left of the table and slightly lower than the camera center. I need to turn leftward and "
    "downward a little bit.</think>\n"
    "<answer>rotate(-30,-5)</answer>\n"
    "Round 3:\n"
    "Env_feedback: Last action is executed successfully, your current direction (yaw,pitch) is (285,-5).\n"
    "image_3\n"
    "<think>The coffee machine is right now at the center of my camera, I think I can submit the task.</think>\n"
    "<answer>submit(285,-5)</answer>\n"
    "Round 4:\n"
    "Env_feedback: Success\n";

constexpr std::string_view kFormatBlock =
    "You can take 1 action(s) at a time.\n"
    "You should first give your thought process, and then your answer.\n"
    "Your response should be in the format of:\n"
    "<think>...</think><answer>...</answer>\n"
    "e.g. <think>I need to find the coffee machine. I can see a table on on my left, a couch in front of me, and a "
    "door to the right. The coffee machine is likely on the table, which is to my left.</think>"
    "<answer>rotate(-45,0)</answer>";

constexpr std::string_view kTurnTail =
    "Human Instruction: {instruction}\n"
    "Decide your next action.\n"
    "You can take 1 action(s) at a time. You should first give your thought process, and then your answer.\n"
    "Your response should be in the format of:\n"
    "<think>...</think><answer>...</answer>";

// Slots are substituted in a single left-to-right pass so slot values that
// happen to contain "{...}" are never expanded again.
std::string fill(std::string_view tmpl, std::initializer_list<std::pair<std::string_view, std::string_view>> slots)
{
    std::string out;
    std::size_t i = 0;
    while (i < tmpl.size())
    {
        bool matched = false;
        if (tmpl[i] == '{')
        {
            for (auto const& [name, value]: slots)
            {
                if (tmpl.compare(i + 1, name.size(), name) == 0 && i + 1 + name.size() < tmpl.size()
                    && tmpl[i + 1 + name.size()] == '}')
                {
                    out += value;
                    i += name.size() + 2;
                    matched = true;
                    break;
                }
            }
        }
        if (!matched)
            out += tmpl[i++];
    }
    return out;
}

// Splits text at the observation slot into text / image parts.
std::vector<ContentPart> split_parts(const std::string& text, const std::optional<ImageRef>& image)
{
    std::vector<ContentPart> parts;
    auto const pos = text.find(kObservationSlot);
    if (pos == std::string::npos)
    {
        parts.push_back({ContentPart::Kind::Text, text, {}});
        return parts;
    }
    auto const before = text.substr(0, pos);
    auto const after = text.substr(pos + kObservationSlot.size());
    if (!before.empty())
        parts.push_back({ContentPart::Kind::Text, before, {}});
    if (image)
        parts.push_back({ContentPart::Kind::Image, {}, *image});
    else
        parts.push_back({ContentPart::Kind::Text, "(image omitted)", {}});
    if (!after.empty())
        parts.push_back({ContentPart::Kind::Text, after, {}});
    return parts;
}

} // namespace

std::string_view to_string(Role r) noexcept
{
    switch (r)
    {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "user";
}

std::string ChatMessage::text() const
{
    std::string out;
    for (auto const& p: parts)
        out += p.kind == ContentPart::Kind::Text ? p.text : std::string(kObservationSlot);
    return out;
}

std::size_t ChatMessage::image_count() const noexcept
{
    return static_cast<std::size_t>(
        std::count_if(parts.begin(), parts.end(), [](auto const& p) { return p.kind == ContentPart::Kind::Image; }));
}

std::string PromptBundle::full_system_text() const
{
    std::string out = system_text;
    if (few_shot)
        out += *few_shot;
    out += kFormatBlock;
    return out;
}

PromptBundle make_prompt_bundle(TaskType type, const PromptOptions& options)
{
    PromptBundle b;
    b.system_text = std::string(type == TaskType::HOS ? kHosSystem : kHpsSystem);
    b.system_text += "\n";
    b.system_text += kActionsHead;
    b.system_text += options.verbatim_sign_typo ? kYawSignVerbatim : kYawSignFixed;
    b.system_text += kActionsTail;
    if (options.few_shot)
        b.few_shot = std::string(kFewShot);

    b.user_turn_template =
        "After your answer, the extracted valid action is {valid_action}.\n"
        "The environment feedback is: {env_feedback}\n"
        "done: {done}\n"
        "After that, the observation is:\n"
        "{observation}\n";
    b.user_turn_template += kTurnTail;

    b.initial_turn_template = "The initial observation is:\n{observation}\n";
    b.initial_turn_template += kTurnTail;
    return b;
}

std::string render_user_turn(const PromptBundle& bundle,
                             std::string_view validAction,
                             std::string_view envFeedback,
                             bool done,
                             std::string_view instruction)
{
    return fill(bundle.user_turn_template,
                {{"valid_action", validAction},
                 {"env_feedback", envFeedback},
                 {"done", done ? "True" : "False"},
                 {"observation", kObservationSlot},
                 {"instruction", instruction}});
}

std::string render_initial_turn(const PromptBundle& bundle, std::string_view instruction)
{
    return fill(bundle.initial_turn_template, {{"observation", kObservationSlot}, {"instruction", instruction}});
}

std::vector<ChatMessage> build_prompt(const PromptRequest& request)
{
    if (request.task == nullptr)
        throw InvalidArgument("build_prompt needs a task");
    if (request.history_window < 1)
        throw InvalidArgument("history window must be at least 1");

    auto const& task = *request.task;
    auto const bundle = make_prompt_bundle(task.task_type, request.options);
    auto const history = request.history;
    auto const window = static_cast<std::size_t>(request.history_window);
    auto const first = history.size() > window ? history.size() - window : 0;

    // user message for the observation seen at turn k
    std::vector<int> userTurns;
    for (auto i = first; i < history.size(); ++i)
        userTurns.push_back(history[i].turn - 1);
    if (request.include_pending_user)
        userTurns.push_back(request.current_turn);
    auto const imagesFrom = userTurns.size() > window ? userTurns.size() - window : 0;

    std::vector<ChatMessage> messages;
    messages.push_back({Role::System, {{ContentPart::Kind::Text, bundle.full_system_text(), {}}}});

    auto user_message = [&](int k, std::size_t ordinal) {
        std::string text;
        if (k == 0)
        {
            text = render_initial_turn(bundle, task.instruction);
        }
        else
        {
            auto const& prev = history[static_cast<std::size_t>(k - 1)];
            text = render_user_turn(bundle, action_text(prev.action), prev.feedback, false, task.instruction);
        }
        std::optional<ImageRef> image;
        if (ordinal >= imagesFrom && request.images)
            image = request.images(k);
        return ChatMessage {Role::User, split_parts(text, image)};
    };

    std::size_t ordinal = 0;
    for (auto i = first; i < history.size(); ++i, ++ordinal)
    {
        messages.push_back(user_message(history[i].turn - 1, ordinal));
        auto response = history[i].response_text;
        if (response.empty())
            response = render_response("", history[i].action);
        messages.push_back({Role::Assistant, {{ContentPart::Kind::Text, std::move(response), {}}}});
    }
    if (request.include_pending_user)
        messages.push_back(user_message(request.current_turn, ordinal));
    return messages;
}

std::vector<ChatMessage> build_prompt(const EpisodeState& state, const ImageProvider& images, const PromptOptions& options)
{
    PromptRequest req;
    req.task = &state.task;
    req.history = state.history;
    req.current_turn = state.turn;
    req.history_window = state.config.history_window;
    req.options = options;
    req.images = images;
    return build_prompt(req);
}

std::string render_transcript(std::span<const ChatMessage> messages)
{
    std::string out;
    for (auto const& m: messages)
    {
        out += "### ";
        out += to_string(m.role);
        out += "\n";
        for (auto const& p: m.parts)
        {
            if (p.kind == ContentPart::Kind::Text)
                out += p.text;
            else
                out += "<image:" + p.image.path + ">";
        }
        out += "\n";
    }
    return out;
}

} // namespace panosearch
