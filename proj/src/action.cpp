// SPDX-License-Identifier: Apache-2.0
#include <panosearch/action.hpp>

#include <fmt/format.h>

#include <charconv>
#include <limits>
#include <optional>

namespace panosearch
{

namespace
{

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";

bool is_space(char c) noexcept
{
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string_view trim(std::string_view s) noexcept
{
    while (!s.empty() && is_space(s.front()))
        s.remove_prefix(1);
    while (!s.empty() && is_space(s.back()))
        s.remove_suffix(1);
    return s;
}

bool consume(std::string_view& s, std::string_view token) noexcept
{
    if (!s.starts_with(token))
        return false;
    s.remove_prefix(token.size());
    return true;
}

bool contains_tag(std::string_view s) noexcept
{
    for (auto tag: {kThinkOpen, kThinkClose, kAnswerOpen, kAnswerClose})
        if (s.find(tag) != std::string_view::npos)
            return true;
    return false;
}

std::optional<int> parse_int(std::string_view s) noexcept
{
    s = trim(s);
    if (s.empty())
        return std::nullopt;
    bool negative = false;
    if (s.front() == '+' || s.front() == '-')
    {
        negative = s.front() == '-';
        s.remove_prefix(1);
    }
    if (s.empty() || s.front() < '0' || s.front() > '9')
        return std::nullopt;
    long long value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc {} || ptr != s.data() + s.size())
        return std::nullopt;
    if (negative)
        value = -value;
    if (value < std::numeric_limits<int>::min() || value > std::numeric_limits<int>::max())
        return std::nullopt;
    return static_cast<int>(value);
}

std::optional<Action> parse_action(std::string_view body) noexcept
{
    body = trim(body);
    bool rotate = false;
    if (consume(body, "rotate"))
        rotate = true;
    else if (!consume(body, "submit"))
        return std::nullopt;
    if (!consume(body, "(") || body.empty() || body.back() != ')')
        return std::nullopt;
    body.remove_suffix(1);

    auto const comma = body.find(',');
    if (comma == std::string_view::npos || body.find(',', comma + 1) != std::string_view::npos)
        return std::nullopt;
    auto const yaw = parse_int(body.substr(0, comma));
    auto const pitch = parse_int(body.substr(comma + 1));
    if (!yaw || !pitch)
        return std::nullopt;
    if (rotate)
        return Action {Rotate {*yaw, *pitch}};
    return Action {Submit {*yaw, *pitch}};
}

} // namespace

ParsedResponse parse_response(std::string_view text)
{
    ParsedResponse invalid {{}, InvalidAction {std::string(text)}, false};

    std::string_view rest = trim(text);
    if (!consume(rest, kThinkOpen))
        return invalid;
    auto const thinkEnd = rest.find(kThinkClose);
    if (thinkEnd == std::string_view::npos)
        return invalid;
    std::string_view const think = rest.substr(0, thinkEnd);
    invalid.think_text = std::string(think);
    if (contains_tag(think))
        return invalid;
    rest.remove_prefix(thinkEnd + kThinkClose.size());

    rest = trim(rest);
    if (!consume(rest, kAnswerOpen))
        return invalid;
    auto const answerEnd = rest.find(kAnswerClose);
    if (answerEnd == std::string_view::npos)
        return invalid;
    std::string_view const body = rest.substr(0, answerEnd);
    rest.remove_prefix(answerEnd + kAnswerClose.size());
    if (!trim(rest).empty() || contains_tag(body))
        return invalid;

    auto action = parse_action(body);
    if (!action)
        return invalid;
    return {std::string(think), std::move(*action), true};
}

std::string action_text(const Action& a)
{
    if (auto const* r = std::get_if<Rotate>(&a))
        return fmt::format("rotate({},{})", r->dyaw_deg, r->dpitch_deg);
    if (auto const* s = std::get_if<Submit>(&a))
        return fmt::format("submit({},{})", s->yaw_deg, s->pitch_deg);
    return "None";
}

std::string render_response(std::string_view think, const Action& a)
{
    return fmt::format("<think>{}</think><answer>{}</answer>", think, action_text(a));
}

} // namespace panosearch
