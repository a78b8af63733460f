// SPDX-License-Identifier: Apache-2.0
#pragma once

// The agent's action vocabulary and its text grammar:
//
//   <think>TEXT</think><answer>ACTION</answer>
//   ACTION := rotate(INT,INT) | submit(INT,INT)      (yaw first, then pitch)
//
// Whitespace is allowed around the tags, around ACTION and around each integer.

#include <string>
#include <string_view>
#include <variant>

namespace panosearch
{

struct Rotate
{
    int dyaw_deg = 0;
    int dpitch_deg = 0;
    friend bool operator==(const Rotate&, const Rotate&) = default;
};

/// Arguments echo the reported camera angles; they are logged but never trusted.
struct Submit
{
    int yaw_deg = 0;
    int pitch_deg = 0;
    friend bool operator==(const Submit&, const Submit&) = default;
};

struct InvalidAction
{
    std::string raw_text;
    friend bool operator==(const InvalidAction&, const InvalidAction&) = default;
};

using Action = std::variant<Rotate, Submit, InvalidAction>;

struct ParsedResponse
{
    std::string think_text;
    Action action = InvalidAction {};
    bool well_formed = false;
};

ParsedResponse parse_response(std::string_view text);

/// "rotate(-45,0)" / "submit(285,-5)"; "None" for an invalid action.
std::string action_text(const Action& a);

/// Canonical well-formed response for an action.
std::string render_response(std::string_view think, const Action& a);

inline bool is_valid(const Action& a) noexcept
{
    return !std::holds_alternative<InvalidAction>(a);
}

} // namespace panosearch
