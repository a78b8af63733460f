// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace panosearch
{

/// Bad input to an otherwise well-defined operation.
class InvalidArgument: public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

/// Operation not permitted in the object's current state (e.g. stepping a finished episode).
class InvalidState: public std::logic_error
{
  public:
    using std::logic_error::logic_error;
};

/// Missing or unreadable file, panorama, image or record.
class ResourceError: public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Schema violation while reading a manifest or record; the message names the
/// offending instance id and field path.
class ParseError: public std::runtime_error
{
  public:
    ParseError(std::string instanceId, std::string fieldPath, const std::string& detail):
        std::runtime_error("instance '" + instanceId + "', field '" + fieldPath + "': " + detail),
        _instanceId(std::move(instanceId)),
        _fieldPath(std::move(fieldPath))
    {
    }

    [[nodiscard]] const std::string& instanceId() const noexcept { return _instanceId; }
    [[nodiscard]] const std::string& fieldPath() const noexcept { return _fieldPath; }

  private:
    std::string _instanceId;
    std::string _fieldPath;
};

/// Startup-time misconfiguration (missing credentials, unusable endpoint settings).
class ConfigError: public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Remote endpoint failed after all retries.
class TransportError: public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

} // namespace panosearch
