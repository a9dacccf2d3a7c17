#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace acemad {

enum class Errc {
  AllZero,
  NonFinite,
  NotOnSimplex,
  TooFewAgents,
  DimensionMismatch,
  EmptySamples,
  NonPositiveEta,
  InvalidSpec,
  InvalidArgument,
  ConfigMismatch,
  AgentFailure,
  MixedShapes,
  EmptyInput,
  NoJsonFound,
  MalformedCommit,
  HttpError,
  Timeout,
  FixtureMiss,
  ParseError,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::AllZero: return "AllZero";
    case Errc::NonFinite: return "NonFinite";
    case Errc::NotOnSimplex: return "NotOnSimplex";
    case Errc::TooFewAgents: return "TooFewAgents";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::EmptySamples: return "EmptySamples";
    case Errc::NonPositiveEta: return "NonPositiveEta";
    case Errc::InvalidSpec: return "InvalidSpec";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::ConfigMismatch: return "ConfigMismatch";
    case Errc::AgentFailure: return "AgentFailure";
    case Errc::MixedShapes: return "MixedShapes";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::NoJsonFound: return "NoJsonFound";
    case Errc::MalformedCommit: return "MalformedCommit";
    case Errc::HttpError: return "HttpError";
    case Errc::Timeout: return "Timeout";
    case Errc::FixtureMiss: return "FixtureMiss";
    case Errc::ParseError: return "ParseError";
  }
  return "Unknown";
}

// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

class AgentFailure : public Error {
 public:
  AgentFailure(std::size_t agent, std::size_t round, const std::string& cause)
      : Error(Errc::AgentFailure, "agent " + std::to_string(agent) + " round " +
                                      std::to_string(round) + ": " + cause),
        agent_(agent),
        round_(round) {}

  std::size_t agent() const noexcept { return agent_; }
  std::size_t round() const noexcept { return round_; }

 private:
  std::size_t agent_;
  std::size_t round_;
};

class HttpError : public Error {
 public:
  HttpError(int status, const std::string& message)
      : Error(Errc::HttpError, "status " + std::to_string(status) + ": " + message),
        status_(status) {}

  int status() const noexcept { return status_; }

 private:
  int status_;
};

}  // namespace acemad
