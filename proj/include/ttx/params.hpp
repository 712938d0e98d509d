#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ttx/error.hpp"

namespace ttx {

/// Rates are per hour.
struct PropagationParams {
  double beta = 0.0;         // transmission
  double kappaE = 0.0;       // relative infectiousness of E vs D
  double sigma = 0.0;        // E -> D
  double alpha = 0.0;        // E -> R
  double upsilon = 0.0;      // D -> U
  double rho = 0.0;          // D -> R
  double xi = 0.0;           // U -> X
  double gamma = 0.0;        // U -> R
  double nu = 0.0;           // X -> S
  double eta = 0.0;          // S -> R
  double omega = 0.0;        // R -> S
  double threatLevel = 0.0;  // attacker intensity, enters the risk metric only

  bool operator==(const PropagationParams&) const = default;
};

namespace detail {

struct ParamField {
  std::string_view name;
  double PropagationParams::*member;
  bool unit_interval;
};

inline constexpr std::array<ParamField, 12> kParamFields = {{
    {"beta", &PropagationParams::beta, false},
    {"kappaE", &PropagationParams::kappaE, true},
    {"sigma", &PropagationParams::sigma, false},
    {"alpha", &PropagationParams::alpha, false},
    {"upsilon", &PropagationParams::upsilon, false},
    {"rho", &PropagationParams::rho, false},
    {"xi", &PropagationParams::xi, false},
    {"gamma", &PropagationParams::gamma, false},
    {"nu", &PropagationParams::nu, false},
    {"eta", &PropagationParams::eta, false},
    {"omega", &PropagationParams::omega, false},
    {"threatLevel", &PropagationParams::threatLevel, true},
}};

inline const ParamField* find_field(std::string_view name) {
  for (const auto& f : kParamFields) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

}  // namespace detail

inline std::vector<std::string_view> param_names() {
  std::vector<std::string_view> out;
  for (const auto& f : detail::kParamFields) out.push_back(f.name);
  return out;
}

inline bool is_param_name(std::string_view name) { return detail::find_field(name) != nullptr; }

inline double get_param(const PropagationParams& p, std::string_view name) {
  const auto* f = detail::find_field(name);
  if (!f) fail(ErrorCode::InvalidArgument, "unknown parameter: " + std::string(name));
  return p.*(f->member);
}

inline void set_param(PropagationParams& p, std::string_view name, double value) {
  const auto* f = detail::find_field(name);
  if (!f) fail(ErrorCode::InvalidArgument, "unknown parameter: " + std::string(name));
  p.*(f->member) = value;
}

/// Throws if any rate is negative or a unit-interval field leaves [0,1].
inline void validate(const PropagationParams& p) {
  for (const auto& f : detail::kParamFields) {
    double v = p.*(f.member);
    if (!std::isfinite(v)) fail(ErrorCode::InvalidArgument, "parameter " + std::string(f.name) + " is not finite");
    if (v < 0.0) fail(ErrorCode::InvalidArgument, "parameter " + std::string(f.name) + " must be >= 0");
    if (f.unit_interval && v > 1.0) {
      fail(ErrorCode::InvalidArgument, "parameter " + std::string(f.name) + " must be in [0,1]");
    }
  }
}

enum class DeltaOp { Set, Add, Mul };

inline std::string_view to_string(DeltaOp op) {
  switch (op) {
    case DeltaOp::Set: return "set";
    case DeltaOp::Add: return "add";
    case DeltaOp::Mul: return "mul";
  }
  return "set";
}

inline std::optional<DeltaOp> parse_delta_op(std::string_view s) {
  if (s == "set") return DeltaOp::Set;
  if (s == "add") return DeltaOp::Add;
  if (s == "mul") return DeltaOp::Mul;
  return std::nullopt;
}

struct ParamDelta {
  std::string param;
  DeltaOp op = DeltaOp::Set;
  double value = 0.0;

  bool operator==(const ParamDelta&) const = default;
};

using DeltaSet = std::vector<ParamDelta>;

struct DeltaResult {
  PropagationParams params;
  std::vector<std::string> warnings;  // one per clamped parameter
};

/// Applies deltas in order, then clamps rates at 0 and unit-interval fields
/// to [0,1]. Every clamp is reported in `warnings`.
inline DeltaResult apply_param_deltas(const PropagationParams& params, const DeltaSet& deltas) {
  DeltaResult result{params, {}};
  for (const auto& d : deltas) {
    const auto* f = detail::find_field(d.param);
    if (!f) fail(ErrorCode::InvalidArgument, "unknown parameter: " + d.param);
    if (!std::isfinite(d.value)) fail(ErrorCode::InvalidArgument, "non-finite delta for " + d.param);
    double& slot = result.params.*(f->member);
    switch (d.op) {
      case DeltaOp::Set: slot = d.value; break;
      case DeltaOp::Add: slot += d.value; break;
      case DeltaOp::Mul: slot *= d.value; break;
    }
  }
  for (const auto& f : detail::kParamFields) {
    double& slot = result.params.*(f.member);
    double hi = f.unit_interval ? 1.0 : slot;
    double clamped = std::clamp(slot, 0.0, std::max(hi, 0.0));
    if (clamped != slot) {
      result.warnings.push_back("clamped " + std::string(f.name) + " from " + std::to_string(slot) + " to " +
                                std::to_string(clamped));
      slot = clamped;
    }
  }
  return result;
}

}  // namespace ttx
