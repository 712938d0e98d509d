#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace ttx {

/// Node condition in the propagation model.
///
/// S susceptible, E exposed (compromised but latent), R resistant (hardened
/// or recovered), D degraded, U unavailable, X destroyed.
enum class Compartment : std::size_t { S = 0, E, R, D, U, X };

inline constexpr std::size_t kCompartmentCount = 6;

inline constexpr std::array<Compartment, kCompartmentCount> kAllCompartments = {
    Compartment::S, Compartment::E, Compartment::R,
    Compartment::D, Compartment::U, Compartment::X};

using Occupancy = std::array<double, kCompartmentCount>;

constexpr std::size_t index(Compartment c) { return static_cast<std::size_t>(c); }

constexpr std::string_view to_string(Compartment c) {
  constexpr std::array<std::string_view, kCompartmentCount> names = {"S", "E", "R", "D", "U", "X"};
  return names[index(c)];
}

inline std::optional<Compartment> parse_compartment(std::string_view s) {
  for (auto c : kAllCompartments) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

inline Occupancy indicator(Compartment c) {
  Occupancy occ{};
  occ[index(c)] = 1.0;
  return occ;
}

}  // namespace ttx
