#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace hlg {

// Layer attribute of an element. Declaration order is the default stacking
// order used by the solver (background paints first).
enum class Role { background, underlay, image, decoration, text_like };

using RoleMap = std::map<std::string, Role, std::less<>>;

inline constexpr std::array<Role, 5> kAllRoles = {Role::background, Role::underlay, Role::image,
                                                  Role::decoration, Role::text_like};

constexpr std::string_view to_string(Role r) {
  switch (r) {
    case Role::background: return "background";
    case Role::underlay: return "underlay";
    case Role::image: return "image";
    case Role::decoration: return "decoration";
    case Role::text_like: return "text_like";
  }
  return "image";
}

// Accepts the role names above plus the element types found in Crello-style
// annotations.
inline std::optional<Role> role_from_string(std::string_view s) {
  for (Role r : kAllRoles)
    if (to_string(r) == s) return r;
  static const std::map<std::string_view, Role> aliases = {
      {"coloredBackground", Role::background},
      {"underlayElement", Role::underlay},
      {"imageElement", Role::image},
      {"maskElement", Role::image},
      {"svgElement", Role::decoration},
      {"textElement", Role::text_like},
      {"text", Role::text_like},
  };
  if (auto it = aliases.find(s); it != aliases.end()) return it->second;
  return std::nullopt;
}

// Missing entries count as plain content.
inline Role role_of(const RoleMap* roles, std::string_view id) {
  if (roles == nullptr) return Role::image;
  auto it = roles->find(id);
  return it == roles->end() ? Role::image : it->second;
}

}  // namespace hlg
