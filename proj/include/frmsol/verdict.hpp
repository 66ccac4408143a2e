#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace frmsol {

enum class Verdict { Stable, Collapse, Expand, Decay, Indeterminate, Failed };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Stable: return "Stable";
    case Verdict::Collapse: return "Collapse";
    case Verdict::Expand: return "Expand";
    case Verdict::Decay: return "Decay";
    case Verdict::Indeterminate: return "Indeterminate";
    case Verdict::Failed: return "Failed";
  }
  return "Failed";
}

inline Verdict verdict_from_string(std::string_view s) {
  for (auto v : {Verdict::Stable, Verdict::Collapse, Verdict::Expand, Verdict::Decay,
                 Verdict::Indeterminate, Verdict::Failed}) {
    if (to_string(v) == s) return v;
  }
  throw std::invalid_argument("unknown verdict: " + std::string(s));
}

}  // namespace frmsol
