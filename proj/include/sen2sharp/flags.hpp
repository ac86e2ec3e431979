#ifndef SEN2SHARP_FLAGS_HPP
#define SEN2SHARP_FLAGS_HPP

#include <cstddef>
#include <string>

#include "sen2sharp/raster.hpp"

namespace sen2sharp {

/// Ablation switches. use_z feeds the 10-m guide bands to the network;
/// use_hpf high-pass filters every input channel before normalization.
struct AblationFlags {
  bool use_z = true;
  bool use_hpf = true;

  std::size_t input_channels() const noexcept {
    return (use_z ? kGuideBands : 0) + kTargetBands;
  }

  std::string label() const {
    if (use_z && use_hpf) return "proposed";
    if (!use_z && use_hpf) return "proposed (without z)";
    if (use_z && !use_hpf) return "proposed (no HPF)";
    return "proposed (without z, no HPF)";
  }

  friend bool operator==(const AblationFlags&, const AblationFlags&) = default;
};

}  // namespace sen2sharp

#endif  // SEN2SHARP_FLAGS_HPP
