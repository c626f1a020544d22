#include "kwcl/losses.hpp"

namespace kwcl {

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::InfoNce:
      return "infonce";
    case LossKind::YAware:
      return "yaware";
    case LossKind::Threshold:
      return "threshold";
    case LossKind::Exp:
      return "exp";
    case LossKind::L1Baseline:
      return "l1";
  }
  return "exp";
}

LossKind parse_loss_kind(std::string_view name) {
  for (LossKind k : {LossKind::InfoNce, LossKind::YAware, LossKind::Threshold, LossKind::Exp,
                     LossKind::L1Baseline}) {
    if (name == to_string(k)) return k;
  }
  if (name == "y-aware" || name == "y_aware") return LossKind::YAware;
  if (name == "thr") return LossKind::Threshold;
  throw InvalidArgument("unknown loss kind '" + std::string(name) +
                        "' (expected infonce, yaware, threshold, exp or l1)");
}

}  // namespace kwcl
