#include "milr/autodiff.hpp"

#include <cctype>

namespace milr {

std::string to_string(LossKind k) { return k == LossKind::MSE ? "mse" : "ce"; }

LossKind parse_loss(const std::string& s) {
  std::string t;
  for (unsigned char c : s) t.push_back(static_cast<char>(std::tolower(c)));
  if (t == "mse") return LossKind::MSE;
  if (t == "ce" || t == "crossentropy" || t == "cross-entropy" || t == "cross_entropy") return LossKind::CrossEntropy;
  throw ConfigError("unknown loss '" + s + "'");
}

}  // namespace milr
