#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace wdrop {

enum class Method { wdropout, mc, pu, de, pu_de, pu_mc };

inline constexpr std::array<Method, 6> kAllMethods = {Method::wdropout, Method::mc, Method::pu,
                                                     Method::de,       Method::pu_de, Method::pu_mc};

inline std::string to_string(Method m) {
  switch (m) {
    case Method::wdropout: return "wdropout";
    case Method::mc: return "mc";
    case Method::pu: return "pu";
    case Method::de: return "de";
    case Method::pu_de: return "pu_de";
    case Method::pu_mc: return "pu_mc";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  for (Method m : kAllMethods)
    if (to_string(m) == s) return m;
  if (s == "w-dropout" || s == "w-drop") return Method::wdropout;
  if (s == "pu-de") return Method::pu_de;
  if (s == "pu-mc") return Method::pu_mc;
  throw std::invalid_argument("unknown method '" + std::string(s) +
                              "' (expected wdropout, mc, pu, de, pu_de or pu_mc)");
}

/// Methods whose network emits (mean, raw scale) and is trained by Gaussian NLL.
inline bool is_parametric(Method m) { return m == Method::pu || m == Method::pu_de || m == Method::pu_mc; }

/// Methods that keep dropout active while training.
inline bool uses_dropout(Method m) { return m == Method::wdropout || m == Method::mc || m == Method::pu_mc; }

inline bool is_ensemble(Method m) { return m == Method::de || m == Method::pu_de; }

struct MethodConfig {
  Method method = Method::wdropout;
  std::vector<std::size_t> hidden = {50, 50};
  double drop_rate = 0.1;            // p
  std::size_t train_samples = 5;     // L, sub-networks per optimization step
  std::size_t inference_samples = 50;  // T, masked passes at prediction time
  double mc_lambda = 1e-6;           // variance offset for MC dropout
  std::size_t ensemble_size = 5;     // M
  std::size_t epochs = 1000;
  std::size_t batch_size = 100;
  double lr = 1e-3;
  std::uint64_t seed = 0;

  void validate() const {
    if (hidden.empty()) throw std::invalid_argument("MethodConfig: need at least one hidden layer");
    for (auto h : hidden)
      if (h == 0) throw std::invalid_argument("MethodConfig: hidden widths must be positive");
    if (!(drop_rate >= 0.0 && drop_rate < 1.0)) throw std::invalid_argument("MethodConfig: p must lie in [0, 1)");
    if (method == Method::wdropout && train_samples < 2)
      throw std::invalid_argument("MethodConfig: W-dropout needs L >= 2");
    if ((method == Method::wdropout || method == Method::mc || method == Method::pu_mc) && inference_samples < 2)
      throw std::invalid_argument("MethodConfig: dropout inference needs T >= 2");
    if (!(mc_lambda >= 0.0)) throw std::invalid_argument("MethodConfig: lambda must be >= 0");
    if (ensemble_size < 1) throw std::invalid_argument("MethodConfig: ensemble size must be >= 1");
    if (method == Method::de && ensemble_size < 2)
      throw std::invalid_argument("MethodConfig: a deep ensemble needs at least 2 members for a variance");
    if (epochs == 0 || batch_size == 0) throw std::invalid_argument("MethodConfig: epochs and batch size must be positive");
    if (!(lr > 0.0)) throw std::invalid_argument("MethodConfig: learning rate must be positive");
  }
};

}  // namespace wdrop
