#pragma once

#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "wdrop/dataset.hpp"
#include "wdrop/method.hpp"
#include "wdrop/mlp.hpp"
#include "wdrop/train.hpp"

namespace wdrop {

namespace detail {

inline nlohmann::json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Vector vector_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace detail

inline nlohmann::json method_config_json(const MethodConfig& c) {
  return {{"method", to_string(c.method)},
          {"hidden", c.hidden},
          {"p", c.drop_rate},
          {"L", c.train_samples},
          {"T", c.inference_samples},
          {"lambda", c.mc_lambda},
          {"ensemble_size", c.ensemble_size},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"lr", c.lr},
          {"seed", c.seed}};
}

inline MethodConfig method_config_from_json(const nlohmann::json& j) {
  MethodConfig c;
  c.method = parse_method(j.at("method").get<std::string>());
  j.at("hidden").get_to(c.hidden);
  j.at("p").get_to(c.drop_rate);
  j.at("L").get_to(c.train_samples);
  j.at("T").get_to(c.inference_samples);
  j.at("lambda").get_to(c.mc_lambda);
  j.at("ensemble_size").get_to(c.ensemble_size);
  j.at("epochs").get_to(c.epochs);
  j.at("batch_size").get_to(c.batch_size);
  j.at("lr").get_to(c.lr);
  j.at("seed").get_to(c.seed);
  return c;
}

/// Layers are stored row-major as nested arrays (out x in).
inline nlohmann::json model_json(const MlpModel& m) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : m.layers()) {
    nlohmann::json w = nlohmann::json::array();
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) w.push_back(detail::vector_json(l.weight.row(r).transpose()));
    layers.push_back({{"weight", w}, {"bias", detail::vector_json(l.bias)}});
  }
  return {{"head", to_string(m.head())}, {"p", m.drop_rate()}, {"layers", layers}};
}

inline MlpModel model_from_json(const nlohmann::json& j) {
  const std::string head = j.at("head").get<std::string>();
  if (head != "point" && head != "gaussian") throw std::invalid_argument("model: unknown head '" + head + "'");
  std::vector<DenseLayer> layers;
  for (const auto& lj : j.at("layers")) {
    const auto rows = lj.at("weight").get<std::vector<std::vector<double>>>();
    DenseLayer l;
    l.bias = detail::vector_from_json(lj.at("bias"));
    const auto in = rows.empty() ? 0 : rows.front().size();
    l.weight.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(in));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != in) throw std::invalid_argument("model: ragged weight matrix");
      for (std::size_t c = 0; c < in; ++c) l.weight(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
    layers.push_back(std::move(l));
  }
  return MlpModel(std::move(layers), head == "gaussian" ? HeadKind::gaussian : HeadKind::point,
                  j.at("p").get<double>());
}

inline nlohmann::json normalizer_json(const Normalizer& n) {
  return {{"feature_mean", detail::vector_json(n.feature_mean)},
          {"feature_std", detail::vector_json(n.feature_std)},
          {"target_mean", detail::vector_json(n.target_mean)},
          {"target_std", detail::vector_json(n.target_std)}};
}

inline Normalizer normalizer_from_json(const nlohmann::json& j) {
  Normalizer n;
  n.feature_mean = detail::vector_from_json(j.at("feature_mean"));
  n.feature_std = detail::vector_from_json(j.at("feature_std"));
  n.target_mean = detail::vector_from_json(j.at("target_mean"));
  n.target_std = detail::vector_from_json(j.at("target_std"));
  return n;
}

/// A trained model with the normalization it expects on its inputs.
struct SavedModel {
  TrainedModel model;
  std::optional<Normalizer> normalizer;
};

inline nlohmann::json saved_model_json(const SavedModel& s) {
  nlohmann::json members = nlohmann::json::array();
  for (const auto& m : s.model.members) members.push_back(model_json(m));
  nlohmann::json j = {{"format", "wdrop-model-1"}, {"config", method_config_json(s.model.config)}, {"members", members}};
  if (s.normalizer) j["normalizer"] = normalizer_json(*s.normalizer);
  return j;
}

inline SavedModel saved_model_from_json(const nlohmann::json& j) {
  if (j.value("format", std::string{}) != "wdrop-model-1") throw std::invalid_argument("model: unrecognized format");
  SavedModel s;
  s.model.config = method_config_from_json(j.at("config"));
  for (const auto& m : j.at("members")) s.model.members.push_back(model_from_json(m));
  if (s.model.members.empty()) throw std::invalid_argument("model: no members");
  if (j.contains("normalizer")) s.normalizer = normalizer_from_json(j.at("normalizer"));
  return s;
}

inline void save_model(const SavedModel& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << saved_model_json(s).dump() << '\n';
  if (!out) throw std::runtime_error("I/O error while writing '" + path + "'");
}

inline SavedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("'" + path + "': " + e.what());
  }
  try {
    return saved_model_from_json(j);
  } catch (const std::exception& e) {
    throw std::runtime_error("'" + path + "': " + e.what());
  }
}

}  // namespace wdrop
