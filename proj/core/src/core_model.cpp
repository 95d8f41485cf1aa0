#include "glassbox/core_model.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include "glassbox/config.hpp"

namespace glassbox::core_model {

void CostModel::validate() const {
  if (!(base_cost > 0.0) || !std::isfinite(base_cost))
    throw std::invalid_argument("CostModel: base_cost must be positive");
  std::set<std::string> names;
  for (const auto& e : events) {
    if (!(e.probability >= 0.0 && e.probability <= 1.0))
      throw std::invalid_argument("CostModel: probability of '" + e.name + "' not in [0,1]");
    if (!(e.penalty >= 0.0) || !std::isfinite(e.penalty))
      throw std::invalid_argument("CostModel: penalty of '" + e.name + "' must be >= 0");
    if (!names.insert(e.name).second)
      throw std::invalid_argument("CostModel: duplicate event name '" + e.name + "'");
  }
}

void PipelineGeometry::validate() const {
  if (depth < 1) throw std::invalid_argument("PipelineGeometry: depth must be >= 1");
  if (resolve_stage < 1 || resolve_stage > depth)
    throw std::invalid_argument("PipelineGeometry: resolve_stage must be in [1, depth]");
}

double expected_cost(const CostModel& model) {
  model.validate();
  double cost = model.base_cost;
  for (const auto& e : model.events) cost += e.probability * e.penalty;
  return cost;
}

double cpi_branch(double f, double m, double P) {
  if (!(f >= 0.0 && f <= 1.0)) throw std::invalid_argument("cpi_branch: f must be in [0,1]");
  if (!(m >= 0.0 && m <= 1.0)) throw std::invalid_argument("cpi_branch: m must be in [0,1]");
  if (!(P >= 0.0)) throw std::invalid_argument("cpi_branch: P must be >= 0");
  return 1.0 + f * m * P;
}

int mispredict_penalty(const PipelineGeometry& geom) {
  geom.validate();
  return geom.depth - geom.resolve_stage + 1;
}

double amat(const std::vector<CacheLevel>& levels, double memory_time) {
  if (levels.empty()) throw std::invalid_argument("amat: at least one cache level required");
  if (!(memory_time >= 0.0)) throw std::invalid_argument("amat: memory_time must be >= 0");
  for (const auto& lv : levels) {
    if (!(lv.hit_rate >= 0.0 && lv.hit_rate <= 1.0))
      throw std::invalid_argument("amat: hit_rate must be in [0,1]");
    if (!(lv.hit_time >= 0.0)) throw std::invalid_argument("amat: hit_time must be >= 0");
  }
  double total = 0.0;
  double reach = 1.0;  // probability all previous levels missed
  for (const auto& lv : levels) {
    total += lv.hit_time * lv.hit_rate * reach;
    reach *= 1.0 - lv.hit_rate;
  }
  return total + memory_time * reach;
}

double amat_simple(double t_hit, double h, double t_penalty) {
  if (!(h >= 0.0 && h <= 1.0)) throw std::invalid_argument("amat_simple: h must be in [0,1]");
  if (!(t_hit >= 0.0) || !(t_penalty >= 0.0))
    throw std::invalid_argument("amat_simple: times must be >= 0");
  return t_hit + (1.0 - h) * t_penalty;
}

double amdahl_speedup(double serial_fraction, long long processors) {
  if (!(serial_fraction >= 0.0 && serial_fraction <= 1.0))
    throw std::invalid_argument("amdahl_speedup: serial fraction must be in [0,1]");
  if (processors < 1) throw std::invalid_argument("amdahl_speedup: processors must be >= 1");
  return 1.0 / (serial_fraction + (1.0 - serial_fraction) / static_cast<double>(processors));
}

void save_cost_model(const CostModel& model, const std::string& path) {
  model.validate();
  config::File f;
  f.set_real("base_cost", model.base_cost);
  f.set_int("event_count", static_cast<long long>(model.events.size()));
  for (std::size_t i = 0; i < model.events.size(); ++i) {
    const std::string sec = "event." + std::to_string(i);
    f.set(sec + ".name", model.events[i].name);
    f.set_real(sec + ".probability", model.events[i].probability);
    f.set_real(sec + ".penalty", model.events[i].penalty);
  }
  f.save(path);
}

CostModel load_cost_model(const std::string& path) {
  const config::File f = config::File::load(path);
  CostModel model;
  model.base_cost = f.get_real("base_cost", 1.0);
  const long long count = f.get_int("event_count", 0);
  for (long long i = 0; i < count; ++i) {
    const std::string sec = "event." + std::to_string(i);
    if (!f.has(sec + ".probability"))
      throw std::runtime_error("cost model: missing section [" + sec + "]");
    EventSpec e;
    e.name = f.get_string(sec + ".name", "event" + std::to_string(i));
    e.probability = f.get_real(sec + ".probability", 0.0);
    e.penalty = f.get_real(sec + ".penalty", 0.0);
    model.events.push_back(std::move(e));
  }
  model.validate();
  return model;
}

}  // namespace glassbox::core_model
