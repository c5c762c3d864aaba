#pragma once

#include <cstdio>
#include <string>

#include "seesaw/graph.hpp"

namespace seesaw {

struct CostRow {
  std::string name;
  std::string kind;
  std::int64_t params = 0;
  std::int64_t multi_adds = 0;
};

struct CostReport {
  std::vector<CostRow> rows;
  std::int64_t total_params = 0;
  std::int64_t total_multi_adds = 0;
};

// Both counts for one layer at a given input shape. Multi-adds depend on the
// input resolution; parameter counts do not.
template <typename S>
LayerCost count_layer(const Layer<S>& layer, const Shape& in) {
  return layer.cost(in);
}

namespace detail {

template <typename S>
void count_into(const LayerSeq<S>& layers, Shape shape, CostReport& report) {
  for (const auto& layer : layers) {
    if (layer->kind() == LayerKind::Residual) {
      count_into(static_cast<const ResidualLayer<S>&>(*layer).body(), shape, report);
    } else {
      const LayerCost c = layer->cost(shape);
      report.rows.push_back({layer->name(), layer_kind_name(layer->kind()), c.params, c.multi_adds});
      report.total_params += c.params;
      report.total_multi_adds += c.multi_adds;
    }
    shape = layer->out_shape(shape);
  }
}

}  // namespace detail

template <typename S>
CostReport count_model(const LayerGraph<S>& graph, int resolution, int in_channels = 3) {
  CostReport report;
  detail::count_into(graph.layers, Shape{1, in_channels, resolution, resolution}, report);
  return report;
}

// Totals in millions with 0.1M rounding, as cost tables are usually quoted.
inline std::string format_millions(std::int64_t count) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1fM", double(count) / 1e6);
  return buf;
}

inline std::string cost_table(const CostReport& report) {
  std::string out = "layer                               kind      params   multi_adds\n";
  char buf[128];
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof(buf), "%-35s %-8s %9lld %12lld\n", r.name.c_str(), r.kind.c_str(),
                  (long long)r.params, (long long)r.multi_adds);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "%-35s %-8s %9lld %12lld\n", "total", "", (long long)report.total_params,
                (long long)report.total_multi_adds);
  out += buf;
  return out;
}

inline std::string cost_csv(const CostReport& report) {
  std::string out = "layer,kind,params,multi_adds\n";
  for (const auto& r : report.rows)
    out += r.name + "," + r.kind + "," + std::to_string(r.params) + "," + std::to_string(r.multi_adds) + "\n";
  out += "total,," + std::to_string(report.total_params) + "," + std::to_string(report.total_multi_adds) + "\n";
  return out;
}

}  // namespace seesaw
