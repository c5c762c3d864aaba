#pragma once

#include <string>

#include "seesaw/graph.hpp"

namespace seesaw {

// Composes the per-layer channel relations of a fragment into the structural
// dependence of its outputs on its inputs.
template <typename S>
BoolMat analyze_connectivity(const LayerSeq<S>& fragment, int in_channels) {
  BoolMat m = detail::identity_relation(in_channels);
  for (const auto& layer : fragment)
    m = detail::compose_relations(layer->channel_relation(int(m.rows())), m);
  return m;
}

inline bool full_flow(const BoolMat& m) { return m.all(); }

inline bool relations_equal(const BoolMat& a, const BoolMat& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a == b).all();
}

inline std::int64_t edge_count(const BoolMat& m) { return m.template cast<std::int64_t>().sum(); }

// True iff b has every edge of a plus at least one more.
inline bool strictly_denser(const BoolMat& b, const BoolMat& a) {
  if (b.rows() != a.rows() || b.cols() != a.cols()) return false;
  return (a && !b).any() == false && edge_count(b) > edge_count(a);
}

inline std::string render_connectivity(const BoolMat& m) {
  std::string s;
  s.reserve(size_t(m.rows()) * (m.cols() + 1));
  for (int o = 0; o < m.rows(); ++o) {
    for (int i = 0; i < m.cols(); ++i) s += m(o, i) ? '#' : '.';
    s += '\n';
  }
  return s;
}

}  // namespace seesaw
