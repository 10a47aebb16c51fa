#include "kanforge/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <utility>

namespace kanforge {

namespace {

void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument("KanNetwork: " + what);
}

}  // namespace

KanNetwork::KanNetwork(std::vector<int> widths, std::vector<std::vector<Edge>> layers,
                       std::vector<std::vector<std::string>> wire_tags, int output, Json meta)
    : widths_(std::move(widths)),
      layers_(std::move(layers)),
      tags_(std::move(wire_tags)),
      output_(output),
      meta_(std::move(meta)) {
  require(widths_.size() >= 2, "need at least one layer");
  require(layers_.size() + 1 == widths_.size(), "layer count must be widths.size() - 1");
  for (int w : widths_) require(w >= 1, "widths must be positive");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    std::set<std::pair<int, int>> seen;
    for (const Edge& e : layers_[l]) {
      require(e.from >= 0 && e.from < widths_[l], "edge source out of range in layer " + std::to_string(l));
      require(e.to >= 0 && e.to < widths_[l + 1], "edge target out of range in layer " + std::to_string(l));
      require(seen.insert({e.from, e.to}).second, "duplicate edge in layer " + std::to_string(l));
    }
  }
  if (!tags_.empty()) {
    require(tags_.size() == widths_.size(), "wire_tags must have one entry per layer");
    for (std::size_t l = 0; l < tags_.size(); ++l) {
      require(static_cast<int>(tags_[l].size()) == widths_[l], "wire_tags size mismatch in layer " + std::to_string(l));
    }
  }
  require(output_ >= 0 && output_ < widths_.back(), "output neuron out of range");
}

int KanNetwork::max_width() const { return *std::max_element(widths_.begin(), widths_.end()); }

double KanNetwork::evaluate(std::span<const double> x, Scratch& s) const {
  if (static_cast<int>(x.size()) != widths_.front()) {
    throw std::invalid_argument("KanNetwork: input has " + std::to_string(x.size()) + " entries, expected " +
                                std::to_string(widths_.front()));
  }
  s.cur.assign(x.begin(), x.end());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    s.next.assign(widths_[l + 1], 0.0);
    for (const Edge& e : layers_[l]) s.next[e.to] += e.phi(s.cur[e.from]);
    std::swap(s.cur, s.next);
  }
  return s.cur[output_];
}

double KanNetwork::evaluate(std::span<const double> x) const {
  Scratch s;
  return evaluate(x, s);
}

std::vector<double> KanNetwork::forward(std::span<const double> x) const {
  Scratch s;
  evaluate(x, s);
  return s.cur;
}

Interval KanNetwork::input_domain(int p) const {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (const Edge& e : layers_.front()) {
    if (e.from != p) continue;
    lo = std::max(lo, e.phi.domain().lo);
    hi = std::min(hi, e.phi.domain().hi);
  }
  if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) return kUnitInterval;
  return {lo, hi};
}

KanNetwork KanNetwork::with_edge(int layer, std::size_t edge, Spline phi) const {
  auto layers = layers_;
  layers.at(layer).at(edge).phi = std::move(phi);
  return KanNetwork(widths_, std::move(layers), tags_, output_, meta_);
}

ProductReport lipschitz_product(const KanNetwork& net) {
  ProductReport r;
  r.L = net.depth();
  r.W = net.max_width();
  for (int l = 0; l < r.L; ++l) {
    std::vector<double> m(net.widths()[l], 0.0);
    for (const Edge& e : net.layers()[l]) {
      const LipValue lv = spline_lipschitz(e.phi);
      r.exact = r.exact && lv.exact;
      m[e.from] = std::max(m[e.from], lv.value);
    }
    const double mu = *std::max_element(m.begin(), m.end());
    r.per_layer.push_back(mu);
    r.per_neuron.push_back(std::move(m));
  }
  for (double mu : r.per_layer) r.product *= mu;
  r.ambient_upper = std::pow(static_cast<double>(r.W), r.L) * r.product;
  return r;
}

std::vector<double> jacobian_fd(const KanNetwork& net, std::span<const double> x, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("jacobian_fd: step must be positive");
  const int n = net.input_dim();
  if (static_cast<int>(x.size()) != n) throw std::invalid_argument("jacobian_fd: dimension mismatch");
  std::vector<double> base(x.begin(), x.end());
  const double margin = std::max(step, 1e-4);
  for (int p = 0; p < n; ++p) {
    const Interval d = net.input_domain(p);
    if (d.width() > 2.0 * margin) base[p] = std::clamp(base[p], d.lo + margin, d.hi - margin);
  }
  KanNetwork::Scratch s;
  std::vector<double> grad(n);
  std::vector<double> probe = base;
  for (int p = 0; p < n; ++p) {
    probe[p] = base[p] + step;
    const double up = net.evaluate(probe, s);
    probe[p] = base[p] - step;
    const double down = net.evaluate(probe, s);
    probe[p] = base[p];
    grad[p] = (up - down) / (2.0 * step);
  }
  return grad;
}

double jacobian_lower_bound(const KanNetwork& net, std::span<const double> x, double step) {
  const auto g = jacobian_fd(net, x, step);
  double sq = 0.0;
  for (double v : g) sq += v * v;
  return std::sqrt(sq) / std::pow(static_cast<double>(net.max_width()), net.depth());
}

Json network_to_json(const KanNetwork& net) {
  Json j;
  j["format"] = "kanforge/1";
  j["widths"] = net.widths();
  Json layers = Json::array();
  for (const auto& layer : net.layers()) {
    Json edges = Json::array();
    for (const Edge& e : layer) edges.push_back({{"from", e.from}, {"to", e.to}, {"spline", spline_to_json(e.phi)}});
    layers.push_back({{"edges", std::move(edges)}});
  }
  j["layers"] = std::move(layers);
  j["wire_tags"] = net.wire_tags();
  j["output"] = net.output();
  j["meta"] = net.meta();
  return j;
}

namespace {

const Json& field(const Json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw SchemaError(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(path, std::string("missing field '") + key + "'");
  return *it;
}

int as_int(const Json& v, const std::string& path) {
  if (!v.is_number_integer()) throw SchemaError(path, "expected an integer");
  return v.get<int>();
}

}  // namespace

KanNetwork network_from_json(const Json& j) {
  const Json& fmt = field(j, "format", "$");
  if (!fmt.is_string() || fmt.get<std::string>() != "kanforge/1") {
    throw SchemaError("$.format", "unsupported network format");
  }
  const Json& jw = field(j, "widths", "$");
  if (!jw.is_array() || jw.size() < 2) throw SchemaError("$.widths", "expected an array of at least two widths");
  std::vector<int> widths;
  for (std::size_t l = 0; l < jw.size(); ++l) {
    const std::string path = "$.widths[" + std::to_string(l) + "]";
    const int w = as_int(jw[l], path);
    if (w < 1) throw SchemaError(path, "width must be positive");
    widths.push_back(w);
  }

  const Json& jl = field(j, "layers", "$");
  if (!jl.is_array() || jl.size() + 1 != widths.size()) {
    throw SchemaError("$.layers", "expected widths.size() - 1 layers");
  }
  std::vector<std::vector<Edge>> layers(jl.size());
  for (std::size_t l = 0; l < jl.size(); ++l) {
    const std::string lpath = "$.layers[" + std::to_string(l) + "]";
    const Json& edges = field(jl[l], "edges", lpath);
    if (!edges.is_array()) throw SchemaError(lpath + ".edges", "expected an array");
    std::set<std::pair<int, int>> seen;
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const std::string epath = lpath + ".edges[" + std::to_string(e) + "]";
      const int from = as_int(field(edges[e], "from", epath), epath + ".from");
      const int to = as_int(field(edges[e], "to", epath), epath + ".to");
      if (from < 0 || from >= widths[l]) throw SchemaError(epath + ".from", "source neuron out of range");
      if (to < 0 || to >= widths[l + 1]) throw SchemaError(epath + ".to", "target neuron out of range");
      if (!seen.insert({from, to}).second) throw SchemaError(epath, "duplicate edge");
      try {
        layers[l].push_back({from, to, spline_from_json(field(edges[e], "spline", epath))});
      } catch (const SchemaError&) {
        throw;
      } catch (const std::exception& ex) {
        throw SchemaError(epath + ".spline", ex.what());
      }
    }
  }

  std::vector<std::vector<std::string>> tags;
  if (j.contains("wire_tags")) {
    const Json& jt = j["wire_tags"];
    if (!jt.is_array()) throw SchemaError("$.wire_tags", "expected an array");
    if (!jt.empty()) {
      if (jt.size() != widths.size()) throw SchemaError("$.wire_tags", "expected one entry per layer");
      for (std::size_t l = 0; l < jt.size(); ++l) {
        const std::string path = "$.wire_tags[" + std::to_string(l) + "]";
        if (!jt[l].is_array() || static_cast<int>(jt[l].size()) != widths[l]) {
          throw SchemaError(path, "expected one tag per neuron");
        }
        std::vector<std::string> row;
        for (std::size_t i = 0; i < jt[l].size(); ++i) {
          if (!jt[l][i].is_string()) throw SchemaError(path + "[" + std::to_string(i) + "]", "expected a string");
          row.push_back(jt[l][i].get<std::string>());
        }
        tags.push_back(std::move(row));
      }
    }
  }
  const int output = as_int(field(j, "output", "$"), "$.output");
  if (output < 0 || output >= widths.back()) throw SchemaError("$.output", "output neuron out of range");
  Json meta = j.contains("meta") ? j["meta"] : Json::object();
  return KanNetwork(std::move(widths), std::move(layers), std::move(tags), output, std::move(meta));
}

}  // namespace kanforge
