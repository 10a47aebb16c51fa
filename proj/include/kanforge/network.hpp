#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kanforge/spline.hpp"

namespace kanforge {

/// Nonzero edge phi_{l,i,j} from neuron `from` of layer l to neuron `to` of layer l+1.
struct Edge {
  int from = 0;
  int to = 0;
  Spline phi;
};

/// Raised when a network JSON document does not match the schema. `path`
/// points at the offending value, e.g. "$.layers[2].edges[5].from".
class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// Layered network of edge splines with widths n_0..n_L and sparse edges.
/// Every neuron carries a provenance tag: "input:p", "node:v",
/// "internal:v:<name>" or "copy:p".
class KanNetwork {
 public:
  struct Scratch {
    std::vector<double> cur, next;
  };

  KanNetwork(std::vector<int> widths, std::vector<std::vector<Edge>> layers,
             std::vector<std::vector<std::string>> wire_tags, int output, Json meta = Json::object());

  const std::vector<int>& widths() const { return widths_; }
  int depth() const { return static_cast<int>(layers_.size()); }  // L
  int input_dim() const { return widths_.front(); }
  int max_width() const;
  const std::vector<std::vector<Edge>>& layers() const { return layers_; }
  const std::vector<std::vector<std::string>>& wire_tags() const { return tags_; }
  int output() const { return output_; }
  const Json& meta() const { return meta_; }
  void set_meta(Json meta) { meta_ = std::move(meta); }

  /// Values of the whole output layer.
  std::vector<double> forward(std::span<const double> x) const;
  /// Value of the output neuron.
  double evaluate(std::span<const double> x) const;
  double evaluate(std::span<const double> x, Scratch& scratch) const;

  /// Intersection of the domains of the layer-0 edges leaving input p, or
  /// [0,1] when input p has no edge.
  Interval input_domain(int p) const;

  /// Copy with edge `edge` of layer `layer` carrying `phi` instead.
  KanNetwork with_edge(int layer, std::size_t edge, Spline phi) const;

 private:
  std::vector<int> widths_;
  std::vector<std::vector<Edge>> layers_;
  std::vector<std::vector<std::string>> tags_;
  int output_;
  Json meta_;
};

struct ProductReport {
  std::vector<double> per_layer;                // mu_l = max_i M_{l,i}
  std::vector<std::vector<double>> per_neuron;  // M_{l,i} = max_j Lip(phi_{l,i,j}); 0 without edges
  double product = 1.0;                         // P = prod_l mu_l
  int W = 0;                                    // max over n_0..n_L
  int L = 0;
  double ambient_upper = 0.0;  // W^L * P
  bool exact = true;           // all edge constants in closed form
};

ProductReport lipschitz_product(const KanNetwork& net);

/// Central differences of the output neuron. Each coordinate is first
/// clamped to max(step, 1e-4) inside its input domain.
std::vector<double> jacobian_fd(const KanNetwork& net, std::span<const double> x, double step = 1e-5);

/// ||J(x)||_2 / W^L.
double jacobian_lower_bound(const KanNetwork& net, std::span<const double> x, double step = 1e-5);

Json network_to_json(const KanNetwork& net);
KanNetwork network_from_json(const Json& j);

}  // namespace kanforge
