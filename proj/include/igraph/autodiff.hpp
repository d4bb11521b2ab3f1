#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "igraph/tensor.hpp"

namespace igraph {

// Named trainable tensors. Identifiers are hierarchical ("user_net/layer0/weight")
// so checkpoints are self-describing. Iteration order is lexicographic.
class ParameterStore {
 public:
  void add(std::string name, Tensor init);
  bool contains(std::string_view name) const;
  Tensor& at(std::string_view name);
  const Tensor& at(std::string_view name) const;
  const std::map<std::string, Tensor, std::less<>>& entries() const { return params_; }
  std::map<std::string, Tensor, std::less<>>& entries() { return params_; }
  std::size_t total_size() const;

  friend bool operator==(const ParameterStore&, const ParameterStore&) = default;

 private:
  std::map<std::string, Tensor, std::less<>> params_;
};

using Gradients = std::map<std::string, Tensor, std::less<>>;

enum class OpKind {
  kLeaf,
  kMatmul,
  kSoftmax,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kExp,
  kLog,
  kNeg,
  kAbs,
  kScale,
  kTanh,
  kSigmoid,
  kConcat,
  kGather,
  kReduceSum,
  kReshape,
  kPermute,
  kSlice,
  kStack,
};

std::string_view op_name(OpKind kind);
std::optional<OpKind> op_from_name(std::string_view name);

struct NodeId {
  std::size_t index = 0;
  friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

// Define-by-run tape. Nodes are appended in topological order; backward
// walks them once in reverse. Parameter leaves alias the ParameterStore, which
// must outlive the graph and stay unmodified while it is in use.
//
// Binary elementwise ops broadcast with trailing-axis alignment: each axis
// must match or be 1 on one side; missing leading axes count as 1.
class Graph {
 public:
  explicit Graph(const ParameterStore* params = nullptr) : params_(params) {}

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  NodeId constant(Tensor value);
  // Leaf that receives a gradient but is not part of the parameter store.
  NodeId variable(Tensor value);
  // Leaf bound to a store entry. Repeated calls return the same node.
  NodeId parameter(std::string_view name);

  NodeId matmul(NodeId a, NodeId b);
  NodeId softmax(NodeId x, std::size_t axis);
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId div(NodeId a, NodeId b);
  NodeId exp(NodeId x);
  // Domain x > 0.
  NodeId log(NodeId x);
  NodeId neg(NodeId x);
  // Subgradient at exactly 0 is 0.
  NodeId abs(NodeId x);
  NodeId scale(NodeId x, double alpha);
  NodeId tanh(NodeId x);
  NodeId sigmoid(NodeId x);
  NodeId concat(NodeId a, NodeId b);
  // Slice along axis 0; a rank-1 table yields a scalar.
  NodeId gather(NodeId table, std::size_t row);
  NodeId reduce_sum(NodeId x, std::size_t axis);
  NodeId sum_all(NodeId x);
  NodeId reshape(NodeId x, Shape shape);
  NodeId permute(NodeId x, std::vector<std::size_t> perm);
  NodeId slice(NodeId x, std::size_t offset, std::size_t length);
  NodeId stack(std::span<const NodeId> parts);

  const Tensor& value(NodeId id) const;
  const Shape& shape(NodeId id) const { return value(id).shape(); }
  OpKind kind(NodeId id) const;
  bool requires_grad(NodeId id) const;
  std::size_t size() const { return nodes_.size(); }

  // Reverse sweep from a single-element node. Returns a gradient for every
  // entry of the bound parameter store (zeros where no path exists).
  Gradients backward(NodeId loss);
  // Gradient of the last backward() with respect to any node.
  Tensor grad(NodeId id) const;

  // Record a runtime branch decision so gradient checks can detect when a
  // perturbation flips it.
  void note_branch(bool taken) { branches_.push_back(taken); }
  // Sign pattern of every abs() input plus recorded branches. Two evaluations
  // with equal signatures lie on the same smooth piece.
  std::vector<int> nonsmooth_signature() const;

 private:
  struct Node {
    OpKind kind = OpKind::kLeaf;
    std::vector<NodeId> inputs;
    Tensor value;
    const Tensor* external = nullptr;
    bool requires_grad = false;
    std::string param_name;
    std::size_t axis = 0;
    double alpha = 0.0;
    std::vector<std::size_t> perm;
  };

  NodeId push(Node node);
  const Node& node(NodeId id) const;
  NodeId binary(OpKind kind, NodeId a, NodeId b);
  NodeId unary(OpKind kind, NodeId x, Tensor value);
  void backprop_node(std::size_t index);
  std::vector<double>& grad_buffer(NodeId id);

  const ParameterStore* params_;
  std::vector<Node> nodes_;
  std::map<std::string, NodeId, std::less<>> param_nodes_;
  std::vector<std::vector<double>> grads_;
  std::vector<bool> branches_;
};

// Test hook: negate the gradient rule of one op kind process-wide, used to
// confirm that gradient checks detect a faulty rule. Pass nullopt to clear.
void set_gradient_fault(std::optional<OpKind> kind);
std::optional<OpKind> gradient_fault();

}  // namespace igraph
