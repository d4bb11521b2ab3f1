#include "igraph/autodiff.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <utility>

#include "igraph/error.hpp"
#include "igraph/kernels.hpp"

namespace igraph {

// ---------------------------------------------------------------------------
// ParameterStore

void ParameterStore::add(std::string name, Tensor init) {
  if (params_.contains(name)) throw NameError("duplicate parameter '" + name + "'");
  params_.emplace(std::move(name), std::move(init));
}

bool ParameterStore::contains(std::string_view name) const { return params_.contains(name); }

Tensor& ParameterStore::at(std::string_view name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw NameError("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

const Tensor& ParameterStore::at(std::string_view name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw NameError("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

std::size_t ParameterStore::total_size() const {
  std::size_t n = 0;
  for (const auto& [_, t] : params_) n += t.size();
  return n;
}

// ---------------------------------------------------------------------------
// Op names and the fault hook

namespace {

constexpr std::array<std::pair<OpKind, std::string_view>, 21> kOpNames{{
    {OpKind::kLeaf, "leaf"},         {OpKind::kMatmul, "matmul"},
    {OpKind::kSoftmax, "softmax"},   {OpKind::kAdd, "add"},
    {OpKind::kSub, "sub"},           {OpKind::kMul, "mul"},
    {OpKind::kDiv, "div"},           {OpKind::kExp, "exp"},
    {OpKind::kLog, "log"},           {OpKind::kNeg, "neg"},
    {OpKind::kAbs, "abs"},           {OpKind::kScale, "scale"},
    {OpKind::kTanh, "tanh"},         {OpKind::kSigmoid, "sigmoid"},
    {OpKind::kConcat, "concat"},     {OpKind::kGather, "gather"},
    {OpKind::kReduceSum, "reduce_sum"}, {OpKind::kReshape, "reshape"},
    {OpKind::kPermute, "permute"},   {OpKind::kSlice, "slice"},
    {OpKind::kStack, "stack"},
}};

// -1 encodes "no fault".
std::atomic<int> g_fault{-1};

}  // namespace

std::string_view op_name(OpKind kind) {
  for (const auto& [k, name] : kOpNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<OpKind> op_from_name(std::string_view name) {
  for (const auto& [k, n] : kOpNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

void set_gradient_fault(std::optional<OpKind> kind) {
  g_fault.store(kind ? static_cast<int>(*kind) : -1);
}

std::optional<OpKind> gradient_fault() {
  const int v = g_fault.load();
  if (v < 0) return std::nullopt;
  return static_cast<OpKind>(v);
}

// ---------------------------------------------------------------------------
// Broadcasting and axis helpers

namespace {

struct Broadcast {
  Shape out;
  std::vector<std::size_t> stride_a;
  std::vector<std::size_t> stride_b;
};

Broadcast plan_broadcast(const Shape& a, const Shape& b, std::string_view what) {
  const std::size_t rank = std::max(a.size(), b.size());
  Broadcast plan;
  plan.out.assign(rank, 1);
  plan.stride_a.assign(rank, 0);
  plan.stride_b.assign(rank, 0);
  const auto sa = row_major_strides(a);
  const auto sb = row_major_strides(b);
  for (std::size_t d = 0; d < rank; ++d) {
    const std::size_t pad_a = rank - a.size();
    const std::size_t pad_b = rank - b.size();
    const std::size_t da = d >= pad_a ? a[d - pad_a] : 1;
    const std::size_t db = d >= pad_b ? b[d - pad_b] : 1;
    if (da != db && da != 1 && db != 1) {
      throw DimensionError(std::string(what) + ": shapes " + shape_string(a) + " and " +
                           shape_string(b) + " are not broadcast-compatible");
    }
    plan.out[d] = da == 1 ? db : da;
    plan.stride_a[d] = da != 1 ? sa[d - pad_a] : 0;
    plan.stride_b[d] = db != 1 ? sb[d - pad_b] : 0;
  }
  return plan;
}

// Calls row(out_offset, a_offset, b_offset, n, a_step, b_step) over the
// innermost axis of the broadcast output.
template <typename RowFn>
void for_each_row(const Broadcast& plan, RowFn row) {
  const std::size_t rank = plan.out.size();
  if (rank == 0) {
    row(0, 0, 0, 1, 0, 0);
    return;
  }
  const std::size_t inner = plan.out[rank - 1];
  const std::size_t total = shape_size(plan.out);
  if (total == 0) return;
  const std::size_t outer = total / inner;
  std::vector<std::size_t> idx(rank - 1, 0);
  std::size_t oa = 0;
  std::size_t ob = 0;
  for (std::size_t o = 0; o < outer; ++o) {
    row(o * inner, oa, ob, inner, plan.stride_a[rank - 1], plan.stride_b[rank - 1]);
    for (std::size_t d = rank - 1; d-- > 0;) {
      ++idx[d];
      oa += plan.stride_a[d];
      ob += plan.stride_b[d];
      if (idx[d] < plan.out[d]) break;
      oa -= plan.stride_a[d] * plan.out[d];
      ob -= plan.stride_b[d] * plan.out[d];
      idx[d] = 0;
    }
  }
}

struct AxisSplit {
  std::size_t outer = 1;
  std::size_t len = 1;
  std::size_t inner = 1;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t d = 0; d < axis; ++d) s.outer *= shape[d];
  s.len = shape[axis];
  for (std::size_t d = axis + 1; d < shape.size(); ++d) s.inner *= shape[d];
  return s;
}

void check_axis(const Shape& shape, std::size_t axis, std::string_view what) {
  if (axis >= shape.size()) {
    throw IndexError(std::string(what) + ": axis " + std::to_string(axis) +
                     " out of range for shape " + shape_string(shape));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Graph construction

NodeId Graph::push(Node node) {
  nodes_.push_back(std::move(node));
  return NodeId{nodes_.size() - 1};
}

const Graph::Node& Graph::node(NodeId id) const {
  if (id.index >= nodes_.size()) {
    throw IndexError("node " + std::to_string(id.index) + " does not exist");
  }
  return nodes_[id.index];
}

const Tensor& Graph::value(NodeId id) const {
  const Node& n = node(id);
  return n.external ? *n.external : n.value;
}

OpKind Graph::kind(NodeId id) const { return node(id).kind; }

bool Graph::requires_grad(NodeId id) const { return node(id).requires_grad; }

NodeId Graph::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

NodeId Graph::variable(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

NodeId Graph::parameter(std::string_view name) {
  if (auto it = param_nodes_.find(name); it != param_nodes_.end()) return it->second;
  if (!params_) throw NameError("graph has no parameter store; cannot bind '" + std::string(name) + "'");
  Node n;
  n.external = &params_->at(name);
  n.requires_grad = true;
  n.param_name = std::string(name);
  const NodeId id = push(std::move(n));
  param_nodes_.emplace(std::string(name), id);
  return id;
}

NodeId Graph::unary(OpKind kind, NodeId x, Tensor value) {
  Node n;
  n.kind = kind;
  n.inputs = {x};
  n.value = std::move(value);
  n.requires_grad = node(x).requires_grad;
  return push(std::move(n));
}

NodeId Graph::binary(OpKind kind, NodeId a, NodeId b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  const Broadcast plan = plan_broadcast(va.shape(), vb.shape(), op_name(kind));
  Tensor out(plan.out);
  const double* pa = va.data().data();
  const double* pb = vb.data().data();
  double* po = out.data().data();
  const kernels::Table& k = kernels::active();
  for_each_row(plan, [&](std::size_t o, std::size_t ia, std::size_t ib, std::size_t n,
                         std::size_t sa, std::size_t sb) {
    if (sa == 1 && sb == 1 && kind != OpKind::kDiv) {
      switch (kind) {
        case OpKind::kAdd: k.add(pa + ia, pb + ib, po + o, n); break;
        case OpKind::kSub: k.sub(pa + ia, pb + ib, po + o, n); break;
        default: k.mul(pa + ia, pb + ib, po + o, n); break;
      }
      return;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double x = pa[ia + i * sa];
      const double y = pb[ib + i * sb];
      switch (kind) {
        case OpKind::kAdd: po[o + i] = x + y; break;
        case OpKind::kSub: po[o + i] = x - y; break;
        case OpKind::kMul: po[o + i] = x * y; break;
        default: po[o + i] = x / y; break;
      }
    }
  });
  Node n;
  n.kind = kind;
  n.inputs = {a, b};
  n.value = std::move(out);
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  return push(std::move(n));
}

NodeId Graph::add(NodeId a, NodeId b) { return binary(OpKind::kAdd, a, b); }
NodeId Graph::sub(NodeId a, NodeId b) { return binary(OpKind::kSub, a, b); }
NodeId Graph::mul(NodeId a, NodeId b) { return binary(OpKind::kMul, a, b); }
NodeId Graph::div(NodeId a, NodeId b) { return binary(OpKind::kDiv, a, b); }

NodeId Graph::matmul(NodeId a, NodeId b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  const bool vec = vb.rank() == 1;
  if (va.rank() != 2 || (vb.rank() != 2 && !vec)) {
    throw DimensionError("matmul: expected matrix x matrix or matrix x vector, got " +
                         shape_string(va.shape()) + " and " + shape_string(vb.shape()));
  }
  const std::size_t m = va.shape()[0];
  const std::size_t n = va.shape()[1];
  if (vb.shape()[0] != n) {
    throw DimensionError("matmul: inner dimensions differ for " + shape_string(va.shape()) +
                         " x " + shape_string(vb.shape()));
  }
  const std::size_t p = vec ? 1 : vb.shape()[1];
  Tensor out(vec ? Shape{m} : Shape{m, p});
  kernels::gemm_nn(m, n, p, va.data().data(), vb.data().data(), out.data().data());
  Node node_;
  node_.kind = OpKind::kMatmul;
  node_.inputs = {a, b};
  node_.value = std::move(out);
  node_.requires_grad = node(a).requires_grad || node(b).requires_grad;
  return push(std::move(node_));
}

NodeId Graph::softmax(NodeId x, std::size_t axis) {
  const Tensor& vx = value(x);
  check_axis(vx.shape(), axis, "softmax");
  const AxisSplit s = split_axis(vx.shape(), axis);
  Tensor out(vx.shape());
  const double* in = vx.data().data();
  double* po = out.data().data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      const std::size_t base = o * s.len * s.inner + i;
      double mx = in[base];
      for (std::size_t k = 1; k < s.len; ++k) mx = std::max(mx, in[base + k * s.inner]);
      double total = 0.0;
      for (std::size_t k = 0; k < s.len; ++k) {
        const double e = std::exp(in[base + k * s.inner] - mx);
        po[base + k * s.inner] = e;
        total += e;
      }
      for (std::size_t k = 0; k < s.len; ++k) po[base + k * s.inner] /= total;
    }
  }
  const NodeId id = unary(OpKind::kSoftmax, x, std::move(out));
  nodes_[id.index].axis = axis;
  return id;
}

NodeId Graph::exp(NodeId x) {
  Tensor out = value(x);
  for (double& v : out.data()) v = std::exp(v);
  return unary(OpKind::kExp, x, std::move(out));
}

NodeId Graph::log(NodeId x) {
  Tensor out = value(x);
  for (double& v : out.data()) v = std::log(v);
  return unary(OpKind::kLog, x, std::move(out));
}

NodeId Graph::neg(NodeId x) {
  Tensor out = value(x);
  for (double& v : out.data()) v = -v;
  return unary(OpKind::kNeg, x, std::move(out));
}

NodeId Graph::abs(NodeId x) {
  Tensor out = value(x);
  for (double& v : out.data()) v = std::fabs(v);
  return unary(OpKind::kAbs, x, std::move(out));
}

NodeId Graph::scale(NodeId x, double alpha) {
  const Tensor& vx = value(x);
  Tensor out(vx.shape());
  kernels::active().scale(alpha, vx.data().data(), out.data().data(), vx.size());
  const NodeId id = unary(OpKind::kScale, x, std::move(out));
  nodes_[id.index].alpha = alpha;
  return id;
}

NodeId Graph::tanh(NodeId x) {
  Tensor out = value(x);
  for (double& v : out.data()) v = std::tanh(v);
  return unary(OpKind::kTanh, x, std::move(out));
}

NodeId Graph::sigmoid(NodeId x) {
  Tensor out = value(x);
  for (double& v : out.data()) {
    v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  }
  return unary(OpKind::kSigmoid, x, std::move(out));
}

NodeId Graph::concat(NodeId a, NodeId b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  if (va.rank() != 1 || vb.rank() != 1) {
    throw DimensionError("concat: expected two vectors, got " + shape_string(va.shape()) +
                         " and " + shape_string(vb.shape()));
  }
  std::vector<double> data(va.values());
  data.insert(data.end(), vb.values().begin(), vb.values().end());
  Node n;
  n.kind = OpKind::kConcat;
  n.inputs = {a, b};
  n.value = Tensor::vector(std::move(data));
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  return push(std::move(n));
}

NodeId Graph::gather(NodeId table, std::size_t row) {
  const Tensor& vt = value(table);
  if (vt.rank() == 0) throw DimensionError("gather: table must have rank >= 1");
  const std::size_t rows = vt.shape()[0];
  if (row >= rows) {
    throw IndexError("gather: row " + std::to_string(row) + " out of range for table " +
                     shape_string(vt.shape()));
  }
  const std::size_t width = rows ? vt.size() / rows : 0;
  Shape shape(vt.shape().begin() + 1, vt.shape().end());
  std::vector<double> data(vt.values().begin() + static_cast<std::ptrdiff_t>(row * width),
                           vt.values().begin() + static_cast<std::ptrdiff_t>((row + 1) * width));
  const NodeId id = unary(OpKind::kGather, table, Tensor(std::move(shape), std::move(data)));
  nodes_[id.index].axis = row;
  return id;
}

NodeId Graph::reduce_sum(NodeId x, std::size_t axis) {
  const Tensor& vx = value(x);
  check_axis(vx.shape(), axis, "reduce_sum");
  const AxisSplit s = split_axis(vx.shape(), axis);
  Shape shape = vx.shape();
  shape.erase(shape.begin() + static_cast<std::ptrdiff_t>(axis));
  Tensor out(shape);
  const double* in = vx.data().data();
  double* po = out.data().data();
  const kernels::Table& k = kernels::active();
  for (std::size_t o = 0; o < s.outer; ++o) {
    if (s.inner == 1) {
      po[o] = k.sum(in + o * s.len, s.len);
    } else {
      for (std::size_t l = 0; l < s.len; ++l) {
        k.axpy(1.0, in + (o * s.len + l) * s.inner, po + o * s.inner, s.inner);
      }
    }
  }
  const NodeId id = unary(OpKind::kReduceSum, x, std::move(out));
  nodes_[id.index].axis = axis;
  return id;
}

NodeId Graph::sum_all(NodeId x) {
  const std::size_t n = value(x).size();
  if (value(x).rank() == 0) return x;
  return reduce_sum(reshape(x, Shape{n}), 0);
}

NodeId Graph::reshape(NodeId x, Shape shape) {
  return unary(OpKind::kReshape, x, value(x).reshaped(std::move(shape)));
}

NodeId Graph::permute(NodeId x, std::vector<std::size_t> perm) {
  const Tensor& vx = value(x);
  const std::size_t rank = vx.rank();
  std::vector<bool> seen(rank, false);
  if (perm.size() != rank) {
    throw DimensionError("permute: permutation length " + std::to_string(perm.size()) +
                         " does not match rank of " + shape_string(vx.shape()));
  }
  for (auto p : perm) {
    if (p >= rank || seen[p]) throw DimensionError("permute: invalid permutation");
    seen[p] = true;
  }
  Shape shape(rank);
  for (std::size_t d = 0; d < rank; ++d) shape[d] = vx.shape()[perm[d]];
  const auto in_strides = row_major_strides(vx.shape());
  Broadcast plan;
  plan.out = shape;
  plan.stride_a.resize(rank);
  plan.stride_b.assign(rank, 0);
  for (std::size_t d = 0; d < rank; ++d) plan.stride_a[d] = in_strides[perm[d]];
  Tensor out(shape);
  const double* in = vx.data().data();
  double* po = out.data().data();
  for_each_row(plan, [&](std::size_t o, std::size_t ia, std::size_t, std::size_t n,
                         std::size_t sa, std::size_t) {
    for (std::size_t i = 0; i < n; ++i) po[o + i] = in[ia + i * sa];
  });
  const NodeId id = unary(OpKind::kPermute, x, std::move(out));
  nodes_[id.index].perm = std::move(perm);
  return id;
}

NodeId Graph::slice(NodeId x, std::size_t offset, std::size_t length) {
  const Tensor& vx = value(x);
  if (vx.rank() != 1) throw DimensionError("slice: expected a vector, got " + shape_string(vx.shape()));
  if (offset + length > vx.size()) {
    throw IndexError("slice: [" + std::to_string(offset) + ", " + std::to_string(offset + length) +
                     ") exceeds length " + std::to_string(vx.size()));
  }
  std::vector<double> data(vx.values().begin() + static_cast<std::ptrdiff_t>(offset),
                           vx.values().begin() + static_cast<std::ptrdiff_t>(offset + length));
  const NodeId id = unary(OpKind::kSlice, x, Tensor::vector(std::move(data)));
  nodes_[id.index].axis = offset;
  return id;
}

NodeId Graph::stack(std::span<const NodeId> parts) {
  if (parts.empty()) throw DimensionError("stack: no inputs");
  const Shape& part_shape = value(parts[0]).shape();
  Shape shape{parts.size()};
  shape.insert(shape.end(), part_shape.begin(), part_shape.end());
  std::vector<double> data;
  data.reserve(shape_size(shape));
  Node n;
  n.kind = OpKind::kStack;
  for (NodeId p : parts) {
    const Tensor& v = value(p);
    if (v.shape() != part_shape) {
      throw DimensionError("stack: shape " + shape_string(v.shape()) + " differs from " +
                           shape_string(part_shape));
    }
    data.insert(data.end(), v.values().begin(), v.values().end());
    n.inputs.push_back(p);
    n.requires_grad = n.requires_grad || node(p).requires_grad;
  }
  n.value = Tensor(std::move(shape), std::move(data));
  return push(std::move(n));
}

// ---------------------------------------------------------------------------
// Reverse sweep

std::vector<double>& Graph::grad_buffer(NodeId id) {
  auto& buf = grads_[id.index];
  if (buf.empty()) buf.assign(value(id).size(), 0.0);
  return buf;
}

Gradients Graph::backward(NodeId loss) {
  const Tensor& lv = value(loss);
  if (lv.size() != 1) {
    throw ContractError("backward: loss must have a single element, got shape " +
                        shape_string(lv.shape()));
  }
  grads_.assign(nodes_.size(), {});
  grads_[loss.index] = {1.0};
  for (std::size_t i = loss.index + 1; i-- > 0;) {
    if (!nodes_[i].requires_grad || grads_[i].empty()) continue;
    backprop_node(i);
  }
  Gradients out;
  if (params_) {
    for (const auto& [name, tensor] : params_->entries()) {
      auto it = param_nodes_.find(name);
      if (it != param_nodes_.end() && !grads_[it->second.index].empty()) {
        out.emplace(name, Tensor(tensor.shape(), grads_[it->second.index]));
      } else {
        out.emplace(name, Tensor(tensor.shape()));
      }
    }
  }
  return out;
}

Tensor Graph::grad(NodeId id) const {
  const Tensor& v = value(id);
  if (id.index < grads_.size() && !grads_[id.index].empty()) {
    return Tensor(v.shape(), grads_[id.index]);
  }
  return Tensor(v.shape());
}

void Graph::backprop_node(std::size_t index) {
  const Node& n = nodes_[index];
  if (n.kind == OpKind::kLeaf) return;
  const double* g = grads_[index].data();
  std::vector<double> flipped;
  if (auto fault = gradient_fault(); fault && *fault == n.kind) {
    flipped = grads_[index];
    for (double& v : flipped) v = -v;
    g = flipped.data();
  }
  const Tensor& out = n.value;
  const kernels::Table& k = kernels::active();
  auto wants = [&](std::size_t input) { return nodes_[n.inputs[input].index].requires_grad; };

  switch (n.kind) {
    case OpKind::kLeaf:
      break;

    case OpKind::kAdd:
    case OpKind::kSub:
    case OpKind::kMul:
    case OpKind::kDiv: {
      const Tensor& va = value(n.inputs[0]);
      const Tensor& vb = value(n.inputs[1]);
      const Broadcast plan = plan_broadcast(va.shape(), vb.shape(), op_name(n.kind));
      double* ga = wants(0) ? grad_buffer(n.inputs[0]).data() : nullptr;
      double* gb = wants(1) ? grad_buffer(n.inputs[1]).data() : nullptr;
      const double* pa = va.data().data();
      const double* pb = vb.data().data();
      for_each_row(plan, [&](std::size_t o, std::size_t ia, std::size_t ib, std::size_t len,
                             std::size_t sa, std::size_t sb) {
        if (sa == 1 && sb == 1 && n.kind != OpKind::kDiv) {
          if (n.kind == OpKind::kMul) {
            if (ga) k.mul_acc(g + o, pb + ib, ga + ia, len);
            if (gb) k.mul_acc(g + o, pa + ia, gb + ib, len);
          } else {
            if (ga) k.axpy(1.0, g + o, ga + ia, len);
            if (gb) k.axpy(n.kind == OpKind::kAdd ? 1.0 : -1.0, g + o, gb + ib, len);
          }
          return;
        }
        for (std::size_t i = 0; i < len; ++i) {
          const double go = g[o + i];
          const double x = pa[ia + i * sa];
          const double y = pb[ib + i * sb];
          switch (n.kind) {
            case OpKind::kAdd:
              if (ga) ga[ia + i * sa] += go;
              if (gb) gb[ib + i * sb] += go;
              break;
            case OpKind::kSub:
              if (ga) ga[ia + i * sa] += go;
              if (gb) gb[ib + i * sb] -= go;
              break;
            case OpKind::kMul:
              if (ga) ga[ia + i * sa] += go * y;
              if (gb) gb[ib + i * sb] += go * x;
              break;
            default:
              if (ga) ga[ia + i * sa] += go / y;
              if (gb) gb[ib + i * sb] -= go * x / (y * y);
              break;
          }
        }
      });
      break;
    }

    case OpKind::kMatmul: {
      const Tensor& va = value(n.inputs[0]);
      const Tensor& vb = value(n.inputs[1]);
      const std::size_t m = va.shape()[0];
      const std::size_t inner = va.shape()[1];
      const std::size_t p = vb.rank() == 1 ? 1 : vb.shape()[1];
      if (wants(0)) kernels::gemm_nt(m, inner, p, g, vb.data().data(), grad_buffer(n.inputs[0]).data());
      if (wants(1)) kernels::gemm_tn(m, inner, p, va.data().data(), g, grad_buffer(n.inputs[1]).data());
      break;
    }

    case OpKind::kSoftmax: {
      const AxisSplit s = split_axis(out.shape(), n.axis);
      double* gx = grad_buffer(n.inputs[0]).data();
      const double* y = out.data().data();
      for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t i = 0; i < s.inner; ++i) {
          const std::size_t base = o * s.len * s.inner + i;
          double dotgy = 0.0;
          for (std::size_t l = 0; l < s.len; ++l) dotgy += g[base + l * s.inner] * y[base + l * s.inner];
          for (std::size_t l = 0; l < s.len; ++l) {
            const std::size_t at = base + l * s.inner;
            gx[at] += y[at] * (g[at] - dotgy);
          }
        }
      }
      break;
    }

    case OpKind::kExp:
      k.mul_acc(g, out.data().data(), grad_buffer(n.inputs[0]).data(), out.size());
      break;

    case OpKind::kLog: {
      const double* x = value(n.inputs[0]).data().data();
      double* gx = grad_buffer(n.inputs[0]).data();
      for (std::size_t i = 0; i < out.size(); ++i) gx[i] += g[i] / x[i];
      break;
    }

    case OpKind::kNeg:
      k.axpy(-1.0, g, grad_buffer(n.inputs[0]).data(), out.size());
      break;

    case OpKind::kAbs: {
      const double* x = value(n.inputs[0]).data().data();
      double* gx = grad_buffer(n.inputs[0]).data();
      for (std::size_t i = 0; i < out.size(); ++i) {
        if (x[i] > 0.0) {
          gx[i] += g[i];
        } else if (x[i] < 0.0) {
          gx[i] -= g[i];
        }
      }
      break;
    }

    case OpKind::kScale:
      k.axpy(n.alpha, g, grad_buffer(n.inputs[0]).data(), out.size());
      break;

    case OpKind::kTanh: {
      const double* y = out.data().data();
      double* gx = grad_buffer(n.inputs[0]).data();
      for (std::size_t i = 0; i < out.size(); ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
      break;
    }

    case OpKind::kSigmoid: {
      const double* y = out.data().data();
      double* gx = grad_buffer(n.inputs[0]).data();
      for (std::size_t i = 0; i < out.size(); ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
      break;
    }

    case OpKind::kConcat: {
      const std::size_t la = value(n.inputs[0]).size();
      if (wants(0)) k.axpy(1.0, g, grad_buffer(n.inputs[0]).data(), la);
      if (wants(1)) k.axpy(1.0, g + la, grad_buffer(n.inputs[1]).data(), out.size() - la);
      break;
    }

    case OpKind::kGather: {
      const std::size_t width = out.size();
      k.axpy(1.0, g, grad_buffer(n.inputs[0]).data() + n.axis * width, width);
      break;
    }

    case OpKind::kReduceSum: {
      const Tensor& vx = value(n.inputs[0]);
      const AxisSplit s = split_axis(vx.shape(), n.axis);
      double* gx = grad_buffer(n.inputs[0]).data();
      for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t l = 0; l < s.len; ++l) {
          k.axpy(1.0, g + o * s.inner, gx + (o * s.len + l) * s.inner, s.inner);
        }
      }
      break;
    }

    case OpKind::kReshape:
      k.axpy(1.0, g, grad_buffer(n.inputs[0]).data(), out.size());
      break;

    case OpKind::kPermute: {
      const Tensor& vx = value(n.inputs[0]);
      const auto in_strides = row_major_strides(vx.shape());
      Broadcast plan;
      plan.out = out.shape();
      plan.stride_a.resize(out.rank());
      plan.stride_b.assign(out.rank(), 0);
      for (std::size_t d = 0; d < out.rank(); ++d) plan.stride_a[d] = in_strides[n.perm[d]];
      double* gx = grad_buffer(n.inputs[0]).data();
      for_each_row(plan, [&](std::size_t o, std::size_t ia, std::size_t, std::size_t len,
                             std::size_t sa, std::size_t) {
        for (std::size_t i = 0; i < len; ++i) gx[ia + i * sa] += g[o + i];
      });
      break;
    }

    case OpKind::kSlice:
      k.axpy(1.0, g, grad_buffer(n.inputs[0]).data() + n.axis, out.size());
      break;

    case OpKind::kStack: {
      const std::size_t width = value(n.inputs[0]).size();
      for (std::size_t p = 0; p < n.inputs.size(); ++p) {
        if (!wants(p)) continue;
        k.axpy(1.0, g + p * width, grad_buffer(n.inputs[p]).data(), width);
      }
      break;
    }
  }
}

std::vector<int> Graph::nonsmooth_signature() const {
  std::vector<int> sig;
  for (const Node& n : nodes_) {
    if (n.kind != OpKind::kAbs) continue;
    for (double v : value(n.inputs[0]).data()) sig.push_back(v > 0.0 ? 1 : (v < 0.0 ? -1 : 0));
  }
  for (bool b : branches_) sig.push_back(b ? 2 : 3);
  return sig;
}

}  // namespace igraph
