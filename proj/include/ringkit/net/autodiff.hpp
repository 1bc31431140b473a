#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ringkit/tensor.hpp"

// Reverse-mode differentiation over a dynamic graph: every op returns a node that owns its value,
// references its inputs and knows how to push its gradient back to them.
namespace ringkit::net {

struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
  Tensor value;
  Tensor grad;  // allocated on first use; same dims as value
  std::vector<Var> parents;
  std::function<void(Node&)> backward_fn;
  bool requires_grad = false;
  std::string op;

  Tensor& grad_buffer();
  const Dims& dims() const { return value.dims(); }
};

Var constant(Tensor value);
Var parameter(Tensor value);
// Creates an op node; it requires grad when any parent does.
Var make_node(Tensor value, std::vector<Var> parents, std::string op,
              std::function<void(Node&)> backward_fn);

// Seeds d(root)/d(root) = 1 and runs every reachable backward rule once in reverse
// topological order. The root must hold a single element.
void backward(const Var& root);
void zero_grad(const std::vector<Var>& params);

// Throws an invalid-argument error "<op>: <what> <dims>" when cond is false.
void check_dims(bool cond, const std::string& op, const std::string& what);

}  // namespace ringkit::net
