#include "ringkit/net/autodiff.hpp"

#include <unordered_set>

#include "ringkit/error.hpp"

namespace ringkit::net {

Tensor& Node::grad_buffer() {
  if (grad.dims() != value.dims()) grad = Tensor(value.dims());
  return grad;
}

Var constant(Tensor value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->op = "constant";
  return n;
}

Var parameter(Tensor value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = true;
  n->op = "parameter";
  return n;
}

Var make_node(Tensor value, std::vector<Var> parents, std::string op,
              std::function<void(Node&)> backward_fn) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->op = std::move(op);
  for (const auto& p : parents) n->requires_grad = n->requires_grad || p->requires_grad;
  n->parents = std::move(parents);
  if (n->requires_grad) n->backward_fn = std::move(backward_fn);
  return n;
}

void backward(const Var& root) {
  require(root && root->value.size() == 1, "backward: root must be a scalar node");
  // Iterative post-order DFS gives a topological order without recursion depth limits.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{root.get(), 0}};
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  for (Node* n : order) {
    if (n->requires_grad) n->grad_buffer().fill(0.0);
  }
  root->grad_buffer()[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward_fn) (*it)->backward_fn(**it);
  }
}

void zero_grad(const std::vector<Var>& params) {
  for (const auto& p : params) p->grad_buffer().fill(0.0);
}

void check_dims(bool cond, const std::string& op, const std::string& what) {
  if (!cond) throw_invalid(op + ": " + what);
}

}  // namespace ringkit::net
