#include "msfan/tensor.hpp"

#include <sstream>

#include "msfan/errors.hpp"

namespace msfan {

std::string Shape::str() const {
  std::ostringstream os;
  os << n << "x" << c << "x" << h << "x" << w;
  return os.str();
}

struct Tensor::Impl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;
  bool requires_grad = false;
  // Producer node on `tape`, or -1 for leaves.
  const Tape* tape = nullptr;
  int64_t node = -1;
};

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(shape, 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) {
    throw DimensionError("negative extent in shape " + shape.str());
  }
  return from_data(shape, std::vector<double>(static_cast<std::size_t>(shape.numel()), value),
                   requires_grad);
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
  if (static_cast<int64_t>(data.size()) != shape.numel()) {
    throw DimensionError("data length " + std::to_string(data.size()) +
                         " does not match shape " + shape.str());
  }
  Tensor t;
  t.impl_ = std::make_shared<Impl>();
  t.impl_->shape = shape;
  t.impl_->data = std::move(data);
  t.impl_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_data({1, 1, 1, 1}, {value}, requires_grad);
}

const Shape& Tensor::shape() const {
  static const Shape kEmpty{};
  return impl_ ? impl_->shape : kEmpty;
}

std::span<const double> Tensor::data() const {
  if (!impl_) return {};
  return impl_->data;
}

std::span<double> Tensor::mutable_data() {
  if (!impl_) return {};
  return impl_->data;
}

double Tensor::item() const {
  if (!impl_ || impl_->data.size() != 1) {
    throw DimensionError("item() requires a single-element tensor, got " + shape().str());
  }
  return impl_->data[0];
}

double Tensor::at(int64_t n, int64_t c, int64_t h, int64_t w) const {
  const Shape& s = impl_->shape;
  return impl_->data[static_cast<std::size_t>(((n * s.c + c) * s.h + h) * s.w + w)];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool flag) {
  impl_->requires_grad = flag;
  return *this;
}

bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }

std::span<const double> Tensor::grad() const {
  if (!impl_) return {};
  return impl_->grad;
}

std::span<double> Tensor::grad_buffer() const {
  if (impl_->grad.empty() && !impl_->data.empty()) {
    impl_->grad.assign(impl_->data.size(), 0.0);
  }
  return impl_->grad;
}

void Tensor::zero_grad() {
  if (impl_) impl_->grad.clear();
}

Tensor Tensor::clone() const {
  if (!impl_) return {};
  return from_data(impl_->shape, impl_->data, false);
}

// ---------------------------------------------------------------------------

Tape::~Tape() { clear(); }

void Tape::record(std::vector<Tensor> inputs, Tensor output, BackwardFn backward) {
  for (const Tensor& in : inputs) {
    if (in.impl_ && in.impl_->node >= 0 && in.impl_->tape != this) {
      throw UsageError("input was produced on a different tape");
    }
  }
  output.impl_->requires_grad = true;
  output.impl_->tape = this;
  output.impl_->node = static_cast<int64_t>(nodes_.size());
  nodes_.push_back(Node{std::move(inputs), std::move(output), std::move(backward)});
}

void Tape::backward(const Tensor& root) {
  if (!root.impl_ || root.impl_->tape != this || root.impl_->node < 0 ||
      root.impl_->node >= static_cast<int64_t>(nodes_.size()) ||
      !nodes_[static_cast<std::size_t>(root.impl_->node)].output.same_as(root)) {
    throw UsageError("backward root was not produced on this tape");
  }
  if (root.numel() != 1) {
    throw UsageError("backward root must be a scalar, got shape " + root.shape().str());
  }
  Tensor seed = root;
  seed.grad_buffer()[0] += 1.0;
  for (int64_t i = root.impl_->node; i >= 0; --i) {
    Node& node = nodes_[static_cast<std::size_t>(i)];
    if (!node.output.has_grad()) continue;  // not on any path to the root
    node.backward();
  }
}

void Tape::clear() {
  for (Node& node : nodes_) {
    if (node.output.impl_) {
      node.output.impl_->tape = nullptr;
      node.output.impl_->node = -1;
    }
  }
  nodes_.clear();
}

// ---------------------------------------------------------------------------

namespace {
thread_local Tape* g_active_tape = nullptr;
}  // namespace

Tape* active_tape() { return g_active_tape; }

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }
TapeScope::~TapeScope() { g_active_tape = previous_; }

bool should_record(std::initializer_list<const Tensor*> inputs) {
  if (g_active_tape == nullptr) return false;
  for (const Tensor* t : inputs) {
    if (t != nullptr && t->requires_grad()) return true;
  }
  return false;
}

bool should_record(const std::vector<Tensor>& inputs) {
  if (g_active_tape == nullptr) return false;
  for (const Tensor& t : inputs) {
    if (t.requires_grad()) return true;
  }
  return false;
}

}  // namespace msfan
