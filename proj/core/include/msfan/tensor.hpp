#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace msfan {

/// Rank-4 extent in (batch, channels, height, width) order.
struct Shape {
  int64_t n = 0;
  int64_t c = 0;
  int64_t h = 0;
  int64_t w = 0;

  int64_t numel() const { return n * c * h * w; }
  int64_t plane() const { return h * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

class Tape;

/// Dense rank-4 array of doubles with an optional gradient buffer.
///
/// Tensor is a shared handle: copies alias the same storage. Values produced
/// by primitives are never mutated afterwards, so the tape may keep handles to
/// inputs as saved activations. Parameters are the exception; they are only
/// written by the optimizer between backward passes.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<double> data, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  int64_t numel() const { return shape().numel(); }

  std::span<const double> data() const;
  /// Writable view for parameter updates and test setup. Must not be used on
  /// tensors that an active tape still references as saved activations.
  std::span<double> mutable_data();

  double item() const;
  double at(int64_t n, int64_t c, int64_t h, int64_t w) const;

  bool requires_grad() const;
  Tensor& set_requires_grad(bool flag);

  bool has_grad() const;
  std::span<const double> grad() const;
  /// Returns the gradient buffer, allocating a zero-filled one on first use.
  std::span<double> grad_buffer() const;
  void zero_grad();

  /// Detached deep copy without gradient or tape linkage.
  Tensor clone() const;

  bool same_as(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  friend class Tape;
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

/// Reverse-mode tape. Nodes are appended in execution order, which is a
/// topological order of the computation graph.
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  ~Tape();

  /// Appends a node. `backward` reads output.grad() and accumulates into the
  /// gradient buffers of those inputs that require grad.
  void record(std::vector<Tensor> inputs, Tensor output, BackwardFn backward);

  /// Seeds d(root)/d(root) = 1 and runs every node from the root's producer
  /// back to the start of the tape exactly once.
  void backward(const Tensor& root);

  std::size_t size() const { return nodes_.size(); }
  void clear();

 private:
  struct Node {
    std::vector<Tensor> inputs;
    Tensor output;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

/// The tape that primitives record onto on this thread, or nullptr when
/// gradients are not being tracked.
Tape* active_tape();

/// Makes `tape` the active tape for the lifetime of the scope.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

/// True when an active tape exists and at least one input requires grad.
bool should_record(std::initializer_list<const Tensor*> inputs);
bool should_record(const std::vector<Tensor>& inputs);

}  // namespace msfan
