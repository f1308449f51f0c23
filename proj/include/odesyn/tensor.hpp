#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "odesyn/common.hpp"

namespace odesyn {

// Row-major dense extents. {} is a scalar of one element.
using Shape = std::vector<int>;

int shape_numel(const Shape& s);
bool shape_equal(const Shape& a, const Shape& b);
std::string shape_str(const Shape& s);

struct TensorData {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated lazily, same length as value
  bool requires_grad = false;
  bool released = false;  // buffers freed by backward(release_buffers=true)

  void ensure_grad();
};

// Shared handle to a dense 64-bit tensor. Values are immutable once an op has
// produced them; only leaves may be rewritten in place (optimizer updates).
class Tensor {
 public:
  Tensor() = default;

  static Tensor leaf(Shape shape, std::vector<double> value, bool requires_grad = false);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double v, bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);
  static Tensor from_data(std::shared_ptr<TensorData> d);

  bool defined() const { return d_ != nullptr; }
  const Shape& shape() const;
  int numel() const;
  int rows() const;  // first extent of a 2-D tensor
  int cols() const;  // second extent of a 2-D tensor
  bool requires_grad() const;

  const std::vector<double>& value() const;
  std::vector<double>& mutable_value();  // leaf updates only
  bool has_grad() const;
  const std::vector<double>& grad() const;
  std::vector<double>& mutable_grad();
  void zero_grad();

  double scalar_value() const;
  double at(int i) const;
  double at(int r, int c) const;

  std::shared_ptr<TensorData> data() const { return d_; }

 private:
  std::shared_ptr<TensorData> d_;
};

// Ordered record of executed primitives. One backward sweep per recorded
// graph; a second sweep without re-recording throws. Recording is
// single-threaded; disable recording to run forward-only (no graph, no
// gradients).
class Tape {
 public:
  Tensor make_output(Shape shape, std::vector<double> value, bool requires_grad);
  void record(const Tensor& out, std::function<void()> backward_fn);

  bool recording() const { return recording_; }
  void set_recording(bool on) { recording_ = on; }

  // Seeds d(loss)/d(loss)=1 and sweeps the tape in reverse topological order.
  // With release_buffers, each op's value/grad storage is freed right after
  // its backward runs; leaves are untouched.
  void backward(const Tensor& loss, bool release_buffers = false);

  std::size_t num_ops() const { return ops_.size(); }
  bool consumed() const { return consumed_; }
  void reset();

 private:
  struct Record {
    std::shared_ptr<TensorData> out;
    std::function<void()> backward_fn;
  };
  std::vector<Record> ops_;
  bool consumed_ = false;
  bool recording_ = true;
};

// Value copy that starts a fresh leaf: gradients do not flow back through it.
Tensor detach(const Tensor& x);

}  // namespace odesyn
