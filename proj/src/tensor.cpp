#include "odesyn/tensor.hpp"

#include <sstream>

namespace odesyn {

int shape_numel(const Shape& s) {
  int n = 1;
  for (int e : s) {
    if (e <= 0) throw shape_error("tensor extents must be positive, got " + shape_str(s));
    n *= e;
  }
  return n;
}

bool shape_equal(const Shape& a, const Shape& b) { return a == b; }

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << "]";
  return os.str();
}

void TensorData::ensure_grad() {
  if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
}

Tensor Tensor::leaf(Shape shape, std::vector<double> value, bool requires_grad) {
  if (shape_numel(shape) != static_cast<int>(value.size()))
    throw shape_error("leaf: " + shape_str(shape) + " does not hold " +
                      std::to_string(value.size()) + " elements");
  auto d = std::make_shared<TensorData>();
  d->shape = std::move(shape);
  d->value = std::move(value);
  d->requires_grad = requires_grad;
  return from_data(std::move(d));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double v, bool requires_grad) {
  std::vector<double> value(static_cast<std::size_t>(shape_numel(shape)), v);
  return leaf(std::move(shape), std::move(value), requires_grad);
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return leaf({1}, {v}, requires_grad);
}

Tensor Tensor::from_data(std::shared_ptr<TensorData> d) {
  Tensor t;
  t.d_ = std::move(d);
  return t;
}

const Shape& Tensor::shape() const { return d_->shape; }

int Tensor::numel() const { return static_cast<int>(d_->value.size()); }

int Tensor::rows() const {
  if (d_->shape.size() != 2) throw shape_error("rows(): tensor is not 2-D");
  return d_->shape[0];
}

int Tensor::cols() const {
  if (d_->shape.size() != 2) throw shape_error("cols(): tensor is not 2-D");
  return d_->shape[1];
}

bool Tensor::requires_grad() const { return d_->requires_grad; }

const std::vector<double>& Tensor::value() const {
  if (d_->released) throw numeric_error("tensor buffer was released by backward()");
  return d_->value;
}

std::vector<double>& Tensor::mutable_value() {
  if (d_->released) throw numeric_error("tensor buffer was released by backward()");
  return d_->value;
}

bool Tensor::has_grad() const { return d_ && d_->grad.size() == d_->value.size(); }

const std::vector<double>& Tensor::grad() const {
  if (!has_grad()) throw numeric_error("gradient not populated; run backward first");
  return d_->grad;
}

std::vector<double>& Tensor::mutable_grad() {
  d_->ensure_grad();
  return d_->grad;
}

void Tensor::zero_grad() {
  if (!d_->grad.empty()) std::fill(d_->grad.begin(), d_->grad.end(), 0.0);
}

double Tensor::scalar_value() const {
  if (numel() != 1) throw shape_error("scalar_value(): tensor has " +
                                      std::to_string(numel()) + " elements");
  return value()[0];
}

double Tensor::at(int i) const { return value()[static_cast<std::size_t>(i)]; }

double Tensor::at(int r, int c) const {
  return value()[static_cast<std::size_t>(r) * d_->shape[1] + c];
}

Tensor Tape::make_output(Shape shape, std::vector<double> value, bool requires_grad) {
  return Tensor::leaf(std::move(shape), std::move(value), requires_grad && recording_);
}

void Tape::record(const Tensor& out, std::function<void()> backward_fn) {
  if (!recording_ || !out.requires_grad()) return;
  ops_.push_back({out.data(), std::move(backward_fn)});
}

void Tape::backward(const Tensor& loss, bool release_buffers) {
  if (consumed_)
    throw numeric_error("tape already consumed by backward(); record a fresh graph");
  if (loss.numel() != 1) throw shape_error("backward(): loss must be scalar");
  consumed_ = true;
  loss.data()->ensure_grad();
  loss.data()->grad[0] = 1.0;
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
    TensorData& out = *it->out;
    // Nodes the loss never reached have no grad buffer; nothing to propagate.
    if (out.grad.size() == out.value.size()) it->backward_fn();
    if (release_buffers) {
      out.value.clear();
      out.value.shrink_to_fit();
      out.grad.clear();
      out.grad.shrink_to_fit();
      out.released = true;
    }
    it->backward_fn = nullptr;
  }
}

void Tape::reset() {
  ops_.clear();
  consumed_ = false;
}

Tensor detach(const Tensor& x) {
  return Tensor::leaf(x.shape(), x.value(), false);
}

}  // namespace odesyn
