#pragma once

#include "warpal/common.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

namespace warpal {

enum class WarpKind { identity, kumaraswamy, crqs };

std::string_view to_string(WarpKind kind);
WarpKind warp_kind_from_string(std::string_view name);

// Intermediate values recorded by a forward pass, consumed by backward().
struct WarpTape {
  Matrix input;
  std::vector<Matrix> values;
};

// Bijective, coordinatewise-monotone map of [0,1]^D onto itself. Points are matrix rows.
class Warp {
 public:
  explicit Warp(int dim) : dim_(dim) {}
  virtual ~Warp() = default;

  [[nodiscard]] int dim() const noexcept { return dim_; }
  [[nodiscard]] virtual WarpKind kind() const noexcept = 0;
  [[nodiscard]] virtual Index num_params() const noexcept = 0;
  [[nodiscard]] virtual Vector params() const = 0;
  virtual void set_params(const Vector& params) = 0;

  [[nodiscard]] Matrix forward(const Matrix& X) const { return forward(X, nullptr); }
  virtual Matrix forward(const Matrix& X, WarpTape* tape) const = 0;

  // Vector-Jacobian product: given dL/dT(X) (rows match X), writes dL/dX into grad_input and
  // adds dL/dparams into grad_params. Either output may be null.
  virtual void backward(const WarpTape& tape, const Matrix& grad_output, Matrix* grad_input,
                        Vector* grad_params) const = 0;

  [[nodiscard]] virtual std::unique_ptr<Warp> clone() const = 0;

  // Self-describing text blob: kind, D, structure, flat parameters.
  [[nodiscard]] virtual std::string serialize() const;

 protected:
  void check_input(const Matrix& X) const;

 private:
  int dim_;
};

class IdentityWarp final : public Warp {
 public:
  explicit IdentityWarp(int dim) : Warp(dim) {}
  [[nodiscard]] WarpKind kind() const noexcept override { return WarpKind::identity; }
  [[nodiscard]] Index num_params() const noexcept override { return 0; }
  [[nodiscard]] Vector params() const override { return {}; }
  void set_params(const Vector& params) override;
  using Warp::forward;
  Matrix forward(const Matrix& X, WarpTape* tape) const override;
  void backward(const WarpTape& tape, const Matrix& grad_output, Matrix* grad_input,
                Vector* grad_params) const override;
  [[nodiscard]] std::unique_ptr<Warp> clone() const override { return std::make_unique<IdentityWarp>(*this); }
};

// Per-dimension Kumaraswamy CDF 1 - (1 - x^a)^b. Parameters stored as (log a_1..log a_D, log b_1..log b_D).
class KumaraswamyWarp final : public Warp {
 public:
  explicit KumaraswamyWarp(int dim);
  KumaraswamyWarp(const Vector& a, const Vector& b);

  [[nodiscard]] WarpKind kind() const noexcept override { return WarpKind::kumaraswamy; }
  [[nodiscard]] Index num_params() const noexcept override { return 2 * dim(); }
  [[nodiscard]] Vector params() const override { return log_params_; }
  void set_params(const Vector& params) override;
  using Warp::forward;
  Matrix forward(const Matrix& X, WarpTape* tape) const override;
  void backward(const WarpTape& tape, const Matrix& grad_output, Matrix* grad_input,
                Vector* grad_params) const override;
  [[nodiscard]] std::unique_ptr<Warp> clone() const override { return std::make_unique<KumaraswamyWarp>(*this); }

  [[nodiscard]] Vector a() const { return log_params_.head(dim()).array().exp(); }
  [[nodiscard]] Vector b() const { return log_params_.tail(dim()).array().exp(); }

 private:
  Vector log_params_;
};

struct CrqsConfig {
  int bins = 8;
  int layers = 4;
  int hidden = 32;
};

// Stack of rational-quadratic-spline coupling layers with alternating even/odd partitions.
// Each conditioner is a one-hidden-layer tanh network whose output layer starts at zero, so a
// fresh warp is the identity. With D = 1 every layer is an unconditional spline.
class CrqsWarp final : public Warp {
 public:
  struct Layer {
    std::vector<int> pass;       // A: copied through
    std::vector<int> transform;  // B: spline-mapped
    Index offset = 0;            // start of this layer in the flat parameter vector
    Index size = 0;
  };

  CrqsWarp(int dim, const CrqsConfig& config, std::uint64_t init_seed);

  [[nodiscard]] WarpKind kind() const noexcept override { return WarpKind::crqs; }
  [[nodiscard]] Index num_params() const noexcept override { return params_.size(); }
  [[nodiscard]] Vector params() const override { return params_; }
  void set_params(const Vector& params) override;
  using Warp::forward;
  Matrix forward(const Matrix& X, WarpTape* tape) const override;
  void backward(const WarpTape& tape, const Matrix& grad_output, Matrix* grad_input,
                Vector* grad_params) const override;
  [[nodiscard]] std::unique_ptr<Warp> clone() const override { return std::make_unique<CrqsWarp>(*this); }
  [[nodiscard]] std::string serialize() const override;

  [[nodiscard]] const CrqsConfig& config() const noexcept { return config_; }
  [[nodiscard]] const std::vector<Layer>& layers() const noexcept { return layers_; }
  // One coupling layer on its own: pass-through coordinates copied, the rest spline-mapped.
  [[nodiscard]] Matrix forward_layer(std::size_t index, const Matrix& X) const;

 private:
  CrqsConfig config_;
  std::vector<Layer> layers_;
  Vector params_;

  [[nodiscard]] int raw_per_coord() const noexcept { return 3 * config_.bins + 1; }
  Matrix apply_layer(const Layer& layer, const Matrix& cur, Matrix* hidden, Matrix* dgdraw, Matrix* dgdx) const;
};

std::unique_ptr<Warp> make_warp(WarpKind kind, int dim, const CrqsConfig& crqs = {}, std::uint64_t init_seed = 0);
std::unique_ptr<Warp> deserialize_warp(std::string_view blob);

// Dense Jacobians at a single point, assembled from dim() backward passes.
Matrix warp_param_jacobian(const Warp& warp, const Vector& x);  // D x P
Matrix warp_input_jacobian(const Warp& warp, const Vector& x);  // D x D

}  // namespace warpal
