#include "warpal/warp.hpp"

#include "warpal/rng.hpp"
#include "warpal/rqs.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

namespace warpal {

using nlohmann::json;

namespace {

// Kumaraswamy input derivatives blow up at the endpoints when a or b < 1.
constexpr double kKumaraswamyEdge = 1e-12;

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

std::string_view to_string(WarpKind kind) {
  switch (kind) {
    case WarpKind::identity: return "identity";
    case WarpKind::kumaraswamy: return "kumaraswamy";
    case WarpKind::crqs: return "crqs";
  }
  return "identity";
}

WarpKind warp_kind_from_string(std::string_view name) {
  if (name == "identity") return WarpKind::identity;
  if (name == "kumaraswamy") return WarpKind::kumaraswamy;
  if (name == "crqs") return WarpKind::crqs;
  fail(ErrorCode::not_found, "unknown warp kind: " + std::string(name));
}

void Warp::check_input(const Matrix& X) const {
  require(X.cols() == dim_, ErrorCode::shape, "warp: input dimension mismatch");
  require(X.allFinite(), ErrorCode::domain, "warp: non-finite input");
}

std::string Warp::serialize() const {
  json j;
  j["kind"] = std::string(to_string(kind()));
  j["dim"] = dim();
  j["params"] = to_std(params());
  return j.dump();
}

// ---------------------------------------------------------------------------
// Identity

void IdentityWarp::set_params(const Vector& params) {
  require(params.size() == 0, ErrorCode::shape, "identity warp has no parameters");
}

Matrix IdentityWarp::forward(const Matrix& X, WarpTape* tape) const {
  check_input(X);
  if (tape) tape->input = X;
  return X;
}

void IdentityWarp::backward(const WarpTape&, const Matrix& grad_output, Matrix* grad_input, Vector*) const {
  if (grad_input) *grad_input = grad_output;
}

// ---------------------------------------------------------------------------
// Kumaraswamy

KumaraswamyWarp::KumaraswamyWarp(int dim) : Warp(dim), log_params_(Vector::Zero(2 * dim)) {}

KumaraswamyWarp::KumaraswamyWarp(const Vector& a, const Vector& b) : Warp(static_cast<int>(a.size())) {
  require(a.size() == b.size(), ErrorCode::shape, "kumaraswamy: a and b sizes differ");
  require((a.array() > 0).all() && (b.array() > 0).all(), ErrorCode::invalid_argument,
          "kumaraswamy: parameters must be positive");
  log_params_.resize(2 * a.size());
  log_params_ << a.array().log().matrix(), b.array().log().matrix();
}

void KumaraswamyWarp::set_params(const Vector& params) {
  require(params.size() == num_params(), ErrorCode::shape, "kumaraswamy: parameter size");
  log_params_ = params;
}

Matrix KumaraswamyWarp::forward(const Matrix& X, WarpTape* tape) const {
  check_input(X);
  if (tape) tape->input = X;
  const Vector av = a(), bv = b();
  Matrix out(X.rows(), X.cols());
  for (Index d = 0; d < X.cols(); ++d) {
    for (Index i = 0; i < X.rows(); ++i) {
      const double x = std::clamp(X(i, d), 0.0, 1.0);
      if (x <= 0.0) {
        out(i, d) = 0.0;
      } else if (x >= 1.0) {
        out(i, d) = 1.0;
      } else {
        const double u = std::pow(x, av[d]);
        out(i, d) = -std::expm1(bv[d] * std::log1p(-u));
      }
    }
  }
  return out;
}

void KumaraswamyWarp::backward(const WarpTape& tape, const Matrix& grad_output, Matrix* grad_input,
                               Vector* grad_params) const {
  const Matrix& X = tape.input;
  const Vector av = a(), bv = b();
  const int D = dim();
  if (grad_input) grad_input->resize(X.rows(), X.cols());
  for (Index d = 0; d < D; ++d) {
    for (Index i = 0; i < X.rows(); ++i) {
      const double g = grad_output(i, d);
      const double x = std::clamp(X(i, d), 0.0, 1.0);
      if (grad_input) {
        const double xc = std::clamp(x, kKumaraswamyEdge, 1.0 - kKumaraswamyEdge);
        const double u = std::pow(xc, av[d]);
        const double dTdx = av[d] * bv[d] * std::pow(xc, av[d] - 1.0) * std::pow(1.0 - u, bv[d] - 1.0);
        (*grad_input)(i, d) = g * dTdx;
      }
      if (grad_params && x > 0.0 && x < 1.0) {
        const double u = std::pow(x, av[d]);
        const double log1mu = std::log1p(-u);
        const double one_minus_u_b = std::exp(bv[d] * log1mu);
        // dT/dlog a = b (1-u)^(b-1) u ln u,   dT/dlog b = -b ln(1-u) (1-u)^b
        (*grad_params)[d] += g * bv[d] * (one_minus_u_b / (1.0 - u)) * u * std::log(u);
        (*grad_params)[D + d] += g * (-bv[d] * log1mu * one_minus_u_b);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Conditional rational-quadratic spline coupling stack

CrqsWarp::CrqsWarp(int dim, const CrqsConfig& config, std::uint64_t init_seed) : Warp(dim), config_(config) {
  require(dim >= 1, ErrorCode::invalid_argument, "crqs: dimension must be >= 1");
  require(config.bins >= 1 && config.layers >= 1 && config.hidden >= 1, ErrorCode::invalid_argument,
          "crqs: bins, layers and hidden width must be >= 1");
  const int R = raw_per_coord();
  const int H = config.hidden;
  Index offset = 0;
  for (int l = 0; l < config.layers; ++l) {
    Layer layer;
    if (dim == 1) {
      layer.transform = {0};
    } else {
      // Even layers pass even indices and transform odd ones; odd layers swap the roles.
      for (int d = 0; d < dim; ++d) ((d % 2 == l % 2) ? layer.pass : layer.transform).push_back(d);
    }
    const Index A = static_cast<Index>(layer.pass.size());
    const Index O = static_cast<Index>(layer.transform.size()) * R;
    layer.offset = offset;
    layer.size = A == 0 ? O : H * A + H + O * H + O;
    offset += layer.size;
    layers_.push_back(std::move(layer));
  }
  params_ = Vector::Zero(offset);
  Rng rng(init_seed);
  for (const auto& layer : layers_) {
    const Index A = static_cast<Index>(layer.pass.size());
    if (A == 0) continue;
    // Hidden layer ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); output layer left at zero.
    const double bound = 1.0 / std::sqrt(static_cast<double>(A));
    for (Index i = 0; i < H * A + H; ++i) params_[layer.offset + i] = rng.uniform(-bound, bound);
  }
}

void CrqsWarp::set_params(const Vector& params) {
  require(params.size() == params_.size(), ErrorCode::shape, "crqs: parameter size");
  params_ = params;
}

Matrix CrqsWarp::apply_layer(const Layer& layer, const Matrix& cur, Matrix* hidden_out, Matrix* dgdraw_out,
                             Matrix* dgdx_out) const {
  const int R = raw_per_coord();
  const int H = config_.hidden;
  const Index P = cur.rows();
  const Index A = static_cast<Index>(layer.pass.size());
  const Index B = static_cast<Index>(layer.transform.size());
  const Index O = B * R;
  Matrix raw(O, P);
  Matrix hidden;
  if (A == 0) {
    raw = params_.segment(layer.offset, O).replicate(1, P);
  } else {
    Eigen::Map<const Matrix> W1(params_.data() + layer.offset, H, A);
    Eigen::Map<const Vector> b1(params_.data() + layer.offset + H * A, H);
    Eigen::Map<const Matrix> W2(params_.data() + layer.offset + H * A + H, O, H);
    Eigen::Map<const Vector> b2(params_.data() + layer.offset + H * A + H + O * H, O);
    Matrix Zt(A, P);
    for (Index a = 0; a < A; ++a) Zt.row(a) = 2.0 * cur.col(layer.pass[a]).transpose().array() - 1.0;
    // tanh(a) = 1 - 2 / (exp(2a) + 1); Eigen vectorizes exp but not tanh for doubles.
    const Matrix pre = (W1 * Zt).colwise() + b1;
    hidden = 1.0 - 2.0 / ((2.0 * pre.array()).exp() + 1.0);
    raw = (W2 * hidden).colwise() + b2;
  }
  const bool record = dgdraw_out != nullptr;
  Matrix dgdraw, dgdx;
  if (record) {
    dgdraw.resize(O, P);
    dgdx.resize(B, P);
  }
  Matrix next = cur;
  RqsBatch batch;
  for (Index j = 0; j < B; ++j) {
    const int c = layer.transform[j];
    batch.prepare(raw, j * R, config_.bins);
    for (Index p = 0; p < P; ++p) {
      const std::span<double> grad = record ? std::span<double>(dgdraw.col(p).data() + j * R, R) : std::span<double>();
      const RqsValue v = rqs_eval(cur(p, c), batch.column(p), config_.bins, grad);
      next(p, c) = v.y;
      if (record) dgdx(j, p) = v.dydx;
    }
  }
  if (record) {
    *hidden_out = std::move(hidden);
    *dgdraw_out = std::move(dgdraw);
    *dgdx_out = std::move(dgdx);
  }
  return next;
}

Matrix CrqsWarp::forward(const Matrix& X, WarpTape* tape) const {
  check_input(X);
  Matrix cur = X;
  if (tape) {
    tape->input = X;
    tape->values.clear();
    tape->values.reserve(layers_.size() * 4);
  }
  for (const auto& layer : layers_) {
    if (tape) {
      Matrix hidden, dgdraw, dgdx;
      Matrix next = apply_layer(layer, cur, &hidden, &dgdraw, &dgdx);
      tape->values.push_back(std::move(cur));
      tape->values.push_back(std::move(hidden));
      tape->values.push_back(std::move(dgdraw));
      tape->values.push_back(std::move(dgdx));
      cur = std::move(next);
    } else {
      cur = apply_layer(layer, cur, nullptr, nullptr, nullptr);
    }
  }
  return cur;
}

Matrix CrqsWarp::forward_layer(std::size_t index, const Matrix& X) const {
  require(index < layers_.size(), ErrorCode::invalid_argument, "crqs: layer index out of range");
  check_input(X);
  return apply_layer(layers_[index], X, nullptr, nullptr, nullptr);
}

void CrqsWarp::backward(const WarpTape& tape, const Matrix& grad_output, Matrix* grad_input,
                        Vector* grad_params) const {
  require(tape.values.size() == layers_.size() * 4, ErrorCode::invalid_argument, "crqs: tape does not match warp");
  const int R = raw_per_coord();
  const int H = config_.hidden;
  Matrix G = grad_output;
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const auto& layer = layers_[li];
    const Matrix& in = tape.values[li * 4];
    const Matrix& hidden = tape.values[li * 4 + 1];
    const Matrix& dgdraw = tape.values[li * 4 + 2];
    const Matrix& dgdx = tape.values[li * 4 + 3];
    const Index P = in.rows();
    const Index A = static_cast<Index>(layer.pass.size());
    const Index B = static_cast<Index>(layer.transform.size());
    const Index O = B * R;

    Matrix graw(O, P);
    Matrix Gin = G;
    for (Index j = 0; j < B; ++j) {
      const int c = layer.transform[j];
      for (Index p = 0; p < P; ++p) {
        const double g = G(p, c);
        Gin(p, c) = g * dgdx(j, p);
        graw.block(j * R, p, R, 1) = g * dgdraw.block(j * R, p, R, 1);
      }
    }
    if (A == 0) {
      if (grad_params) grad_params->segment(layer.offset, O) += graw.rowwise().sum();
    } else {
      Eigen::Map<const Matrix> W1(params_.data() + layer.offset, H, A);
      Eigen::Map<const Matrix> W2(params_.data() + layer.offset + H * A + H, O, H);
      const Matrix gpre = (W2.transpose() * graw).array() * (1.0 - hidden.array().square());
      if (grad_params) {
        Matrix Z(P, A);
        for (Index a = 0; a < A; ++a) Z.col(a) = 2.0 * in.col(layer.pass[a]).array() - 1.0;
        Eigen::Map<Matrix> gW1(grad_params->data() + layer.offset, H, A);
        Eigen::Map<Vector> gb1(grad_params->data() + layer.offset + H * A, H);
        Eigen::Map<Matrix> gW2(grad_params->data() + layer.offset + H * A + H, O, H);
        Eigen::Map<Vector> gb2(grad_params->data() + layer.offset + H * A + H + O * H, O);
        gW2.noalias() += graw * hidden.transpose();
        gb2 += graw.rowwise().sum();
        gW1.noalias() += gpre * Z;
        gb1 += gpre.rowwise().sum();
      }
      const Matrix gz = (W1.transpose() * gpre).transpose();  // P x A
      for (Index a = 0; a < A; ++a) Gin.col(layer.pass[a]) += 2.0 * gz.col(a);
    }
    G = std::move(Gin);
  }
  if (grad_input) *grad_input = std::move(G);
}

std::string CrqsWarp::serialize() const {
  json j;
  j["kind"] = "crqs";
  j["dim"] = dim();
  j["bins"] = config_.bins;
  j["hidden"] = config_.hidden;
  json layers = json::array();
  for (const auto& layer : layers_) layers.push_back({{"pass", layer.pass}, {"transform", layer.transform}});
  j["layers"] = layers;
  j["params"] = to_std(params_);
  return j.dump();
}

// ---------------------------------------------------------------------------

std::unique_ptr<Warp> make_warp(WarpKind kind, int dim, const CrqsConfig& crqs, std::uint64_t init_seed) {
  switch (kind) {
    case WarpKind::identity: return std::make_unique<IdentityWarp>(dim);
    case WarpKind::kumaraswamy: return std::make_unique<KumaraswamyWarp>(dim);
    case WarpKind::crqs: return std::make_unique<CrqsWarp>(dim, crqs, init_seed);
  }
  fail(ErrorCode::invalid_argument, "make_warp: unknown kind");
}

std::unique_ptr<Warp> deserialize_warp(std::string_view blob) {
  json j;
  try {
    j = json::parse(blob);
  } catch (const json::exception& e) {
    fail(ErrorCode::config, std::string("warp blob: ") + e.what());
  }
  try {
    const WarpKind kind = warp_kind_from_string(j.at("kind").get<std::string>());
    const int dim = j.at("dim").get<int>();
    CrqsConfig cfg;
    if (kind == WarpKind::crqs) {
      cfg.bins = j.at("bins").get<int>();
      cfg.hidden = j.at("hidden").get<int>();
      cfg.layers = static_cast<int>(j.at("layers").size());
    }
    auto warp = make_warp(kind, dim, cfg, 0);
    if (kind == WarpKind::crqs) {
      const auto& layers = static_cast<const CrqsWarp&>(*warp).layers();
      for (std::size_t l = 0; l < layers.size(); ++l) {
        require(j["layers"][l].at("pass").get<std::vector<int>>() == layers[l].pass &&
                    j["layers"][l].at("transform").get<std::vector<int>>() == layers[l].transform,
                ErrorCode::config, "warp blob: unsupported layer partition");
      }
    }
    const auto p = j.at("params").get<std::vector<double>>();
    warp->set_params(Eigen::Map<const Vector>(p.data(), static_cast<Index>(p.size())));
    return warp;
  } catch (const json::exception& e) {
    fail(ErrorCode::config, std::string("warp blob: ") + e.what());
  }
}

Matrix warp_param_jacobian(const Warp& warp, const Vector& x) {
  const int D = warp.dim();
  WarpTape tape;
  warp.forward(x.transpose(), &tape);
  Matrix J(D, warp.num_params());
  for (int d = 0; d < D; ++d) {
    Matrix seed = Matrix::Zero(1, D);
    seed(0, d) = 1.0;
    Vector g = Vector::Zero(warp.num_params());
    warp.backward(tape, seed, nullptr, &g);
    J.row(d) = g.transpose();
  }
  return J;
}

Matrix warp_input_jacobian(const Warp& warp, const Vector& x) {
  const int D = warp.dim();
  WarpTape tape;
  warp.forward(x.transpose(), &tape);
  Matrix J(D, D);
  for (int d = 0; d < D; ++d) {
    Matrix seed = Matrix::Zero(1, D);
    seed(0, d) = 1.0;
    Matrix g;
    warp.backward(tape, seed, &g, nullptr);
    J.row(d) = g.row(0);
  }
  return J;
}

}  // namespace warpal
