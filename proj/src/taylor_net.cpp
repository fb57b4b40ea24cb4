#include "symtaylor/taylor_net.hpp"

#include <array>
#include <cmath>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

namespace symtaylor {

namespace {

const std::array<double, kMaxTaylorOrder + 1>& factorials() {
  static const auto table = [] {
    std::array<double, kMaxTaylorOrder + 1> f{};
    f[0] = 1.0;
    for (int i = 1; i <= kMaxTaylorOrder; ++i) f[i] = f[i - 1] * i;
    return f;
  }();
  return table;
}

void check_order(int order) {
  if (order < 1 || order > kMaxTaylorOrder) {
    throw ContractError("Taylor order " + std::to_string(order) + " outside [1, " +
                        std::to_string(kMaxTaylorOrder) + "]");
  }
}

// f_i(z), elementwise.
Vec activate(Activation act, int order, const Vec& z) {
  if (act == Activation::relu) return z.cwiseMax(0.0);
  Vec out(z.size());
  for (Eigen::Index k = 0; k < z.size(); ++k) out[k] = taylor_term(order, z[k]);
  return out;
}

// f_i'(z), elementwise. d/dx x^i/i! = x^(i-1)/(i-1)!.
Vec activate_derivative(Activation act, int order, const Vec& z) {
  Vec out(z.size());
  if (act == Activation::relu) {
    for (Eigen::Index k = 0; k < z.size(); ++k) out[k] = z[k] > 0.0 ? 1.0 : 0.0;
    return out;
  }
  if (order == 1) return Vec::Ones(z.size());
  for (Eigen::Index k = 0; k < z.size(); ++k) out[k] = taylor_term(order - 1, z[k]);
  return out;
}

void check_input(const TaylorGradNet& net, const Vec& x) {
  if (x.size() != net.dim) {
    throw ContractError("TaylorGradNet: input length " + std::to_string(x.size()) +
                        ", expected " + std::to_string(net.dim));
  }
}

}  // namespace

std::string_view to_string(Activation a) { return a == Activation::taylor ? "taylor" : "relu"; }

Activation parse_activation(std::string_view name) {
  if (name == "taylor") return Activation::taylor;
  if (name == "relu") return Activation::relu;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

double taylor_term(int order, double x) {
  check_order(order);
  double power = 1.0;
  for (int k = 0; k < order; ++k) power *= x;
  const double value = power / factorials()[order];
  if (!std::isfinite(value)) {
    throw NumericError("taylor_term: overflow for order " + std::to_string(order));
  }
  return value;
}

TaylorGradNet TaylorGradNet::zeros(int dim, int hidden, int terms, Activation activation) {
  if (dim < 1 || hidden < 1 || terms < 1) {
    throw ContractError("TaylorGradNet: dim, hidden and terms must be >= 1");
  }
  if (activation == Activation::taylor) check_order(terms);
  TaylorGradNet net;
  net.dim = dim;
  net.hidden = hidden;
  net.terms = terms;
  net.activation = activation;
  net.A.assign(terms, Mat::Zero(hidden, dim));
  net.B.assign(terms, Mat::Zero(hidden, dim));
  net.bias = Vec::Zero(dim);
  return net;
}

void TaylorGradNet::validate() const {
  if (dim < 1 || hidden < 1 || terms < 1) throw ContractError("TaylorGradNet: bad shape");
  if (activation == Activation::taylor) check_order(terms);
  if (static_cast<int>(A.size()) != terms || static_cast<int>(B.size()) != terms) {
    throw ContractError("TaylorGradNet: expected " + std::to_string(terms) + " term pairs");
  }
  for (int i = 0; i < terms; ++i) {
    if (A[i].rows() != hidden || A[i].cols() != dim || B[i].rows() != hidden ||
        B[i].cols() != dim) {
      throw ContractError("TaylorGradNet: term " + std::to_string(i + 1) + " has wrong shape");
    }
  }
  if (bias.size() != dim) throw ContractError("TaylorGradNet: bias length mismatch");
}

long TaylorGradNet::parameter_count() const {
  return 2L * terms * hidden * dim + dim;
}

TaylorGradNet init_net(int dim, int hidden, int terms, std::uint64_t seed,
                       Activation activation) {
  auto net = TaylorGradNet::zeros(dim, hidden, terms, activation);
  std::mt19937_64 rng(seed);
  for (int i = 0; i < terms; ++i) {
    const int order = i + 1;
    const double sd = std::sqrt(2.0 / (static_cast<double>(dim) * hidden * (order + 1)));
    std::normal_distribution<double> normal(0.0, sd);
    for (auto* m : {&net.A[i], &net.B[i]}) {
      for (Eigen::Index c = 0; c < m->cols(); ++c) {
        for (Eigen::Index r = 0; r < m->rows(); ++r) (*m)(r, c) = normal(rng);
      }
    }
  }
  return net;
}

Vec forward(const TaylorGradNet& net, const Vec& x) {
  check_input(net, x);
  Vec out = net.bias;
  for (int i = 0; i < net.terms; ++i) {
    const int order = i + 1;
    out.noalias() += net.A[i].transpose() * activate(net.activation, order, net.A[i] * x);
    out.noalias() -= net.B[i].transpose() * activate(net.activation, order, net.B[i] * x);
  }
  if (!out.allFinite()) throw NumericError("TaylorGradNet: non-finite output");
  return out;
}

Mat jacobian(const TaylorGradNet& net, const Vec& x) {
  check_input(net, x);
  Mat jac = Mat::Zero(net.dim, net.dim);
  for (int i = 0; i < net.terms; ++i) {
    const int order = i + 1;
    const Vec la = activate_derivative(net.activation, order, net.A[i] * x);
    const Vec lb = activate_derivative(net.activation, order, net.B[i] * x);
    jac.noalias() += net.A[i].transpose() * la.asDiagonal() * net.A[i];
    jac.noalias() -= net.B[i].transpose() * lb.asDiagonal() * net.B[i];
  }
  return jac;
}

Vec pack_params(const TaylorGradNet& net) {
  Vec flat(net.parameter_count());
  Eigen::Index at = 0;
  const Eigen::Index block = static_cast<Eigen::Index>(net.hidden) * net.dim;
  for (const auto* mats : {&net.A, &net.B}) {
    for (const auto& m : *mats) {
      flat.segment(at, block) = m.reshaped();
      at += block;
    }
  }
  flat.segment(at, net.dim) = net.bias;
  return flat;
}

void unpack_params(TaylorGradNet& net, const Vec& flat) {
  if (flat.size() != net.parameter_count()) {
    throw ContractError("unpack_params: expected " + std::to_string(net.parameter_count()) +
                        " values, got " + std::to_string(flat.size()));
  }
  Eigen::Index at = 0;
  const Eigen::Index block = static_cast<Eigen::Index>(net.hidden) * net.dim;
  for (auto* mats : {&net.A, &net.B}) {
    for (auto& m : *mats) {
      m.reshaped() = flat.segment(at, block);
      at += block;
    }
  }
  net.bias = flat.segment(at, net.dim);
}

// For one term y = A^T h, h = f(z), z = A x with output cotangent g:
//   dA += h g^T + (f'(z) .* (A g)) x^T,   dx += A^T (f'(z) .* (A g)).
Vec vjp(const TaylorGradNet& net, const Vec& x, const Vec& g, Vec& param_grad) {
  check_input(net, x);
  if (g.size() != net.dim) throw ContractError("vjp: cotangent length mismatch");
  if (param_grad.size() != net.parameter_count()) {
    throw ContractError("vjp: parameter gradient has wrong length");
  }
  Vec dx = Vec::Zero(net.dim);
  const Eigen::Index block = static_cast<Eigen::Index>(net.hidden) * net.dim;
  const Eigen::Index b_offset = block * net.terms;
  for (int i = 0; i < net.terms; ++i) {
    const int order = i + 1;
    for (int side = 0; side < 2; ++side) {
      const Mat& W = side == 0 ? net.A[i] : net.B[i];
      const double sign = side == 0 ? 1.0 : -1.0;
      const Vec z = W * x;
      const Vec h = activate(net.activation, order, z);
      const Vec dz = activate_derivative(net.activation, order, z).cwiseProduct(W * g);
      auto dW = param_grad.segment(side * b_offset + i * block, block).reshaped(net.hidden,
                                                                                net.dim);
      dW.noalias() += sign * (h * g.transpose() + dz * x.transpose());
      dx.noalias() += sign * (W.transpose() * dz);
    }
  }
  param_grad.tail(net.dim) += g;
  return dx;
}

nlohmann::json to_json(const TaylorGradNet& net) {
  auto matrices = [](const std::vector<Mat>& mats) {
    auto arr = nlohmann::json::array();
    for (const auto& m : mats) {
      auto rows = nlohmann::json::array();
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        auto row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
      }
      arr.push_back(std::move(rows));
    }
    return arr;
  };
  nlohmann::json doc;
  doc["dim"] = net.dim;
  doc["hidden"] = net.hidden;
  doc["terms"] = net.terms;
  doc["activation"] = std::string(to_string(net.activation));
  doc["A"] = matrices(net.A);
  doc["B"] = matrices(net.B);
  doc["bias"] = std::vector<double>(net.bias.begin(), net.bias.end());
  return doc;
}

TaylorGradNet net_from_json(const nlohmann::json& doc) {
  try {
    auto net = TaylorGradNet::zeros(doc.at("dim").get<int>(), doc.at("hidden").get<int>(),
                                    doc.at("terms").get<int>(),
                                    parse_activation(doc.at("activation").get<std::string>()));
    auto read = [&](const nlohmann::json& arr, std::vector<Mat>& mats) {
      if (arr.size() != mats.size()) throw ConfigError("net json: wrong number of terms");
      for (std::size_t i = 0; i < mats.size(); ++i) {
        const auto& rows = arr[i];
        if (rows.size() != static_cast<std::size_t>(net.hidden)) {
          throw ConfigError("net json: wrong row count");
        }
        for (int r = 0; r < net.hidden; ++r) {
          if (rows[r].size() != static_cast<std::size_t>(net.dim)) {
            throw ConfigError("net json: wrong column count");
          }
          for (int c = 0; c < net.dim; ++c) mats[i](r, c) = rows[r][c].get<double>();
        }
      }
    };
    read(doc.at("A"), net.A);
    read(doc.at("B"), net.B);
    const auto bias = doc.at("bias").get<std::vector<double>>();
    if (bias.size() != static_cast<std::size_t>(net.dim)) {
      throw ConfigError("net json: bias length mismatch");
    }
    net.bias = Eigen::Map<const Vec>(bias.data(), net.dim);
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("net json: ") + e.what());
  }
}

}  // namespace symtaylor
