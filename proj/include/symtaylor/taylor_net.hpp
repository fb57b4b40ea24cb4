#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "symtaylor/core.hpp"

namespace symtaylor {

enum class Activation { taylor, relu };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

/// Highest Taylor order supported by `taylor_term`.
inline constexpr int kMaxTaylorOrder = 30;

/// x^i / i!. Throws NumericError when the value overflows.
double taylor_term(int order, double x);

/// Symmetric gradient network
///
///   out(x) = sum_i [ A_i^T f_i(A_i x) - B_i^T f_i(B_i x) ] + bias,
///
/// with f_i(x) = x^i / i! (or max(0, x) for the ReLU variant). Each term has
/// Jacobian A_i^T diag(f_i'(A_i x)) A_i, so the whole Jacobian is symmetric.
struct TaylorGradNet {
  int dim = 0;
  int hidden = 0;
  int terms = 0;
  Activation activation = Activation::taylor;
  std::vector<Mat> A;  // terms x (hidden x dim)
  std::vector<Mat> B;  // terms x (hidden x dim)
  Vec bias;            // dim

  /// All-zero network of the given shape.
  static TaylorGradNet zeros(int dim, int hidden, int terms,
                             Activation activation = Activation::taylor);

  void validate() const;

  /// Number of scalar parameters: 2 * terms * hidden * dim + dim.
  long parameter_count() const;
};

/// Entries of A_i and B_i drawn from Normal(0, sd_i) with
/// sd_i = sqrt(2 / (dim * hidden * (i + 1))); zero bias.
TaylorGradNet init_net(int dim, int hidden, int terms, std::uint64_t seed,
                       Activation activation = Activation::taylor);

/// Throws NumericError on non-finite output.
Vec forward(const TaylorGradNet& net, const Vec& x);

/// d forward / dx. For ReLU the a.e. derivative with 0 at the kink.
Mat jacobian(const TaylorGradNet& net, const Vec& x);

/// Parameters flattened in the order A_1..A_M, B_1..B_M (each column-major),
/// then bias.
Vec pack_params(const TaylorGradNet& net);
void unpack_params(TaylorGradNet& net, const Vec& flat);

/// Reverse-mode product with a cotangent `g` on the output:
/// accumulates g^T d out / d theta into `param_grad` (packed layout) and
/// returns g^T d out / dx.
Vec vjp(const TaylorGradNet& net, const Vec& x, const Vec& g, Vec& param_grad);

nlohmann::json to_json(const TaylorGradNet& net);
TaylorGradNet net_from_json(const nlohmann::json& doc);

}  // namespace symtaylor
