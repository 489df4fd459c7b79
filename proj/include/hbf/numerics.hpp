#ifndef HBF_NUMERICS_HPP
#define HBF_NUMERICS_HPP

#include <array>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace hbf {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;
using Complex = std::complex<double>;

/// Caller broke a documented precondition (dimension mismatch, bad argument).
struct ContractViolation : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Linear system is numerically singular or rank deficient; the caller is
/// expected to redraw its random inputs or abort.
struct SingularSystemError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Deterministic random stream: xoshiro256++ seeded through splitmix64.
///
/// The integer sequence is bit-identical for a given seed on any platform.
/// Floating-point derivations are fixed as follows and never change:
///   - uniform():  (next_u64() >> 11) * 2^-53, in [0, 1)
///   - normal():   Box-Muller (trig form). Each pair of normals consumes
///                 exactly two uniforms; the cosine branch is returned first
///                 and the sine branch is cached for the next call.
///   - cnormal(v): real part drawn before imaginary part, each N(0, v/2).
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Independent stream derived from (seed, stream id). Streams with
  /// distinct ids are statistically independent.
  static Rng derive(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();
  double uniform();
  double uniform(double lo, double hi);
  double normal();
  double normal(double mean, double stddev);
  /// Circularly symmetric complex Gaussian with E|z|^2 = variance.
  Complex cnormal(double variance);

 private:
  std::array<std::uint64_t, 4> state_{};
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

/// a*b with an explicit dimension check.
CMatrix matmul(const CMatrix& a, const CMatrix& b);

/// Solves a*X = b for Hermitian positive definite a via Cholesky, falling
/// back to a pivoted LDL^H factorization. Throws SingularSystemError when
/// the estimated condition number exceeds 1e12 or the solve is non-finite.
CMatrix solve_hermitian(const CMatrix& a, const CMatrix& b);

/// Modified Gram-Schmidt. Returns orthonormal vectors spanning the input.
/// Throws SingularSystemError on rank deficiency (elimination residual
/// below 1e-12 relative to the input scale).
std::vector<CVector> gram_schmidt_orthogonalize(const std::vector<CVector>& vectors);

/// Frobenius norm of a - b.
double frob_norm_diff(const CMatrix& a, const CMatrix& b);

}  // namespace hbf

#endif
