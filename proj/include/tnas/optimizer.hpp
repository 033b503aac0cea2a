#ifndef TNAS_OPTIMIZER_HPP_
#define TNAS_OPTIMIZER_HPP_

#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

namespace tnas {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adaptive-moment first-order optimizer with bias correction.
template <typename Scalar>
class Adam {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Adam() = default;
  Adam(AdamConfig cfg, Eigen::Index size)
      : cfg_(cfg), m_(Vector::Zero(size)), v_(Vector::Zero(size)) {}

  // Applies one descent step on `params` and returns the largest absolute
  // parameter change.
  Scalar step(Eigen::Ref<Vector> params, const Vector& grad) {
    ++t_;
    const Scalar b1 = static_cast<Scalar>(cfg_.beta1);
    const Scalar b2 = static_cast<Scalar>(cfg_.beta2);
    m_ = b1 * m_ + (Scalar(1) - b1) * grad;
    v_ = b2 * v_ + (Scalar(1) - b2) * grad.cwiseAbs2();
    const Scalar c1 = Scalar(1) - std::pow(b1, static_cast<Scalar>(t_));
    const Scalar c2 = Scalar(1) - std::pow(b2, static_cast<Scalar>(t_));
    const Scalar lr = static_cast<Scalar>(cfg_.learning_rate);
    const Scalar eps = static_cast<Scalar>(cfg_.epsilon);
    const Vector delta =
        -lr * (m_ / c1).cwiseQuotient(((v_ / c2).cwiseSqrt().array() + eps).matrix());
    params += delta;
    return delta.size() == 0 ? Scalar(0) : delta.cwiseAbs().maxCoeff();
  }

  const AdamConfig& config() const { return cfg_; }
  const Vector& first_moment() const { return m_; }
  const Vector& second_moment() const { return v_; }
  std::int64_t steps() const { return t_; }

  void restore(Vector m, Vector v, std::int64_t t) {
    m_ = std::move(m);
    v_ = std::move(v);
    t_ = t;
  }

 private:
  AdamConfig cfg_;
  Vector m_;
  Vector v_;
  std::int64_t t_ = 0;
};

// Rescales `grad` in place so its Euclidean norm is at most `max_norm`;
// returns the norm before clipping.
template <typename Derived>
typename Derived::Scalar clip_global_norm(Eigen::MatrixBase<Derived>& grad,
                                          typename Derived::Scalar max_norm) {
  const auto norm = grad.norm();
  if (max_norm > 0 && norm > max_norm) grad *= max_norm / norm;
  return norm;
}

}  // namespace tnas

#endif  // TNAS_OPTIMIZER_HPP_
