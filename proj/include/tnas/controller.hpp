#ifndef TNAS_CONTROLLER_HPP_
#define TNAS_CONTROLLER_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tnas {

struct ControllerConfig {
  int hidden_size = 100;
  int embedding_size = 32;
  double init_range = 0.1;
  // Zero output heads make the untrained policy exactly uniform over every
  // unmasked choice.
  bool zero_heads = true;
  std::uint64_t seed = 0;
  bool operator==(const ControllerConfig&) const = default;
};

// One decision slot: which categorical head to use and how many leading
// choices of that head are selectable (the rest are masked out).
struct Step {
  int family = 0;
  int valid = 0;
};
using Schedule = std::vector<Step>;

/// Recurrent policy over a fixed decision schedule.
///
/// A single gated recurrent cell is driven by the embedding of the previous
/// decision (a learned start token for the first step) and feeds one linear
/// head per decision family. All parameters live in one flat vector so that
/// optimizers and finite-difference checks can treat them uniformly.
///
/// Cell update, with x the input embedding and h the previous state:
///   z = sigmoid(Wx_z x + Wh_z h + b_z)
///   r = sigmoid(Wx_r x + Wh_r h + b_r)
///   n = tanh(Wx_n x + r .* (Wh_n h) + b_n)
///   h' = (1 - z) .* n + z .* h
template <typename Scalar>
class Controller {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using MatrixMap = Eigen::Map<Matrix>;
  using ConstMatrixMap = Eigen::Map<const Matrix>;
  using VectorMap = Eigen::Map<Vector>;
  using ConstVectorMap = Eigen::Map<const Vector>;

  // Forward activations of one step, kept for back-propagation.
  struct StepRecord {
    int family = 0;
    int valid = 0;
    int choice = 0;
    int input_family = -1;  // -1: start token
    int input_choice = -1;
    Vector x, h_prev, z, r, n, hn, h;
    Vector probs;  // full head width, zero where masked
    Scalar log_prob = 0;
    Scalar entropy = 0;
  };
  using Tape = std::vector<StepRecord>;

  Controller(ControllerConfig cfg, std::vector<int> family_sizes)
      : cfg_(cfg), sizes_(std::move(family_sizes)) {
    if (cfg_.hidden_size < 1 || cfg_.embedding_size < 1)
      throw std::invalid_argument("controller sizes must be positive");
    for (int s : sizes_)
      if (s < 1) throw std::invalid_argument("decision family with no choices");
    layout();
    initialize();
  }

  const ControllerConfig& config() const { return cfg_; }
  const std::vector<int>& family_sizes() const { return sizes_; }
  Vector& parameters() { return theta_; }
  const Vector& parameters() const { return theta_; }
  Eigen::Index num_parameters() const { return theta_.size(); }

  void initialize() {
    theta_.resize(total_);
    std::mt19937_64 rng(cfg_.seed);
    std::uniform_real_distribution<double> u(-cfg_.init_range, cfg_.init_range);
    for (Eigen::Index i = 0; i < theta_.size(); ++i) theta_[i] = static_cast<Scalar>(u(rng));
    if (cfg_.zero_heads) {
      for (std::size_t f = 0; f < sizes_.size(); ++f) {
        head_w(theta_, f).setZero();
        head_b(theta_, f).setZero();
      }
    }
  }

  // Draws every decision from the masked categorical of its step.
  template <class Urng>
  Tape sample(const Schedule& schedule, Urng& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return run(schedule, [&](const Vector& probs, int valid, std::size_t) {
      const double target = u(rng);
      double acc = 0.0;
      int last = 0;
      for (int i = 0; i < valid; ++i) {
        if (probs[i] <= Scalar(0)) continue;
        last = i;
        acc += static_cast<double>(probs[i]);
        if (target < acc) return i;
      }
      return last;
    });
  }

  // Teacher-forced pass over given choices.
  Tape evaluate(const Schedule& schedule, std::span<const int> choices) const {
    if (choices.size() != schedule.size())
      throw std::invalid_argument("choice count does not match the schedule");
    return run(schedule, [&](const Vector&, int valid, std::size_t t) {
      const int c = choices[t];
      if (c < 0 || c >= valid)
        throw std::invalid_argument("choice " + std::to_string(c) + " is masked at step " +
                                    std::to_string(t));
      return c;
    });
  }

  // Most likely choice per step; ties go to the lowest index.
  Tape greedy(const Schedule& schedule) const {
    return run(schedule, [](const Vector& probs, int valid, std::size_t) {
      int best = 0;
      for (int i = 1; i < valid; ++i)
        if (probs[i] > probs[best]) best = i;
      return best;
    });
  }

  // Gradient of  sum_t d_log_prob[t] * log_prob_t + d_entropy[t] * entropy_t
  // with respect to the flat parameter vector, by back-propagation through time.
  Vector backward(const Tape& tape, std::span<const Scalar> d_log_prob,
                  std::span<const Scalar> d_entropy) const {
    const int H = cfg_.hidden_size;
    Vector grad = Vector::Zero(total_);
    const auto Wx = wx(theta_);
    const auto Wh = wh(theta_);
    auto gWx = wx(grad);
    auto gWh = wh(grad);
    auto gb = bias(grad);

    Vector dh_next = Vector::Zero(H);
    for (std::size_t k = tape.size(); k-- > 0;) {
      const StepRecord& s = tape[k];
      const auto f = static_cast<std::size_t>(s.family);

      // d(objective)/d(logits), restricted to the selectable prefix
      Vector dlogits = Vector::Zero(sizes_[f]);
      for (int i = 0; i < s.valid; ++i) {
        const Scalar p = s.probs[i];
        Scalar g = -d_log_prob[k] * p;
        if (i == s.choice) g += d_log_prob[k];
        if (p > Scalar(0)) g += -d_entropy[k] * p * (std::log(p) + s.entropy);
        dlogits[i] = g;
      }
      head_w(grad, f).noalias() += dlogits * s.h.transpose();
      head_b(grad, f) += dlogits;

      Vector dh = head_w(theta_, f).transpose() * dlogits + dh_next;

      const Vector ones = Vector::Ones(H);
      const Vector dn = dh.cwiseProduct(ones - s.z);
      const Vector dz = dh.cwiseProduct(s.h_prev - s.n);
      Vector dh_prev = dh.cwiseProduct(s.z);

      const Vector da_n = dn.cwiseProduct(ones - s.n.cwiseProduct(s.n));
      const Vector dr = da_n.cwiseProduct(s.hn);
      const Vector da_z = dz.cwiseProduct(s.z.cwiseProduct(ones - s.z));
      const Vector da_r = dr.cwiseProduct(s.r.cwiseProduct(ones - s.r));

      Vector da(3 * H);
      da << da_z, da_r, da_n;
      Vector dhh(3 * H);
      dhh << da_z, da_r, da_n.cwiseProduct(s.r);

      gWx.noalias() += da * s.x.transpose();
      gb += da;
      gWh.noalias() += dhh * s.h_prev.transpose();
      dh_prev.noalias() += Wh.transpose() * dhh;

      const Vector dx = Wx.transpose() * da;
      if (s.input_family < 0) {
        start_input(grad) += dx;
      } else {
        embedding(grad, static_cast<std::size_t>(s.input_family)).col(s.input_choice) += dx;
      }
      dh_next = dh_prev;
    }
    start_state(grad) += dh_next;
    return grad;
  }

  static Scalar total_log_prob(const Tape& tape) {
    Scalar sum = 0;
    for (const auto& s : tape) sum += s.log_prob;
    return sum;
  }

 private:
  struct Block {
    Eigen::Index offset = 0;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
  };

  void layout() {
    const Eigen::Index H = cfg_.hidden_size;
    const Eigen::Index E = cfg_.embedding_size;
    Eigen::Index at = 0;
    auto take = [&](Eigen::Index rows, Eigen::Index cols) {
      Block b{at, rows, cols};
      at += rows * cols;
      return b;
    };
    h0_ = take(H, 1);
    x0_ = take(E, 1);
    for (int s : sizes_) emb_.push_back(take(E, s));
    wx_ = take(3 * H, E);
    wh_ = take(3 * H, H);
    b_ = take(3 * H, 1);
    for (int s : sizes_) {
      hw_.push_back(take(s, H));
      hb_.push_back(take(s, 1));
    }
    total_ = at;
  }

  static MatrixMap view(Vector& v, const Block& b) {
    return MatrixMap(v.data() + b.offset, b.rows, b.cols);
  }
  static ConstMatrixMap view(const Vector& v, const Block& b) {
    return ConstMatrixMap(v.data() + b.offset, b.rows, b.cols);
  }
  static VectorMap vview(Vector& v, const Block& b) {
    return VectorMap(v.data() + b.offset, b.rows);
  }
  static ConstVectorMap vview(const Vector& v, const Block& b) {
    return ConstVectorMap(v.data() + b.offset, b.rows);
  }

  auto start_state(Vector& v) const { return vview(v, h0_); }
  auto start_state(const Vector& v) const { return vview(v, h0_); }
  auto start_input(Vector& v) const { return vview(v, x0_); }
  auto start_input(const Vector& v) const { return vview(v, x0_); }
  auto embedding(Vector& v, std::size_t f) const { return view(v, emb_[f]); }
  auto embedding(const Vector& v, std::size_t f) const { return view(v, emb_[f]); }
  auto wx(Vector& v) const { return view(v, wx_); }
  auto wx(const Vector& v) const { return view(v, wx_); }
  auto wh(Vector& v) const { return view(v, wh_); }
  auto wh(const Vector& v) const { return view(v, wh_); }
  auto bias(Vector& v) const { return vview(v, b_); }
  auto bias(const Vector& v) const { return vview(v, b_); }
  auto head_w(Vector& v, std::size_t f) const { return view(v, hw_[f]); }
  auto head_w(const Vector& v, std::size_t f) const { return view(v, hw_[f]); }
  auto head_b(Vector& v, std::size_t f) const { return vview(v, hb_[f]); }
  auto head_b(const Vector& v, std::size_t f) const { return vview(v, hb_[f]); }

  static Vector sigmoid(const Vector& a) {
    return a.unaryExpr([](Scalar x) { return Scalar(1) / (Scalar(1) + std::exp(-x)); });
  }

  template <class Choose>
  Tape run(const Schedule& schedule, Choose&& choose) const {
    const int H = cfg_.hidden_size;
    const auto Wx = wx(theta_);
    const auto Wh = wh(theta_);
    const auto b = bias(theta_);

    Tape tape;
    tape.reserve(schedule.size());
    Vector h = start_state(theta_);
    int prev_family = -1;
    int prev_choice = -1;
    for (std::size_t t = 0; t < schedule.size(); ++t) {
      const Step& step = schedule[t];
      if (step.family < 0 || step.family >= static_cast<int>(sizes_.size()))
        throw std::invalid_argument("unknown decision family");
      const auto f = static_cast<std::size_t>(step.family);
      if (step.valid < 1 || step.valid > sizes_[f])
        throw std::invalid_argument("step mask exceeds head width");

      StepRecord s;
      s.family = step.family;
      s.valid = step.valid;
      s.input_family = prev_family;
      s.input_choice = prev_choice;
      s.x = prev_family < 0 ? Vector(start_input(theta_))
                            : Vector(embedding(theta_, static_cast<std::size_t>(prev_family))
                                         .col(prev_choice));
      s.h_prev = h;

      const Vector a = Wx * s.x + b;
      const Vector hh = Wh * h;
      s.z = sigmoid(a.head(H) + hh.head(H));
      s.r = sigmoid(a.segment(H, H) + hh.segment(H, H));
      s.hn = hh.tail(H);
      s.n = (a.tail(H) + s.r.cwiseProduct(s.hn)).array().tanh().matrix();
      s.h = (Vector::Ones(H) - s.z).cwiseProduct(s.n) + s.z.cwiseProduct(h);

      const Vector logits = head_w(theta_, f) * s.h + head_b(theta_, f);
      const Scalar top = logits.head(step.valid).maxCoeff();
      Vector log_probs = Vector::Constant(sizes_[f], -std::numeric_limits<Scalar>::infinity());
      Scalar norm = 0;
      for (int i = 0; i < step.valid; ++i) norm += std::exp(logits[i] - top);
      const Scalar log_norm = top + std::log(norm);
      s.probs = Vector::Zero(sizes_[f]);
      s.entropy = 0;
      for (int i = 0; i < step.valid; ++i) {
        log_probs[i] = logits[i] - log_norm;
        s.probs[i] = std::exp(log_probs[i]);
        s.entropy -= s.probs[i] * log_probs[i];
      }

      s.choice = choose(s.probs, step.valid, t);
      s.log_prob = log_probs[s.choice];
      h = s.h;
      prev_family = step.family;
      prev_choice = s.choice;
      tape.push_back(std::move(s));
    }
    return tape;
  }

  ControllerConfig cfg_;
  std::vector<int> sizes_;
  Block h0_, x0_, wx_, wh_, b_;
  std::vector<Block> emb_, hw_, hb_;
  Eigen::Index total_ = 0;
  Vector theta_;
};

}  // namespace tnas

#endif  // TNAS_CONTROLLER_HPP_
