#include "oid/nn/optimizer.hpp"

#include <cmath>

namespace oid::nn {

Adam::Adam(ParameterRefs params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
  for (const auto* p : params_) {
    m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

void Adam::step(const Gradients& grads, double lr) {
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Parameter* p = params_[k];
    if (!p->trainable) continue;
    const Matrix* g = grads.find(p);
    if (g) {
      m_[k] = b1 * m_[k] + (1.0 - b1) * *g;
      v_[k] = b2 * v_[k] + (1.0 - b2) * g->cwiseAbs2();
    } else {
      m_[k] *= b1;
      v_[k] *= b2;
    }
    p->value.array() -=
        lr * (m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + config_.epsilon);
  }
}

double apply_update(Adam& optimizer, Gradients& grads, double lr, double clip_norm, double l2) {
  if (l2 > 0.0) {
    for (auto* p : optimizer.parameters())
      if (p->trainable) grads.add(p, p->value, l2);
  }
  const double norm = std::sqrt(grads.squared_norm());
  if (clip_norm > 0.0 && norm > clip_norm) grads.scale(clip_norm / norm);
  optimizer.step(grads, lr);
  return norm;
}

double decayed_learning_rate(double lr, double decay, int epoch) {
  return lr / (1.0 + decay * static_cast<double>(epoch));
}

}  // namespace oid::nn
