#include "inornet/optimizer.hpp"

#include <cmath>

namespace inornet {

void Adam::reset() {
  t_ = 0;
  m_.clear();
  v_.clear();
}

void Adam::step(ParameterSet& params, const std::vector<Mat>& grads) {
  ++t_;
  m_.resize(params.size());
  v_.resize(params.size());
  const double c1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params[i];
    if (p.group != group_ || i >= grads.size() || grads[i].size() == 0) continue;
    const Mat g = grads[i] + opts_.weight_decay * p.value;
    if (m_[i].rows() != p.value.rows() || m_[i].cols() != p.value.cols()) {
      m_[i] = Mat::Zero(p.value.rows(), p.value.cols());
      v_[i] = Mat::Zero(p.value.rows(), p.value.cols());
    }
    m_[i] = opts_.beta1 * m_[i] + (1.0 - opts_.beta1) * g;
    v_[i] = opts_.beta2 * v_[i] + (1.0 - opts_.beta2) * g.cwiseProduct(g);
    p.value.array() -= opts_.lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + opts_.eps);
  }
}

}  // namespace inornet
