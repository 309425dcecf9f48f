#ifndef VESSELGAN_TRAINER_ADAM_HPP
#define VESSELGAN_TRAINER_ADAM_HPP

#include <cmath>
#include <map>
#include <string>

#include "vesselgan/nets/network.hpp"

namespace vesselgan {

// Adam with bias correction; one shared timestep across all parameters.
template <typename T>
class Adam {
  public:
    struct State {
        Tensor<T> m, v;
    };

    Adam() = default;
    Adam(double lr, double beta1, double beta2, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(std::vector<typename Network<T>::ParamRef> params) {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (auto& p : params) {
            State& s = states_[p.name];
            if (s.m.empty()) {
                s.m = Tensor<T>(p.value->dims());
                s.v = Tensor<T>(p.value->dims());
            }
            for (int64_t i = 0; i < p.value->size(); ++i) {
                const double g = (*p.grad)[i];
                const double m = beta1_ * s.m[i] + (1.0 - beta1_) * g;
                const double v = beta2_ * s.v[i] + (1.0 - beta2_) * g * g;
                s.m[i] = static_cast<T>(m);
                s.v[i] = static_cast<T>(v);
                (*p.value)[i] -= static_cast<T>(lr_ * (m / bc1) / (std::sqrt(v / bc2) + eps_));
            }
        }
    }

    double lr() const { return lr_; }
    int64_t timestep() const { return t_; }
    void set_timestep(int64_t t) { t_ = t; }
    std::map<std::string, State>& states() { return states_; }

  private:
    double lr_ = 1e-4, beta1_ = 0.5, beta2_ = 0.999, eps_ = 1e-8;
    int64_t t_ = 0;
    std::map<std::string, State> states_;
};

}  // namespace vesselgan

#endif
