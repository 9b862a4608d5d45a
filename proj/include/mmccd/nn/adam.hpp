#pragma once

#include <cmath>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "mmccd/nn/layers.hpp"

namespace mmccd::nn {

template <typename T>
struct AdamT {
    double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long long t = 0;
    std::vector<TensorT<T>> m, v;

    void step(const std::vector<ParamRef<T>>& params) {
        if (m.empty()) {
            for (const auto& p : params) {
                m.emplace_back(p.value->n, p.value->c, p.value->h, p.value->w);
                v.emplace_back(p.value->n, p.value->c, p.value->h, p.value->w);
            }
        }
        if (m.size() != params.size()) throw std::logic_error("adam: parameter set changed");
        ++t;
        T c1 = static_cast<T>(1.0 / (1.0 - std::pow(beta1, static_cast<double>(t))));
        T c2 = static_cast<T>(1.0 / (1.0 - std::pow(beta2, static_cast<double>(t))));
        for (size_t i = 0; i < params.size(); ++i) {
            const auto& p = params[i];
            if (p.value->size() != m[i].size())
                throw std::logic_error("adam: parameter shape changed");
            if constexpr (std::is_same_v<T, float>)
                kernels::ops().adam_step(p.value->size(), p.value->data(), p.grad->data(),
                                         m[i].data(), v[i].data(), static_cast<float>(lr),
                                         static_cast<float>(beta1), static_cast<float>(beta2),
                                         static_cast<float>(eps), c1, c2);
            else
                kernels::ref::adam_step(p.value->size(), p.value->data(), p.grad->data(),
                                        m[i].data(), v[i].data(), static_cast<T>(lr),
                                        static_cast<T>(beta1), static_cast<T>(beta2),
                                        static_cast<T>(eps), c1, c2);
        }
    }
};

using Adam = AdamT<float>;

}  // namespace mmccd::nn
