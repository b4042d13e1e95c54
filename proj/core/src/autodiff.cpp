#include "scen/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>
#include <utility>

#include "scen/errors.hpp"

namespace scen {

namespace {

// ---- gemm kernels; j-inner loops keep accesses contiguous ----

// C += A * B            A:[m,k] B:[k,n] C:[m,n]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * k;
        double* ci = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ai[p];
            const double* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

// C += A * B^T          A:[m,n] B:[k,n] C:[m,k]
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
             std::size_t k) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * n;
        double* ci = c + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double* bp = b + p * n;
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += ai[j] * bp[j];
            ci[p] += s;
        }
    }
}

// C += A^T * B          A:[m,k] B:[m,n] C:[k,n]
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * k;
        const double* bi = b + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ai[p];
            double* cp = c + p * n;
            for (std::size_t j = 0; j < n; ++j) cp[j] += av * bi[j];
        }
    }
}

NodePtr make_op(const char* op, Tensor value, std::vector<NodePtr> parents,
                std::function<void(Node&)> rule) {
    auto node = std::make_shared<Node>();
    node->op = op;
    node->value = std::move(value);
    node->parents = std::move(parents);
    for (const auto& p : node->parents) {
        if (p->needs_grad) {
            node->needs_grad = true;
            break;
        }
    }
    if (node->needs_grad) {
        node->grad = Tensor(node->value.shape());
        node->backward_rule = std::move(rule);
    }
    return node;
}

[[noreturn]] void shape_fail(const char* op, const Tensor& a, const Tensor& b) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                     b.shape_str());
}

double stable_sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double stable_log_sigmoid(double z) {
    // log sigmoid(z) = -log(1 + exp(-z)) without overflow on either tail
    if (z >= 0.0) return -std::log1p(std::exp(-z));
    return z - std::log1p(std::exp(z));
}

}  // namespace

void Node::ensure_grad() {
    if (grad.size() != value.size()) grad = Tensor(value.shape());
}

void Node::zero_grad() {
    if (!grad.empty()) grad.fill(0.0);
}

NodePtr constant(Tensor value) {
    auto node = std::make_shared<Node>();
    node->op = "constant";
    node->value = std::move(value);
    return node;
}

NodePtr parameter(Tensor value) {
    auto node = std::make_shared<Node>();
    node->op = "parameter";
    node->value = std::move(value);
    node->grad = Tensor(node->value.shape());
    node->trainable = true;
    node->needs_grad = true;
    return node;
}

void set_trainable(const NodePtr& leaf, bool trainable) {
    if (!leaf->parents.empty()) {
        throw ValidationError("set_trainable: node is not a leaf");
    }
    leaf->trainable = trainable;
    leaf->needs_grad = trainable;
    leaf->ensure_grad();
}

NodePtr matmul(const NodePtr& a, const NodePtr& b) {
    const Tensor& av = a->value;
    const Tensor& bv = b->value;
    if (av.ndim() != 2 || bv.ndim() != 2 || av.cols() != bv.rows()) shape_fail("matmul", av, bv);
    const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
    Tensor out({m, n});
    gemm_nn(av.data(), bv.data(), out.data(), m, k, n);
    return make_op("matmul", std::move(out), {a, b}, [a, b, m, k, n](Node& self) {
        if (a->needs_grad) {
            a->ensure_grad();
            gemm_nt(self.grad.data(), b->value.data(), a->grad.data(), m, n, k);
        }
        if (b->needs_grad) {
            b->ensure_grad();
            gemm_tn(a->value.data(), self.grad.data(), b->grad.data(), m, k, n);
        }
    });
}

NodePtr add(const NodePtr& a, const NodePtr& b) {
    if (!a->value.same_shape(b->value)) shape_fail("add", a->value, b->value);
    Tensor out(a->value.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->value[i] + b->value[i];
    return make_op("add", std::move(out), {a, b}, [a, b](Node& self) {
        for (const NodePtr& p : {a, b}) {
            if (!p->needs_grad) continue;
            p->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
        }
    });
}

NodePtr add_bias(const NodePtr& x, const NodePtr& bias) {
    const Tensor& xv = x->value;
    const Tensor& bv = bias->value;
    if (xv.ndim() != 2 || bv.ndim() != 1 || bv.size() != xv.cols()) {
        shape_fail("add_bias", xv, bv);
    }
    const std::size_t m = xv.rows(), n = xv.cols();
    Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out.at(i, j) = xv.at(i, j) + bv[j];
    return make_op("add_bias", std::move(out), {x, bias}, [x, bias, m, n](Node& self) {
        if (x->needs_grad) {
            x->ensure_grad();
            for (std::size_t i = 0; i < m * n; ++i) x->grad[i] += self.grad[i];
        }
        if (bias->needs_grad) {
            bias->ensure_grad();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) bias->grad[j] += self.grad.at(i, j);
        }
    });
}

NodePtr relu(const NodePtr& x) {
    Tensor out(x->value.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x->value[i] > 0.0 ? x->value[i] : 0.0;
    return make_op("relu", std::move(out), {x}, [x](Node& self) {
        if (!x->needs_grad) return;
        x->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i)
            if (x->value[i] > 0.0) x->grad[i] += self.grad[i];
    });
}

NodePtr tanh_op(const NodePtr& x) {
    Tensor out(x->value.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(x->value[i]);
    return make_op("tanh", std::move(out), {x}, [x](Node& self) {
        if (!x->needs_grad) return;
        x->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            const double t = self.value[i];
            x->grad[i] += self.grad[i] * (1.0 - t * t);
        }
    });
}

NodePtr sigmoid(const NodePtr& x) {
    Tensor out(x->value.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = stable_sigmoid(x->value[i]);
    return make_op("sigmoid", std::move(out), {x}, [x](Node& self) {
        if (!x->needs_grad) return;
        x->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            const double s = self.value[i];
            x->grad[i] += self.grad[i] * s * (1.0 - s);
        }
    });
}

NodePtr log_sigmoid(const NodePtr& x) {
    Tensor out(x->value.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = stable_log_sigmoid(x->value[i]);
    return make_op("log_sigmoid", std::move(out), {x}, [x](Node& self) {
        if (!x->needs_grad) return;
        x->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i)
            x->grad[i] += self.grad[i] * stable_sigmoid(-x->value[i]);
    });
}

NodePtr log_softmax(const NodePtr& x, std::size_t axis) {
    const Tensor& xv = x->value;
    if (!((xv.ndim() == 1 && axis == 0) || (xv.ndim() == 2 && axis <= 1))) {
        throw ShapeError("log_softmax: axis " + std::to_string(axis) + " invalid for shape " +
                         xv.shape_str());
    }
    // treat rank-1 as a single row, axis 0 as the transposed walk
    const bool row_wise = xv.ndim() == 1 || axis == 1;
    const std::size_t groups = xv.ndim() == 1 ? 1 : (row_wise ? xv.rows() : xv.cols());
    const std::size_t width = xv.ndim() == 1 ? xv.size() : (row_wise ? xv.cols() : xv.rows());
    const std::size_t step = row_wise ? 1 : (xv.ndim() == 2 ? xv.cols() : 1);
    const std::size_t group_stride = row_wise ? width : 1;

    Tensor out(xv.shape());
    for (std::size_t g = 0; g < groups; ++g) {
        const double* src = xv.data() + g * group_stride;
        double* dst = out.data() + g * group_stride;
        std::size_t mx_at = 0;
        for (std::size_t j = 1; j < width; ++j)
            if (src[j * step] > src[mx_at * step]) mx_at = j;
        const double mx = src[mx_at * step];
        // log1p with the max term factored out keeps sub-epsilon losses
        // exact; the max is subtracted before the log term so it cannot
        // swallow it
        double rest = 0.0;
        for (std::size_t j = 0; j < width; ++j)
            if (j != mx_at) rest += std::exp(src[j * step] - mx);
        const double log_norm = std::log1p(rest);
        for (std::size_t j = 0; j < width; ++j)
            dst[j * step] = (src[j * step] - mx) - log_norm;
    }
    return make_op("log_softmax", std::move(out), {x},
                   [x, groups, width, step, group_stride](Node& self) {
                       if (!x->needs_grad) return;
                       x->ensure_grad();
                       for (std::size_t g = 0; g < groups; ++g) {
                           const double* y = self.value.data() + g * group_stride;
                           const double* gy = self.grad.data() + g * group_stride;
                           double* gx = x->grad.data() + g * group_stride;
                           double gsum = 0.0;
                           for (std::size_t j = 0; j < width; ++j) gsum += gy[j * step];
                           for (std::size_t j = 0; j < width; ++j)
                               gx[j * step] += gy[j * step] - std::exp(y[j * step]) * gsum;
                       }
                   });
}

NodePtr dot(const NodePtr& u, const NodePtr& v) {
    const Tensor& uv = u->value;
    const Tensor& vv = v->value;
    if (uv.ndim() != 1 || vv.ndim() != 1 || uv.size() != vv.size()) shape_fail("dot", uv, vv);
    double s = 0.0;
    for (std::size_t i = 0; i < uv.size(); ++i) s += uv[i] * vv[i];
    return make_op("dot", Tensor::scalar(s), {u, v}, [u, v](Node& self) {
        const double g = self.grad[0];
        if (u->needs_grad) {
            u->ensure_grad();
            for (std::size_t i = 0; i < u->value.size(); ++i) u->grad[i] += g * v->value[i];
        }
        if (v->needs_grad) {
            v->ensure_grad();
            for (std::size_t i = 0; i < v->value.size(); ++i) v->grad[i] += g * u->value[i];
        }
    });
}

NodePtr rows_dot(const NodePtr& a, const NodePtr& b) {
    const Tensor& av = a->value;
    const Tensor& bv = b->value;
    if (av.ndim() != 2 || !av.same_shape(bv)) shape_fail("rows_dot", av, bv);
    const std::size_t n = av.rows(), d = av.cols();
    Tensor out({n});
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += av.at(i, j) * bv.at(i, j);
        out[i] = s;
    }
    return make_op("rows_dot", std::move(out), {a, b}, [a, b, n, d](Node& self) {
        for (std::size_t i = 0; i < n; ++i) {
            const double g = self.grad[i];
            if (a->needs_grad) {
                a->ensure_grad();
                for (std::size_t j = 0; j < d; ++j) a->grad.at(i, j) += g * b->value.at(i, j);
            }
            if (b->needs_grad) {
                b->ensure_grad();
                for (std::size_t j = 0; j < d; ++j) b->grad.at(i, j) += g * a->value.at(i, j);
            }
        }
    });
}

NodePtr l2_normalize(const NodePtr& x, bool zero_rows_pass_through) {
    const Tensor& xv = x->value;
    if (xv.ndim() != 1 && xv.ndim() != 2) {
        throw ShapeError("l2_normalize: rank-1 or rank-2 expected, got " + xv.shape_str());
    }
    const std::size_t n = xv.ndim() == 2 ? xv.rows() : 1;
    const std::size_t d = xv.ndim() == 2 ? xv.cols() : xv.size();
    Tensor out(xv.shape());
    std::vector<double> norms(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = xv.data() + i * d;
        double sq = 0.0;
        for (std::size_t j = 0; j < d; ++j) sq += row[j] * row[j];
        const double nm = std::sqrt(sq);
        if (nm == 0.0 && !zero_rows_pass_through) {
            throw NumericError("l2_normalize: zero-norm row " + std::to_string(i));
        }
        norms[i] = nm;
        double* dst = out.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) dst[j] = nm == 0.0 ? row[j] : row[j] / nm;
    }
    return make_op("l2_normalize", std::move(out), {x},
                   [x, n, d, norms = std::move(norms)](Node& self) {
                       if (!x->needs_grad) return;
                       x->ensure_grad();
                       for (std::size_t i = 0; i < n; ++i) {
                           const double* y = self.value.data() + i * d;
                           const double* gy = self.grad.data() + i * d;
                           double* gx = x->grad.data() + i * d;
                           if (norms[i] == 0.0) {
                               for (std::size_t j = 0; j < d; ++j) gx[j] += gy[j];
                               continue;
                           }
                           double gy_dot_y = 0.0;
                           for (std::size_t j = 0; j < d; ++j) gy_dot_y += gy[j] * y[j];
                           for (std::size_t j = 0; j < d; ++j)
                               gx[j] += (gy[j] - y[j] * gy_dot_y) / norms[i];
                       }
                   });
}

NodePtr concat(const NodePtr& a, const NodePtr& b) {
    const Tensor& av = a->value;
    const Tensor& bv = b->value;
    if (av.ndim() == 1 && bv.ndim() == 1) {
        Tensor out({av.size() + bv.size()});
        std::copy(av.data(), av.data() + av.size(), out.data());
        std::copy(bv.data(), bv.data() + bv.size(), out.data() + av.size());
        const std::size_t na = av.size(), nb = bv.size();
        return make_op("concat", std::move(out), {a, b}, [a, b, na, nb](Node& self) {
            if (a->needs_grad) {
                a->ensure_grad();
                for (std::size_t i = 0; i < na; ++i) a->grad[i] += self.grad[i];
            }
            if (b->needs_grad) {
                b->ensure_grad();
                for (std::size_t i = 0; i < nb; ++i) b->grad[i] += self.grad[na + i];
            }
        });
    }
    if (av.ndim() == 2 && bv.ndim() == 2 && av.rows() == bv.rows()) {
        const std::size_t n = av.rows(), da = av.cols(), db = bv.cols();
        Tensor out({n, da + db});
        for (std::size_t i = 0; i < n; ++i) {
            std::copy(av.data() + i * da, av.data() + (i + 1) * da, out.data() + i * (da + db));
            std::copy(bv.data() + i * db, bv.data() + (i + 1) * db,
                      out.data() + i * (da + db) + da);
        }
        return make_op("concat", std::move(out), {a, b}, [a, b, n, da, db](Node& self) {
            for (std::size_t i = 0; i < n; ++i) {
                const double* g = self.grad.data() + i * (da + db);
                if (a->needs_grad) {
                    a->ensure_grad();
                    for (std::size_t j = 0; j < da; ++j) a->grad.at(i, j) += g[j];
                }
                if (b->needs_grad) {
                    b->ensure_grad();
                    for (std::size_t j = 0; j < db; ++j) b->grad.at(i, j) += g[da + j];
                }
            }
        });
    }
    shape_fail("concat", av, bv);
}

NodePtr scale(const NodePtr& x, double factor) {
    Tensor out(x->value.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x->value[i] * factor;
    return make_op("scale", std::move(out), {x}, [x, factor](Node& self) {
        if (!x->needs_grad) return;
        x->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) x->grad[i] += self.grad[i] * factor;
    });
}

NodePtr mean(const NodePtr& x) {
    const std::size_t n = x->value.size();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x->value[i];
    return make_op("mean", Tensor::scalar(s / static_cast<double>(n)), {x}, [x, n](Node& self) {
        if (!x->needs_grad) return;
        x->ensure_grad();
        const double g = self.grad[0] / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) x->grad[i] += g;
    });
}

NodePtr repeat_rows(const NodePtr& x, std::size_t times) {
    const Tensor& xv = x->value;
    if (xv.ndim() != 2 || times == 0) {
        throw ShapeError("repeat_rows: rank-2 input and times >= 1 required, got " +
                         xv.shape_str() + " x" + std::to_string(times));
    }
    const std::size_t n = xv.rows(), d = xv.cols();
    Tensor out({n * times, d});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t r = 0; r < times; ++r)
            std::copy(xv.data() + i * d, xv.data() + (i + 1) * d,
                      out.data() + (i * times + r) * d);
    return make_op("repeat_rows", std::move(out), {x}, [x, n, d, times](Node& self) {
        if (!x->needs_grad) return;
        x->ensure_grad();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t r = 0; r < times; ++r) {
                const double* g = self.grad.data() + (i * times + r) * d;
                for (std::size_t j = 0; j < d; ++j) x->grad.at(i, j) += g[j];
            }
    });
}

NodePtr reshape(const NodePtr& x, std::vector<std::size_t> shape) {
    Tensor out(std::move(shape), x->value.values());
    if (out.size() != x->value.size()) shape_fail("reshape", x->value, out);
    return make_op("reshape", std::move(out), {x}, [x](Node& self) {
        if (!x->needs_grad) return;
        x->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) x->grad[i] += self.grad[i];
    });
}

NodePtr gather_rows(const NodePtr& x, std::vector<std::size_t> indices) {
    const Tensor& xv = x->value;
    if (xv.ndim() != 2 || indices.empty()) {
        throw ShapeError("gather_rows: rank-2 input and non-empty index list required, got " +
                         xv.shape_str());
    }
    const std::size_t n = xv.rows(), d = xv.cols();
    for (std::size_t idx : indices) {
        if (idx >= n) {
            throw ShapeError("gather_rows: index " + std::to_string(idx) + " out of range for " +
                             xv.shape_str());
        }
    }
    Tensor out({indices.size(), d});
    for (std::size_t i = 0; i < indices.size(); ++i)
        std::copy(xv.data() + indices[i] * d, xv.data() + (indices[i] + 1) * d, out.data() + i * d);
    return make_op("gather_rows", std::move(out), {x},
                   [x, d, indices = std::move(indices)](Node& self) {
                       if (!x->needs_grad) return;
                       x->ensure_grad();
                       for (std::size_t i = 0; i < indices.size(); ++i) {
                           const double* g = self.grad.data() + i * d;
                           double* dst = x->grad.data() + indices[i] * d;
                           for (std::size_t j = 0; j < d; ++j) dst[j] += g[j];
                       }
                   });
}

NodePtr pick_per_row(const NodePtr& x, std::vector<std::size_t> indices) {
    const Tensor& xv = x->value;
    if (xv.ndim() != 2 || indices.size() != xv.rows()) {
        throw ShapeError("pick_per_row: need one index per row of " + xv.shape_str() + ", got " +
                         std::to_string(indices.size()));
    }
    const std::size_t n = xv.rows(), c = xv.cols();
    for (std::size_t idx : indices) {
        if (idx >= c) {
            throw ShapeError("pick_per_row: column " + std::to_string(idx) +
                             " out of range for " + xv.shape_str());
        }
    }
    Tensor out({n});
    for (std::size_t i = 0; i < n; ++i) out[i] = xv.at(i, indices[i]);
    return make_op("pick_per_row", std::move(out), {x},
                   [x, indices = std::move(indices)](Node& self) {
                       if (!x->needs_grad) return;
                       x->ensure_grad();
                       for (std::size_t i = 0; i < indices.size(); ++i)
                           x->grad.at(i, indices[i]) += self.grad[i];
                   });
}

NodePtr detach(const NodePtr& x) {
    auto node = constant(x->value);
    node->op = "detach";
    return node;
}

void backward(const NodePtr& loss) {
    if (loss->value.size() != 1) {
        throw ShapeError("backward: loss must be scalar, got " + loss->value.shape_str());
    }
    if (!loss->needs_grad) {
        throw ValidationError("backward: no trainable parameter is reachable from the loss");
    }

    // iterative DFS postorder over needs_grad nodes; root ends up last
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(loss.get(), 0);
    seen.insert(loss.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* parent = node->parents[next++].get();
            if (parent->needs_grad && !seen.count(parent)) {
                seen.insert(parent);
                stack.emplace_back(parent, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    // interior grads are per-sweep scratch; only leaf grads survive between
    // backward calls (until explicitly zeroed)
    for (Node* node : order)
        if (!node->parents.empty()) node->zero_grad();

    loss->ensure_grad();
    loss->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* node = *it;
        if (node->backward_rule) node->backward_rule(*node);
    }
}

}  // namespace scen
