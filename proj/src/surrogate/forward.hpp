#pragma once

#include "contactgnn/surrogate.hpp"

namespace contactgnn::detail {

struct RoundTrace {
    Mlp::Cache phi_m, phi_w, gamma;
};

struct ForwardTrace {
    EdgeIndex mesh, world;
    Mlp::Cache enc_x, enc_em, enc_ew, enc_g;
    std::vector<Embeddings> states;  // states[0] encoded, states[n + 1] after round n
    std::vector<RoundTrace> rounds;
    MatrixXd dec_in;
    std::array<Mlp::Cache, 3> dec;
};

/// 3 x nodes accelerations with every intermediate kept for backward().
MatrixXd forward_traced(const GraphSample& sample, const GnnParams& params, ForwardTrace& trace);

/// Adds d(loss)/d(params) into `grad` given d(loss)/d(y_hat) (3 x nodes).
void backward(const GnnParams& params, const ForwardTrace& trace, const MatrixXd& d_y, GnnParams& grad);

}  // namespace contactgnn::detail
