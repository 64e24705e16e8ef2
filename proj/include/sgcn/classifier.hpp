#pragma once

#include "sgcn/tape.hpp"

namespace sgcn {

/// Two-layer MLP head: hidden layer with ReLU, linear output.
struct MlpParams {
    Tensor W1; // 2*d_g x h_mlp
    Tensor b1; // 1 x h_mlp
    Tensor W2; // h_mlp x C
    Tensor b2; // 1 x C

    static MlpParams init(int input, int hidden, int classes, Rng& rng) {
        return MlpParams{Tensor::glorot(input, hidden, rng), Tensor::zeros(1, hidden),
                         Tensor::glorot(hidden, classes, rng), Tensor::zeros(1, classes)};
    }
};

/// [column-wise max ; column-wise mean] over all rows, 1 x 2*cols.
Tensor concat_pool(Tape& tape, const Tensor& x_g);

/// Logits of the MLP head; softmax happens only at the loss/prediction boundary.
Tensor classify(Tape& tape, const Tensor& x_c, const MlpParams& p);

/// Argmax with lowest-index tie breaking.
int predict(const Tensor& logits);

} // namespace sgcn
