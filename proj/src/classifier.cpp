#include "sgcn/classifier.hpp"

namespace sgcn {

Tensor concat_pool(Tape& tape, const Tensor& x_g) {
    if (x_g.rows() < 1) throw EmptyInputError("concat_pool: no rows to pool");
    return tape.concat_cols(tape.pool_rows(PoolKind::Max, x_g),
                            tape.pool_rows(PoolKind::Mean, x_g));
}

Tensor classify(Tape& tape, const Tensor& x_c, const MlpParams& p) {
    if (x_c.rows() != 1 || x_c.cols() != p.W1.rows())
        throw ShapeError("classify: input " + x_c.shape_str() + " does not match W1 " +
                         p.W1.shape_str());
    Tensor hidden = tape.relu(tape.add(tape.matmul(x_c, p.W1), p.b1));
    return tape.add(tape.matmul(hidden, p.W2), p.b2);
}

int predict(const Tensor& logits) {
    int best = 0;
    for (int j = 1; j < logits.cols(); ++j)
        if (logits.at(j) > logits.at(best)) best = j;
    return best;
}

} // namespace sgcn
