#include "sgcn/model.hpp"

namespace sgcn {

SgcnModel SgcnModel::init(EmbeddingTable table, ModelDims dims, Rng& rng,
                          bool forget_bias_one, bool finetune_embeddings) {
    if (table.d_e != dims.d_e)
        throw ShapeError("SgcnModel: embedding width " + std::to_string(table.d_e) +
                         " does not match configured d_e " + std::to_string(dims.d_e));
    SgcnModel m;
    m.dims = dims;
    m.embedding = std::move(table);
    m.lstm.fwd = LstmDirParams::init(dims.d_e, dims.hidden, rng, forget_bias_one);
    m.lstm.bwd = LstmDirParams::init(dims.d_e, dims.hidden, rng, forget_bias_one);
    m.gcn = GcnParams::init(dims.d_h(), dims.d_g, rng);
    m.mlp = MlpParams::init(2 * dims.d_g, dims.h_mlp, dims.classes, rng);
    m.forget_bias_one = forget_bias_one;
    m.finetune_embeddings = finetune_embeddings;
    return m;
}

namespace {

template <typename Model, typename Ref>
std::vector<Ref> collect_params(Model& m) {
    std::vector<Ref> out;
    out.reserve(30);
    auto push = [&](const std::string& name, auto& tensor, bool trainable) {
        out.push_back(Ref{name, &tensor, trainable});
    };
    push("embedding.matrix", m.embedding.matrix, m.finetune_embeddings);
    auto dir = [&](const std::string& prefix, auto& p) {
        push(prefix + ".W_i", p.W_i, true); push(prefix + ".W_f", p.W_f, true);
        push(prefix + ".W_o", p.W_o, true); push(prefix + ".W_c", p.W_c, true);
        push(prefix + ".U_i", p.U_i, true); push(prefix + ".U_f", p.U_f, true);
        push(prefix + ".U_o", p.U_o, true); push(prefix + ".U_c", p.U_c, true);
        push(prefix + ".b_i", p.b_i, true); push(prefix + ".b_f", p.b_f, true);
        push(prefix + ".b_o", p.b_o, true); push(prefix + ".b_c", p.b_c, true);
    };
    dir("lstm.fwd", m.lstm.fwd);
    dir("lstm.bwd", m.lstm.bwd);
    push("gcn.W_g", m.gcn.W_g, true);
    push("mlp.W1", m.mlp.W1, true);
    push("mlp.b1", m.mlp.b1, true);
    push("mlp.W2", m.mlp.W2, true);
    push("mlp.b2", m.mlp.b2, true);
    return out;
}

} // namespace

std::vector<SgcnModel::ParamRef> SgcnModel::params() {
    return collect_params<SgcnModel, ParamRef>(*this);
}

std::vector<SgcnModel::ConstParamRef> SgcnModel::params() const {
    return collect_params<const SgcnModel, ConstParamRef>(*this);
}

void SgcnModel::check_consistent() const {
    lstm.fwd.check_consistent();
    lstm.bwd.check_consistent();
    if (lstm.fwd.hidden() != dims.hidden || lstm.fwd.input_dim() != dims.d_e ||
        lstm.bwd.hidden() != dims.hidden || lstm.bwd.input_dim() != dims.d_e)
        throw ShapeError("SgcnModel: LSTM dimensions do not match configured dims");
    if (embedding.matrix.cols() != dims.d_e)
        throw ShapeError("SgcnModel: embedding width " + std::to_string(embedding.matrix.cols()) +
                         " does not match d_e " + std::to_string(dims.d_e));
    if (gcn.W_g.rows() != dims.d_h() || gcn.W_g.cols() != dims.d_g)
        throw ShapeError("SgcnModel: W_g is " + gcn.W_g.shape_str() + ", expected " +
                         std::to_string(dims.d_h()) + "x" + std::to_string(dims.d_g));
    if (mlp.W1.rows() != 2 * dims.d_g || mlp.W1.cols() != dims.h_mlp ||
        mlp.W2.rows() != dims.h_mlp || mlp.W2.cols() != dims.classes)
        throw ShapeError("SgcnModel: MLP shapes do not match configured dims");
}

BoundModel::BoundModel(Tape& tape, const SgcnModel& model)
    : tape_(&tape), model_(&model) {
    emb_ = tape.leaf(model.embedding.matrix);
    if (!model.finetune_embeddings) tape.mark_no_grad(emb_);
    fwd_ = bind(tape, model.lstm.fwd);
    bwd_ = bind(tape, model.lstm.bwd);
    w_g_ = tape.leaf(model.gcn.W_g);
    mlp_.W1 = tape.leaf(model.mlp.W1);
    mlp_.b1 = tape.leaf(model.mlp.b1);
    mlp_.W2 = tape.leaf(model.mlp.W2);
    mlp_.b2 = tape.leaf(model.mlp.b2);

    // Same order as SgcnModel::params().
    in_param_order_ = {emb_,
                       fwd_.W_i, fwd_.W_f, fwd_.W_o, fwd_.W_c,
                       fwd_.U_i, fwd_.U_f, fwd_.U_o, fwd_.U_c,
                       fwd_.b_i, fwd_.b_f, fwd_.b_o, fwd_.b_c,
                       bwd_.W_i, bwd_.W_f, bwd_.W_o, bwd_.W_c,
                       bwd_.U_i, bwd_.U_f, bwd_.U_o, bwd_.U_c,
                       bwd_.b_i, bwd_.b_f, bwd_.b_o, bwd_.b_c,
                       w_g_, mlp_.W1, mlp_.b1, mlp_.W2, mlp_.b2};
}

ForwardPass BoundModel::forward(const std::vector<std::string>& arg1_tokens,
                                const std::vector<std::string>& arg2_tokens) const {
    if (arg1_tokens.empty() || arg2_tokens.empty())
        throw EmptyInputError("forward: both arguments need at least one token");
    Tape& tape = *tape_;
    const EmbeddingTable& table = model_->embedding;

    ForwardPass fp;
    int oov1 = 0, oov2 = 0;
    Tensor x1 = embed_sequence(tape, emb_, table.lookup_all(arg1_tokens, &oov1));
    Tensor x2 = embed_sequence(tape, emb_, table.lookup_all(arg2_tokens, &oov2));
    fp.oov_count = oov1 + oov2;
    fp.token_count = static_cast<int>(arg1_tokens.size() + arg2_tokens.size());

    fp.h1 = bilstm_encode(tape, fwd_, bwd_, x1);
    fp.h2 = bilstm_encode(tape, fwd_, bwd_, x2);
    fp.graph = build_graph(tape, fp.h1, fp.h2);
    fp.x = tape.stack_rows({fp.h1, fp.h2});
    fp.x_g = gcn_forward(tape, fp.graph, fp.x, w_g_);
    fp.x_c = concat_pool(tape, fp.x_g);
    fp.logits = classify(tape, fp.x_c, mlp_);
    return fp;
}

Tensor BoundModel::loss(const ForwardPass& fp, int label) const {
    return tape_->softmax_cross_entropy(fp.logits, label);
}

std::vector<std::vector<double>> BoundModel::grads() const {
    std::vector<std::vector<double>> out;
    out.reserve(in_param_order_.size());
    for (std::size_t i = 0; i < in_param_order_.size(); ++i) {
        if (i == 0 && !model_->finetune_embeddings) {
            out.emplace_back(); // frozen embeddings: no gradient materialized
            continue;
        }
        out.push_back(tape_->grad(in_param_order_[i]).values());
    }
    return out;
}

} // namespace sgcn
