#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sgcn/classifier.hpp"
#include "sgcn/encoder.hpp"
#include "sgcn/graph.hpp"

namespace sgcn {

struct ModelDims {
    int d_e = 300;   // embedding width
    int hidden = 128; // LSTM hidden width H
    int d_g = 100;   // GCN output width
    int h_mlp = 64;  // MLP hidden width
    int classes = 4;

    int d_h() const { return 2 * hidden; }
};

/// The whole model: embeddings, shared Bi-LSTM, graph convolution weights and
/// the MLP head.
struct SgcnModel {
    ModelDims dims;
    EmbeddingTable embedding;
    BiLstmParams lstm;
    GcnParams gcn;
    MlpParams mlp;
    bool finetune_embeddings = false;
    bool forget_bias_one = true;

    static SgcnModel init(EmbeddingTable table, ModelDims dims, Rng& rng,
                          bool forget_bias_one = true, bool finetune_embeddings = false);

    struct ParamRef {
        std::string name;
        Tensor* tensor;
        bool trainable;
    };
    struct ConstParamRef {
        std::string name;
        const Tensor* tensor;
        bool trainable;
    };

    /// Every named parameter in a fixed order (embedding matrix first). The
    /// embedding matrix is marked trainable only when fine-tuning is on.
    std::vector<ParamRef> params();
    std::vector<ConstParamRef> params() const;

    /// Shape check across all components; throws ShapeError on inconsistency.
    void check_consistent() const;
};

/// One example's tape-bound artifacts.
struct ForwardPass {
    Tensor h1, h2;  // positional representations, m x d_h and n x d_h
    InteractionGraph graph;
    Tensor x;       // stacked node features, (m+n) x d_h
    Tensor x_g;     // post-convolution features, (m+n) x d_g
    Tensor x_c;     // pooled features, 1 x 2*d_g
    Tensor logits;  // 1 x C
    int oov_count = 0;
    int token_count = 0;
};

/// Binds all model parameters onto one tape and runs forward passes on it.
/// Bind once per tape; repeated binding would split gradient accumulation.
class BoundModel {
public:
    BoundModel(Tape& tape, const SgcnModel& model);

    ForwardPass forward(const std::vector<std::string>& arg1_tokens,
                        const std::vector<std::string>& arg2_tokens) const;

    Tensor loss(const ForwardPass& fp, int label) const;

    /// Gradients after tape.backward(), aligned with SgcnModel::params().
    std::vector<std::vector<double>> grads() const;

    const Tensor& bound_embedding() const { return emb_; }

private:
    Tape* tape_;
    const SgcnModel* model_;
    Tensor emb_;
    LstmDirParams fwd_, bwd_;
    Tensor w_g_;
    MlpParams mlp_;
    std::vector<Tensor> in_param_order_;
};

} // namespace sgcn
