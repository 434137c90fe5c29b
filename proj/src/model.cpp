#include "hybridmap/model.hpp"

#include "hybridmap/rng.hpp"
#include "hybridmap/scalar_math.hpp"

namespace hybridmap {

namespace {

template <typename S>
struct CoarseSdfOp final : TapeOp<S> {
  SparseVoxelOctree<S>* octree;
  typename GradientTape<S>::BufferId out;
  std::vector<CoarseInterp<S>> records;

  void backward(GradientTape<S>& tape) override {
    auto g_out = tape.grads(out);
    auto g_vertex = octree->vertex_sdf().grads();
    for (size_t i = 0; i < records.size(); ++i) {
      const S g = g_out[i];
      if (g == S(0)) continue;
      const CoarseInterp<S>& r = records[i];
      for (int k = 0; k < 8; ++k) g_vertex[r.vertex[k]] += r.weight[k] * g;
    }
  }
  const char* name() const override { return "coarse_sdf"; }
};

template <typename S>
struct HashEncodeOp final : TapeOp<S> {
  HashEncoding<S>* encoding;
  typename GradientTape<S>::BufferId out;
  std::vector<typename HashEncoding<S>::Record> records;

  void backward(GradientTape<S>& tape) override {
    auto g_out = tape.grads(out);
    auto g_table = encoding->table().grads();
    const int L = encoding->config().levels;
    const int F = encoding->config().features;
    for (size_t i = 0; i < records.size(); ++i) {
      const auto& rec = records[i];
      const S* g_row = g_out.data() + i * size_t(L) * F;
      for (int l = 0; l < L; ++l) {
        for (int k = 0; k < 8; ++k) {
          const S w = rec.weight[size_t(l) * 8 + k];
          const uint32_t base = rec.slot[size_t(l) * 8 + k];
          for (int f = 0; f < F; ++f) g_table[base + f] += w * g_row[l * F + f];
        }
      }
    }
  }
  const char* name() const override { return "hash_encode"; }
};

template <typename S>
struct MlpOp final : TapeOp<S> {
  Mlp<S>* mlp;
  typename GradientTape<S>::BufferId in, out;
  std::vector<std::vector<S>> hidden;

  void backward(GradientTape<S>& tape) override {
    mlp->backward(tape.values(in).data(), tape.rows(in), hidden, tape.grads(out).data(),
                  tape.grads(in).data());
  }
  const char* name() const override { return "mlp"; }
};

template <typename S>
struct AddOp final : TapeOp<S> {
  typename GradientTape<S>::BufferId a, b, out;

  void backward(GradientTape<S>& tape) override {
    auto g_out = tape.grads(out);
    auto ga = tape.grads(a);
    auto gb = tape.grads(b);
    for (size_t i = 0; i < g_out.size(); ++i) {
      ga[i] += g_out[i];
      gb[i] += g_out[i];
    }
  }
  const char* name() const override { return "add"; }
};

template <typename S>
struct SigmoidOp final : TapeOp<S> {
  typename GradientTape<S>::BufferId in, out;

  void backward(GradientTape<S>& tape) override {
    auto g_out = tape.grads(out);
    auto y = tape.values(out);
    auto g_in = tape.grads(in);
    for (size_t i = 0; i < g_out.size(); ++i) g_in[i] += g_out[i] * y[i] * (S(1) - y[i]);
  }
  const char* name() const override { return "sigmoid"; }
};

}  // namespace

template <typename S>
Model<S>::Model(const ModelConfig<S>& cfg)
    : cfg_(cfg),
      octree_(cfg.octree),
      geom_enc_("geometry_hash", cfg.geometry_encoding, Rng::derive(cfg.seed, 1)),
      color_enc_("color_hash", cfg.color_encoding, Rng::derive(cfg.seed, 2)),
      geom_mlp_("geometry_mlp", cfg.geometry_encoding.levels * cfg.geometry_encoding.features,
                cfg.hidden_width, cfg.geometry_hidden_layers, 1),
      color_mlp_("color_mlp", cfg.color_encoding.levels * cfg.color_encoding.features,
                 cfg.hidden_width, cfg.color_hidden_layers, 3) {
  geom_mlp_.init_he(Rng::derive(cfg.seed, 3));
  geom_mlp_.zero_layer(geom_mlp_.layer_count() - 1);  // zero residual at start
  color_mlp_.init_he(Rng::derive(cfg.seed, 4));
}

template <typename S>
void Model<S>::predict_sdf(std::span<const Vec3> points, std::span<S> out) const {
  const size_t n = points.size();
  octree_.query_coarse_sdf(points, out, nullptr);
  std::vector<S> feat(n * geom_enc_.feature_dim());
  geom_enc_.encode(points, feat.data(), nullptr);
  std::vector<S> residual(n);
  geom_mlp_.forward(feat.data(), n, residual.data(), nullptr);
  for (size_t i = 0; i < n; ++i) out[i] += residual[i];
}

template <typename S>
void Model<S>::predict_color(std::span<const Vec3> points, S* out) const {
  const size_t n = points.size();
  std::vector<S> feat(n * color_enc_.feature_dim());
  color_enc_.encode(points, feat.data(), nullptr);
  color_mlp_.forward(feat.data(), n, out, nullptr);
  for (size_t i = 0; i < n * 3; ++i) out[i] = sigmoid(out[i]);
}

template <typename S>
S Model<S>::predict_sdf_in_leaf(uint32_t leaf_id, const Vec3& p) const {
  const S coarse = octree_.sdf_in_leaf(leaf_id, p, nullptr);
  std::vector<S> feat(geom_enc_.feature_dim());
  geom_enc_.encode(std::span<const Vec3>(&p, 1), feat.data(), nullptr);
  S residual;
  geom_mlp_.forward(feat.data(), 1, &residual, nullptr);
  return coarse + residual;
}

template <typename S>
typename Model<S>::BufferId Model<S>::predict_sdf(GradientTape<S>& tape,
                                                  std::span<const Vec3> points) {
  const size_t n = points.size();

  auto coarse_op = std::make_unique<CoarseSdfOp<S>>();
  coarse_op->octree = &octree_;
  coarse_op->out = tape.add_buffer(n, 1);
  octree_.query_coarse_sdf(points, tape.values(coarse_op->out), &coarse_op->records);
  const BufferId coarse = coarse_op->out;
  tape.record(std::move(coarse_op));

  auto enc_op = std::make_unique<HashEncodeOp<S>>();
  enc_op->encoding = &geom_enc_;
  enc_op->out = tape.add_buffer(n, geom_enc_.feature_dim());
  geom_enc_.encode(points, tape.values(enc_op->out).data(), &enc_op->records);
  const BufferId feat = enc_op->out;
  tape.record(std::move(enc_op));

  auto mlp_op = std::make_unique<MlpOp<S>>();
  mlp_op->mlp = &geom_mlp_;
  mlp_op->in = feat;
  mlp_op->out = tape.add_buffer(n, 1);
  geom_mlp_.forward(tape.values(feat).data(), n, tape.values(mlp_op->out).data(),
                    &mlp_op->hidden);
  const BufferId residual = mlp_op->out;
  tape.record(std::move(mlp_op));

  auto add_op = std::make_unique<AddOp<S>>();
  add_op->a = coarse;
  add_op->b = residual;
  add_op->out = tape.add_buffer(n, 1);
  auto s = tape.values(add_op->out);
  auto a = tape.values(coarse);
  auto b = tape.values(residual);
  for (size_t i = 0; i < n; ++i) s[i] = a[i] + b[i];
  const BufferId out = add_op->out;
  tape.record(std::move(add_op));
  return out;
}

template <typename S>
typename Model<S>::BufferId Model<S>::predict_color(GradientTape<S>& tape,
                                                    std::span<const Vec3> points) {
  const size_t n = points.size();

  auto enc_op = std::make_unique<HashEncodeOp<S>>();
  enc_op->encoding = &color_enc_;
  enc_op->out = tape.add_buffer(n, color_enc_.feature_dim());
  color_enc_.encode(points, tape.values(enc_op->out).data(), &enc_op->records);
  const BufferId feat = enc_op->out;
  tape.record(std::move(enc_op));

  auto mlp_op = std::make_unique<MlpOp<S>>();
  mlp_op->mlp = &color_mlp_;
  mlp_op->in = feat;
  mlp_op->out = tape.add_buffer(n, 3);
  color_mlp_.forward(tape.values(feat).data(), n, tape.values(mlp_op->out).data(),
                     &mlp_op->hidden);
  const BufferId logits = mlp_op->out;
  tape.record(std::move(mlp_op));

  auto sig_op = std::make_unique<SigmoidOp<S>>();
  sig_op->in = logits;
  sig_op->out = tape.add_buffer(n, 3);
  auto y = tape.values(sig_op->out);
  auto z = tape.values(logits);
  for (size_t i = 0; i < n * 3; ++i) y[i] = sigmoid(z[i]);
  const BufferId out = sig_op->out;
  tape.record(std::move(sig_op));
  return out;
}

template <typename S>
std::vector<ParamGroup<S>*> Model<S>::parameter_groups() {
  return {&octree_.vertex_sdf(), &geom_enc_.table(), &color_enc_.table(), &geom_mlp_.params(),
          &color_mlp_.params()};
}

template <typename S>
std::vector<const ParamGroup<S>*> Model<S>::parameter_groups() const {
  return {&octree_.vertex_sdf(), &geom_enc_.table(), &color_enc_.table(), &geom_mlp_.params(),
          &color_mlp_.params()};
}

template <typename S>
void Model<S>::zero_grads() {
  for (ParamGroup<S>* g : parameter_groups()) g->zero_grads();
}

template class Model<float>;
template class Model<double>;

}  // namespace hybridmap
