#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gpk/common.hpp"
#include "gpk/dataset.hpp"

namespace gpk {

// Two conv/pool stages, a ReLU hidden layer, and a two-way softmax.
// Valid convolutions only; both pools are 2x2, stride 2.
struct CnnArch {
  int input_channels = 15;
  int input_size = 60;
  int conv1_out = 20;
  int k1 = 5;
  int conv2_out = 50;
  int k2 = 5;
  int fc1 = 500;
  int classes = 2;

  int conv1_size() const { return input_size - k1 + 1; }
  int pool1_size() const { return conv1_size() / 2; }
  int conv2_size() const { return pool1_size() - k2 + 1; }
  int pool2_size() const { return conv2_size() / 2; }
  int fc_in() const { return conv2_out * pool2_size() * pool2_size(); }

  void validate() const {
    if (input_channels <= 0 || input_size <= 0 || conv1_out <= 0 || k1 <= 0 ||
        conv2_out <= 0 || k2 <= 0 || fc1 <= 0 || classes <= 0)
      throw ConfigError("network dimensions must be positive");
    if (conv1_size() <= 0 || conv1_size() % 2 != 0)
      throw ConfigError("first conv output size must be positive and even");
    if (conv2_size() <= 0 || conv2_size() % 2 != 0)
      throw ConfigError("second conv output size must be positive and even");
  }

  bool operator==(const CnnArch&) const = default;
};

template <typename S>
struct CnnParams {
  CnnArch arch;
  std::vector<S> conv1_w, conv1_b;
  std::vector<S> conv2_w, conv2_b;
  std::vector<S> fc1_w, fc1_b;
  std::vector<S> fc2_w, fc2_b;

  void allocate() {
    arch.validate();
    conv1_w.assign(static_cast<size_t>(arch.conv1_out) * arch.input_channels *
                       arch.k1 * arch.k1,
                   S(0));
    conv1_b.assign(arch.conv1_out, S(0));
    conv2_w.assign(static_cast<size_t>(arch.conv2_out) * arch.conv1_out *
                       arch.k2 * arch.k2,
                   S(0));
    conv2_b.assign(arch.conv2_out, S(0));
    fc1_w.assign(static_cast<size_t>(arch.fc1) * arch.fc_in(), S(0));
    fc1_b.assign(arch.fc1, S(0));
    fc2_w.assign(static_cast<size_t>(arch.classes) * arch.fc1, S(0));
    fc2_b.assign(arch.classes, S(0));
  }

  template <typename F>
  void for_each_array(F&& f) {
    f(conv1_w);
    f(conv1_b);
    f(conv2_w);
    f(conv2_b);
    f(fc1_w);
    f(fc1_b);
    f(fc2_w);
    f(fc2_b);
  }
  template <typename F>
  void for_each_array(F&& f) const {
    f(conv1_w);
    f(conv1_b);
    f(conv2_w);
    f(conv2_b);
    f(fc1_w);
    f(fc1_b);
    f(fc2_w);
    f(fc2_b);
  }

  template <typename T>
  CnnParams<T> cast() const {
    CnnParams<T> out;
    out.arch = arch;
    out.allocate();
    auto copy = [](const std::vector<S>& src, std::vector<T>& dst) {
      for (size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<T>(src[i]);
    };
    copy(conv1_w, out.conv1_w);
    copy(conv1_b, out.conv1_b);
    copy(conv2_w, out.conv2_w);
    copy(conv2_b, out.conv2_b);
    copy(fc1_w, out.fc1_w);
    copy(fc1_b, out.fc1_b);
    copy(fc2_w, out.fc2_w);
    copy(fc2_b, out.fc2_b);
    return out;
  }

  // Uniform fan-in initialization, zero biases, fixed draw order.
  static CnnParams random_init(const CnnArch& arch, std::uint64_t seed) {
    CnnParams p;
    p.arch = arch;
    p.allocate();
    Rng rng(seed);
    auto init = [&](std::vector<S>& w, int fan_in) {
      const double bound = std::sqrt(3.0 / fan_in);
      for (auto& v : w) v = static_cast<S>(rng.uniform(-bound, bound));
    };
    init(p.conv1_w, arch.input_channels * arch.k1 * arch.k1);
    init(p.conv2_w, arch.conv1_out * arch.k2 * arch.k2);
    init(p.fc1_w, arch.fc_in());
    init(p.fc2_w, arch.fc1);
    return p;
  }
};

using CnnModel = CnnParams<float>;

namespace cnn {

template <typename S>
using MatCM = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using MapRM = Eigen::Map<
    const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename S>
using MapRMMut =
    Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>>;

// Patch matrix for a valid convolution: column p is the flattened
// receptive field of output pixel p (row-major over output rows/cols);
// within a column, index k = (channel * k + kr) * k + kc.
template <typename S>
void im2col(const S* image, int channels, int size, int k, MatCM<S>& col) {
  const int out = size - k + 1;
  col.resize(channels * k * k, out * out);
  for (int c = 0; c < channels; ++c) {
    const S* plane = image + static_cast<size_t>(c) * size * size;
    for (int kr = 0; kr < k; ++kr) {
      for (int kc = 0; kc < k; ++kc) {
        const int row = (c * k + kr) * k + kc;
        for (int r = 0; r < out; ++r) {
          const S* src = plane + (r + kr) * size + kc;
          S* dst_base = col.data();
          for (int cc = 0; cc < out; ++cc)
            dst_base[static_cast<size_t>(r * out + cc) * col.rows() + row] =
                src[cc];
        }
      }
    }
  }
}

// Transpose of im2col: scatter-add patch-matrix gradients back to image
// gradient layout.
template <typename S>
void col2im_add(const MatCM<S>& col, int channels, int size, int k,
                S* image_grad) {
  const int out = size - k + 1;
  for (int c = 0; c < channels; ++c) {
    S* plane = image_grad + static_cast<size_t>(c) * size * size;
    for (int kr = 0; kr < k; ++kr) {
      for (int kc = 0; kc < k; ++kc) {
        const int row = (c * k + kr) * k + kc;
        const S* src_base = col.data();
        for (int r = 0; r < out; ++r) {
          S* dst = plane + (r + kr) * size + kc;
          for (int cc = 0; cc < out; ++cc)
            dst[cc] +=
                src_base[static_cast<size_t>(r * out + cc) * col.rows() + row];
        }
      }
    }
  }
}

// 2x2 stride-2 max pool; ties go to the first cell in scan order
// (top-left, top-right, bottom-left, bottom-right).
template <typename S>
void pool_forward(const S* in, int channels, int size, S* out,
                  std::int32_t* argmax) {
  const int half = size / 2;
  for (int c = 0; c < channels; ++c) {
    const S* plane = in + static_cast<size_t>(c) * size * size;
    S* out_plane = out + static_cast<size_t>(c) * half * half;
    std::int32_t* arg_plane = argmax + static_cast<size_t>(c) * half * half;
    for (int r = 0; r < half; ++r) {
      for (int cc = 0; cc < half; ++cc) {
        const int base = 2 * r * size + 2 * cc;
        int best = base;
        S best_v = plane[base];
        const int cand[3] = {base + 1, base + size, base + size + 1};
        for (int i = 0; i < 3; ++i) {
          if (plane[cand[i]] > best_v) {
            best_v = plane[cand[i]];
            best = cand[i];
          }
        }
        out_plane[r * half + cc] = best_v;
        arg_plane[r * half + cc] =
            static_cast<std::int32_t>(c * size * size + best);
      }
    }
  }
}

template <typename S>
void pool_backward(const S* dout, int channels, int size,
                   const std::int32_t* argmax, S* din) {
  const int half = size / 2;
  const size_t n_in = static_cast<size_t>(channels) * size * size;
  std::fill(din, din + n_in, S(0));
  const size_t n_out = static_cast<size_t>(channels) * half * half;
  for (size_t i = 0; i < n_out; ++i) din[argmax[i]] += dout[i];
}

// Per-batch activation storage; columns are batch items.
template <typename S>
struct Workspace {
  CnnArch arch;
  int batch = 0;
  const S* input = nullptr;  // batch * (C * size^2), record-major

  MatCM<S> a_conv1, a_pool1, a_conv2, a_pool2;
  MatCM<S> a_fc1_pre, a_fc1, logits, probs;
  std::vector<std::int32_t> argmax1, argmax2;
  MatCM<S> col;  // per-image scratch

  void forward(const CnnParams<S>& p, const S* batch_input, int n) {
    arch = p.arch;
    batch = n;
    input = batch_input;
    const int s1 = arch.conv1_size(), p1 = arch.pool1_size();
    const int s2 = arch.conv2_size(), p2 = arch.pool2_size();
    const int n1 = s1 * s1, n2 = s2 * s2;

    a_conv1.resize(arch.conv1_out * n1, n);
    a_pool1.resize(arch.conv1_out * p1 * p1, n);
    a_conv2.resize(arch.conv2_out * n2, n);
    a_pool2.resize(arch.fc_in(), n);
    argmax1.resize(static_cast<size_t>(arch.conv1_out) * p1 * p1 * n);
    argmax2.resize(static_cast<size_t>(arch.conv2_out) * p2 * p2 * n);

    MapRM<S> w1(p.conv1_w.data(), arch.conv1_out,
                arch.input_channels * arch.k1 * arch.k1);
    MapRM<S> w2(p.conv2_w.data(), arch.conv2_out,
                arch.conv1_out * arch.k2 * arch.k2);
    const size_t image_floats = static_cast<size_t>(arch.input_channels) *
                                arch.input_size * arch.input_size;

    for (int b = 0; b < n; ++b) {
      im2col(batch_input + b * image_floats, arch.input_channels,
             arch.input_size, arch.k1, col);
      MapRMMut<S> out1(a_conv1.col(b).data(), arch.conv1_out, n1);
      out1.noalias() = w1 * col;
      for (int o = 0; o < arch.conv1_out; ++o)
        out1.row(o).array() += p.conv1_b[o];
      pool_forward(a_conv1.col(b).data(), arch.conv1_out, s1,
                   a_pool1.col(b).data(),
                   argmax1.data() +
                       static_cast<size_t>(b) * arch.conv1_out * p1 * p1);

      im2col(a_pool1.col(b).data(), arch.conv1_out, p1, arch.k2, col);
      MapRMMut<S> out2(a_conv2.col(b).data(), arch.conv2_out, n2);
      out2.noalias() = w2 * col;
      for (int o = 0; o < arch.conv2_out; ++o)
        out2.row(o).array() += p.conv2_b[o];
      pool_forward(a_conv2.col(b).data(), arch.conv2_out, s2,
                   a_pool2.col(b).data(),
                   argmax2.data() +
                       static_cast<size_t>(b) * arch.conv2_out * p2 * p2);
    }

    MapRM<S> wf1(p.fc1_w.data(), arch.fc1, arch.fc_in());
    MapRM<S> wf2(p.fc2_w.data(), arch.classes, arch.fc1);
    Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, 1>> bf1(p.fc1_b.data(),
                                                              arch.fc1);
    Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, 1>> bf2(p.fc2_b.data(),
                                                              arch.classes);
    a_fc1_pre.resize(arch.fc1, n);
    a_fc1_pre.noalias() = wf1 * a_pool2;
    a_fc1_pre.colwise() += bf1;
    a_fc1 = a_fc1_pre.cwiseMax(S(0));
    logits.resize(arch.classes, n);
    logits.noalias() = wf2 * a_fc1;
    logits.colwise() += bf2;

    probs.resize(arch.classes, n);
    for (int b = 0; b < n; ++b) {
      const S m = logits.col(b).maxCoeff();
      Eigen::Matrix<S, Eigen::Dynamic, 1> e =
          (logits.col(b).array() - m).exp();
      probs.col(b) = e / e.sum();
    }
  }

  // Mean cross-entropy over the batch; forward() must have run.
  double loss(const std::vector<int>& labels) const {
    double sum = 0.0;
    for (int b = 0; b < batch; ++b) {
      const double p = std::max(
          static_cast<double>(probs(labels[b], b)), 1e-300);
      sum -= std::log(p);
    }
    return sum / batch;
  }

  // Gradient of the mean cross-entropy w.r.t. every parameter, added
  // into `grad` (caller zeroes it). Batch items accumulate in index
  // order, so results are independent of thread count (none is used).
  void backward(const CnnParams<S>& p, const std::vector<int>& labels,
                CnnParams<S>& grad) {
    const int n = batch;
    const int s1 = arch.conv1_size(), p1 = arch.pool1_size();
    const int s2 = arch.conv2_size(), p2 = arch.pool2_size();
    const int n1 = s1 * s1, n2 = s2 * s2;

    MatCM<S> dlogits = probs;
    for (int b = 0; b < n; ++b) dlogits(labels[b], b) -= S(1);
    dlogits /= static_cast<S>(n);

    MapRM<S> wf1(p.fc1_w.data(), arch.fc1, arch.fc_in());
    MapRM<S> wf2(p.fc2_w.data(), arch.classes, arch.fc1);
    MapRMMut<S> gwf1(grad.fc1_w.data(), arch.fc1, arch.fc_in());
    MapRMMut<S> gwf2(grad.fc2_w.data(), arch.classes, arch.fc1);

    gwf2.noalias() += dlogits * a_fc1.transpose();
    for (int c = 0; c < arch.classes; ++c)
      grad.fc2_b[c] += dlogits.row(c).sum();
    MatCM<S> d_fc1 = wf2.transpose() * dlogits;
    d_fc1 = (a_fc1_pre.array() > S(0)).select(d_fc1, S(0));

    gwf1.noalias() += d_fc1 * a_pool2.transpose();
    for (int c = 0; c < arch.fc1; ++c) grad.fc1_b[c] += d_fc1.row(c).sum();
    MatCM<S> d_pool2 = wf1.transpose() * d_fc1;

    MapRM<S> w2(p.conv2_w.data(), arch.conv2_out,
                arch.conv1_out * arch.k2 * arch.k2);
    MapRMMut<S> gw2(grad.conv2_w.data(), arch.conv2_out,
                    arch.conv1_out * arch.k2 * arch.k2);
    MapRM<S> w1(p.conv1_w.data(), arch.conv1_out,
                arch.input_channels * arch.k1 * arch.k1);
    MapRMMut<S> gw1(grad.conv1_w.data(), arch.conv1_out,
                    arch.input_channels * arch.k1 * arch.k1);
    const size_t image_floats = static_cast<size_t>(arch.input_channels) *
                                arch.input_size * arch.input_size;

    std::vector<S> d_conv2(static_cast<size_t>(arch.conv2_out) * n2);
    std::vector<S> d_pool1(static_cast<size_t>(arch.conv1_out) * p1 * p1);
    std::vector<S> d_conv1(static_cast<size_t>(arch.conv1_out) * n1);
    MatCM<S> d_col;

    for (int b = 0; b < n; ++b) {
      pool_backward(d_pool2.col(b).data(), arch.conv2_out, s2,
                    argmax2.data() +
                        static_cast<size_t>(b) * arch.conv2_out * p2 * p2,
                    d_conv2.data());
      MapRMMut<S> d_out2(d_conv2.data(), arch.conv2_out, n2);
      im2col(a_pool1.col(b).data(), arch.conv1_out, p1, arch.k2, col);
      gw2.noalias() += d_out2 * col.transpose();
      for (int o = 0; o < arch.conv2_out; ++o)
        grad.conv2_b[o] += d_out2.row(o).sum();
      d_col.noalias() = w2.transpose() * d_out2;
      std::fill(d_pool1.begin(), d_pool1.end(), S(0));
      col2im_add(d_col, arch.conv1_out, p1, arch.k2, d_pool1.data());

      pool_backward(d_pool1.data(), arch.conv1_out, s1,
                    argmax1.data() +
                        static_cast<size_t>(b) * arch.conv1_out * p1 * p1,
                    d_conv1.data());
      MapRMMut<S> d_out1(d_conv1.data(), arch.conv1_out, n1);
      im2col(input + b * image_floats, arch.input_channels, arch.input_size,
             arch.k1, col);
      gw1.noalias() += d_out1 * col.transpose();
      for (int o = 0; o < arch.conv1_out; ++o)
        grad.conv1_b[o] += d_out1.row(o).sum();
    }
  }
};

}  // namespace cnn

struct SolverConfig {
  double learning_rate = 0.00025;
  double momentum = 0.9;
  double weight_decay = 0.0005;  // applied directly to weights, not via lr
  int batch_size = 64;
  int max_iterations = 10000;
  double lr_gamma = 1e-4;   // inverse decay: lr * (1 + gamma*t)^(-power)
  double lr_power = 0.75;
  int eval_every = 100;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(learning_rate >= 0.0)) throw ConfigError("bad learning rate");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (max_iterations < 0) throw ConfigError("bad max_iterations");
    if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
  }

  double lr_at(int iter) const {
    return learning_rate * std::pow(1.0 + lr_gamma * iter, -lr_power);
  }
};

// Train/test partition over dataset record indices.
struct SplitSpec {
  std::vector<int> train_indices;
  std::vector<int> test_indices;
};

struct TrainLogEntry {
  int iteration = 0;
  double loss = 0.0;
  std::optional<double> test_accuracy;
};

struct TrainResult {
  CnnModel model;
  std::vector<TrainLogEntry> log;
};

// Momentum SGD over the split's train side; test accuracy is logged
// every eval_every iterations and at the last one. Deterministic for a
// fixed seed and data. Pass `warm` to start from an existing model.
TrainResult train(const Dataset& dataset, const SplitSpec& split,
                  const SolverConfig& solver,
                  const CnnModel* warm = nullptr);

// One momentum-SGD update on a single batch at the given iteration's
// learning rate; returns the batch loss before the update.
double train_step(CnnModel& model, cnn::Workspace<float>& workspace,
                  CnnParams<float>& grad, CnnParams<float>& velocity,
                  const float* batch_input, const std::vector<int>& labels,
                  const SolverConfig& solver, int iteration);

std::vector<std::array<float, 2>> forward_probs(const CnnModel& model,
                                                const float* data, int count);

double accuracy(const CnnModel& model, const Dataset& dataset,
                const std::vector<int>& indices);

// Positive-class probability per image, order preserving.
std::vector<double> predict_scores(const CnnModel& model,
                                   const std::vector<GraspImage>& images);
std::vector<double> predict_scores(const CnnModel& model,
                                   const Dataset& dataset,
                                   const std::vector<int>& indices);

void save_model(const CnnModel& model, const std::string& path);
CnnModel load_model(const std::string& path);

void save_train_log(const std::vector<TrainLogEntry>& log,
                    const std::string& path);

}  // namespace gpk
