#include "gpk/cnn.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace gpk {

namespace {

void zero_params(CnnParams<float>& p) {
  p.for_each_array([](std::vector<float>& a) {
    std::fill(a.begin(), a.end(), 0.0f);
  });
}

void gather_batch(const Dataset& dataset, const std::vector<int>& indices,
                  size_t begin, size_t end, std::vector<float>& buffer,
                  std::vector<int>& labels) {
  const size_t rec = dataset.record_floats();
  buffer.resize((end - begin) * rec);
  labels.resize(end - begin);
  for (size_t i = begin; i < end; ++i) {
    std::copy_n(dataset.record_data(indices[i]), rec,
                buffer.data() + (i - begin) * rec);
    labels[i - begin] = dataset.records[indices[i]].label;
  }
}

}  // namespace

double train_step(CnnModel& model, cnn::Workspace<float>& workspace,
                  CnnParams<float>& grad, CnnParams<float>& velocity,
                  const float* batch_input, const std::vector<int>& labels,
                  const SolverConfig& solver, int iteration) {
  workspace.forward(model, batch_input, static_cast<int>(labels.size()));
  const double loss = workspace.loss(labels);
  if (!std::isfinite(loss)) throw Error("training diverged: loss not finite");
  zero_params(grad);
  workspace.backward(model, labels, grad);

  const float lr = static_cast<float>(solver.lr_at(iteration));
  const float mu = static_cast<float>(solver.momentum);
  const float wd = static_cast<float>(solver.weight_decay);

  auto update = [&](std::vector<float>& w, std::vector<float>& v,
                    const std::vector<float>& g) {
    for (size_t i = 0; i < w.size(); ++i) {
      v[i] = mu * v[i] + lr * g[i];
      w[i] -= v[i] + wd * w[i];
    }
  };
  update(model.conv1_w, velocity.conv1_w, grad.conv1_w);
  update(model.conv1_b, velocity.conv1_b, grad.conv1_b);
  update(model.conv2_w, velocity.conv2_w, grad.conv2_w);
  update(model.conv2_b, velocity.conv2_b, grad.conv2_b);
  update(model.fc1_w, velocity.fc1_w, grad.fc1_w);
  update(model.fc1_b, velocity.fc1_b, grad.fc1_b);
  update(model.fc2_w, velocity.fc2_w, grad.fc2_w);
  update(model.fc2_b, velocity.fc2_b, grad.fc2_b);
  return loss;
}

std::vector<std::array<float, 2>> forward_probs(const CnnModel& model,
                                                const float* data,
                                                int count) {
  std::vector<std::array<float, 2>> out(count);
  if (count == 0) return out;
  cnn::Workspace<float> ws;
  const int chunk = 64;
  const size_t rec = static_cast<size_t>(model.arch.input_channels) *
                     model.arch.input_size * model.arch.input_size;
  for (int b = 0; b < count; b += chunk) {
    const int n = std::min(chunk, count - b);
    ws.forward(model, data + b * rec, n);
    for (int i = 0; i < n; ++i) {
      out[b + i][0] = ws.probs(0, i);
      out[b + i][1] = ws.probs(1, i);
    }
  }
  return out;
}

double accuracy(const CnnModel& model, const Dataset& dataset,
                const std::vector<int>& indices) {
  if (indices.empty()) throw ConfigError("accuracy over empty index set");
  if (dataset.channels != model.arch.input_channels)
    throw ConfigError("dataset channels do not match model");
  cnn::Workspace<float> ws;
  std::vector<float> buffer;
  std::vector<int> labels;
  const int chunk = 64;
  int correct = 0;
  for (size_t b = 0; b < indices.size(); b += chunk) {
    const size_t end = std::min(indices.size(), b + chunk);
    gather_batch(dataset, indices, b, end, buffer, labels);
    ws.forward(model, buffer.data(), static_cast<int>(end - b));
    for (size_t i = 0; i < end - b; ++i) {
      const int pred = ws.probs(1, static_cast<int>(i)) >
                               ws.probs(0, static_cast<int>(i))
                           ? 1
                           : 0;
      if (pred == labels[i]) ++correct;
    }
  }
  return static_cast<double>(correct) / indices.size();
}

TrainResult train(const Dataset& dataset, const SplitSpec& split,
                  const SolverConfig& solver, const CnnModel* warm) {
  solver.validate();
  dataset.validate();
  if (split.train_indices.empty())
    throw ConfigError("empty train side of split");

  bool has_pos = false, has_neg = false;
  for (int i : split.train_indices) {
    (dataset.records[i].label ? has_pos : has_neg) = true;
    if (has_pos && has_neg) break;
  }
  if (!has_pos || !has_neg)
    throw ConfigError("train split must contain both classes");

  TrainResult result;
  if (warm) {
    if (warm->arch.input_channels != dataset.channels)
      throw ConfigError("warm-start model channels do not match dataset");
    result.model = *warm;
  } else {
    CnnArch arch;
    arch.input_channels = dataset.channels;
    result.model = CnnModel::random_init(arch, solver.seed);
  }

  CnnParams<float> grad, velocity;
  grad.arch = result.model.arch;
  grad.allocate();
  velocity.arch = result.model.arch;
  velocity.allocate();
  cnn::Workspace<float> ws;

  std::vector<int> order = split.train_indices;
  std::vector<float> buffer;
  std::vector<int> labels;

  int iter = 0;
  int epoch = 0;
  while (iter < solver.max_iterations) {
    Rng rng = Rng::substream(solver.seed, 0xe90c4ull + epoch);
    rng.shuffle(order);
    ++epoch;
    for (size_t b = 0;
         b < order.size() && iter < solver.max_iterations;
         b += solver.batch_size) {
      const size_t end = std::min(order.size(),
                                  b + static_cast<size_t>(solver.batch_size));
      gather_batch(dataset, order, b, end, buffer, labels);
      const double loss = train_step(result.model, ws, grad, velocity,
                                     buffer.data(), labels, solver, iter);
      ++iter;
      TrainLogEntry entry;
      entry.iteration = iter;
      entry.loss = loss;
      if (!split.test_indices.empty() &&
          (iter % solver.eval_every == 0 || iter == solver.max_iterations))
        entry.test_accuracy = accuracy(result.model, dataset,
                                       split.test_indices);
      result.log.push_back(entry);
    }
  }
  return result;
}

std::vector<double> predict_scores(const CnnModel& model,
                                   const std::vector<GraspImage>& images) {
  std::vector<double> out;
  out.reserve(images.size());
  if (images.empty()) return out;
  const size_t rec = static_cast<size_t>(model.arch.input_channels) *
                     model.arch.input_size * model.arch.input_size;
  std::vector<float> buffer;
  buffer.reserve(images.size() * rec);
  for (const GraspImage& img : images) {
    if (variant_channels(img.variant) != model.arch.input_channels ||
        img.data.size() != rec)
      throw ConfigError("image channel count does not match model");
    buffer.insert(buffer.end(), img.data.begin(), img.data.end());
  }
  const auto probs =
      forward_probs(model, buffer.data(), static_cast<int>(images.size()));
  for (const auto& p : probs) out.push_back(p[1]);
  return out;
}

std::vector<double> predict_scores(const CnnModel& model,
                                   const Dataset& dataset,
                                   const std::vector<int>& indices) {
  if (dataset.channels != model.arch.input_channels)
    throw ConfigError("dataset channels do not match model");
  std::vector<float> buffer;
  std::vector<int> labels;
  gather_batch(dataset, indices, 0, indices.size(), buffer, labels);
  const auto probs =
      forward_probs(model, buffer.data(), static_cast<int>(indices.size()));
  std::vector<double> out;
  out.reserve(probs.size());
  for (const auto& p : probs) out.push_back(p[1]);
  return out;
}

namespace {

constexpr char kMagic[8] = {'G', 'P', 'K', 'C', 'N', 'N', '1', '\n'};
constexpr std::int32_t kVersion = 1;

void write_i32(std::ostream& out, std::int32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}

std::int32_t read_i32(std::istream& in) {
  std::int32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  if (!in) throw IoError("truncated model file");
  return v;
}

}  // namespace

void save_model(const CnnModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(kMagic, 8);
  write_i32(out, kVersion);
  const CnnArch& a = model.arch;
  for (std::int32_t v : {a.input_channels, a.input_size, a.conv1_out, a.k1,
                         a.conv2_out, a.k2, a.fc1, a.classes})
    write_i32(out, v);
  model.for_each_array([&](const std::vector<float>& arr) {
    out.write(reinterpret_cast<const char*>(arr.data()),
              static_cast<std::streamsize>(arr.size() * sizeof(float)));
  });
  if (!out) throw IoError("write failed: " + path);
}

CnnModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw IoError("not a model file: " + path);
  if (read_i32(in) != kVersion)
    throw IoError("unsupported model version in " + path);
  CnnModel model;
  CnnArch& a = model.arch;
  a.input_channels = read_i32(in);
  a.input_size = read_i32(in);
  a.conv1_out = read_i32(in);
  a.k1 = read_i32(in);
  a.conv2_out = read_i32(in);
  a.k2 = read_i32(in);
  a.fc1 = read_i32(in);
  a.classes = read_i32(in);
  a.validate();
  model.allocate();
  model.for_each_array([&](std::vector<float>& arr) {
    in.read(reinterpret_cast<char*>(arr.data()),
            static_cast<std::streamsize>(arr.size() * sizeof(float)));
  });
  if (!in) throw IoError("truncated model file: " + path);
  char extra;
  if (in.read(&extra, 1))
    throw IoError("trailing bytes in model file: " + path);
  return model;
}

void save_train_log(const std::vector<TrainLogEntry>& log,
                    const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "iteration,loss,test_accuracy\n";
  for (const TrainLogEntry& e : log) {
    std::ostringstream line;
    line.precision(17);
    line << e.iteration << "," << e.loss << ",";
    if (e.test_accuracy) line << *e.test_accuracy;
    out << line.str() << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace gpk
