#include "fmsnet/harness/trainer.hpp"

#include <numeric>
#include <stdexcept>

#include "fmsnet/arch/builder.hpp"
#include "fmsnet/nn/adam.hpp"

namespace fmsnet::harness {

namespace {

struct Snapshot {
  std::vector<nn::Tensor<double>> values;

  static Snapshot take(nn::Network<double>& net) {
    Snapshot s;
    for (auto& p : net.parameters()) s.values.push_back(*p.value);
    for (auto& [name, t] : net.state_tensors()) s.values.push_back(*t);
    return s;
  }

  void restore(nn::Network<double>& net) const {
    std::size_t i = 0;
    for (auto& p : net.parameters()) *p.value = values.at(i++);
    for (auto& [name, t] : net.state_tensors()) *t = values.at(i++);
  }
};

std::vector<int> argmax_rows(const nn::RowMatrix<double>& m) {
  std::vector<int> out(m.rows());
  for (nn::Index r = 0; r < m.rows(); ++r) {
    nn::Index k = 0;
    m.row(r).maxCoeff(&k);
    out[r] = static_cast<int>(k);
  }
  return out;
}

}  // namespace

Predictions predict(nn::Network<double>& network, const std::vector<pipeline::WindowedSample>& samples,
                    int batch_size) {
  if (samples.empty()) throw std::invalid_argument("cannot predict on an empty set");
  Predictions out;
  out.probabilities.resize(static_cast<nn::Index>(samples.size()), 3);
  double loss_sum = 0.0;
  for (std::size_t begin = 0; begin < samples.size(); begin += batch_size) {
    const std::size_t end = std::min(samples.size(), begin + static_cast<std::size_t>(batch_size));
    const auto batch = make_batch(samples, begin, end);
    const auto logits = network.forward(batch, nn::Mode::inference);
    const auto ce = nn::softmax_crossentropy<double>(logits, batch.labels);
    loss_sum += ce.loss * static_cast<double>(end - begin);
    out.probabilities.middleRows(static_cast<nn::Index>(begin), ce.probs.rows()) = ce.probs;
    out.truth.insert(out.truth.end(), batch.labels.begin(), batch.labels.end());
  }
  out.predicted = argmax_rows(out.probabilities);
  out.loss = loss_sum / static_cast<double>(samples.size());
  return out;
}

MetricsReport evaluate(nn::Network<double>& network, const std::vector<pipeline::WindowedSample>& samples,
                       int batch_size) {
  if (samples.empty()) throw std::invalid_argument("cannot evaluate an empty set");
  const Predictions p = predict(network, samples, batch_size);
  MetricsReport r = evaluate_predictions(p.truth, p.predicted);
  r.loss = p.loss;
  return r;
}

TrainResult train(const arch::ModelConfig& config, const pipeline::SensorLayout& layout, const PreparedFold& fold,
                  const TrainOptions& options) {
  if (fold.train.empty()) throw std::invalid_argument("training set is empty");
  if (options.epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  const nn::Index window_length = fold.train.front().window_length();
  TrainResult result{arch::build_model<double>(config, layout, window_length, nn::mix_seed(options.seed, 1)),
                     {}, 0, false, false, {}};
  nn::Network<double>& net = result.network;
  nn::OptimizerState<double> optimizer;
  optimizer.learning_rate = options.learning_rate;
  nn::Rng shuffle_rng(nn::mix_seed(options.seed, 2));
  const std::uint64_t step_base = nn::mix_seed(options.seed, 3);
  std::uint64_t step = 0;

  Snapshot best = Snapshot::take(net);
  double best_f1 = -1.0, best_loss = 0.0;
  int since_best = 0;
  std::vector<std::size_t> order(fold.train.size());
  std::iota(order.begin(), order.end(), 0);
  const auto batch_size = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    nn::shuffle(order, shuffle_rng);
    EpochRecord rec;
    rec.epoch = epoch;
    std::vector<int> truth, predicted;
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    MetricsReport val;
    bool validating = false;
    try {
      for (std::size_t begin = 0; begin < order.size(); begin += batch_size, ++batch_index) {
        const std::size_t end = std::min(order.size(), begin + batch_size);
        const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                           order.begin() + static_cast<std::ptrdiff_t>(end));
        const auto batch = make_batch(fold.train, idx);
        const auto ce = net.compute_gradients(batch, nn::mix_seed(step_base, step++));
        auto params = net.parameters();
        nn::adam_step<double>(params, optimizer);
        loss_sum += ce.loss * static_cast<double>(idx.size());
        const auto p = argmax_rows(ce.probs);
        predicted.insert(predicted.end(), p.begin(), p.end());
        truth.insert(truth.end(), batch.labels.begin(), batch.labels.end());
      }
      validating = true;
      if (!fold.validation.empty()) val = evaluate(net, fold.validation, options.eval_batch_size);
    } catch (const nn::NumericError& e) {
      const std::string stage = validating ? std::string("validation") : "batch " + std::to_string(batch_index + 1);
      const std::string where =
          "epoch " + std::to_string(epoch) + ", " + stage + " (" + arch::describe(config) + "): " + e.what();
      if (options.abort_on_divergence) throw nn::NumericError(where);
      result.diverged = true;
      result.divergence = where;
      break;
    }
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.train_f1 = evaluate_predictions(truth, predicted).macro_f1;
    double score = rec.train_f1, score_loss = rec.train_loss;
    if (!fold.validation.empty()) {
      rec.val_loss = val.loss;
      rec.val_f1 = val.macro_f1;
      score = rec.val_f1;
      score_loss = rec.val_loss;
    }
    result.history.push_back(rec);
    if (score > best_f1 || (score == best_f1 && score_loss < best_loss)) {
      best_f1 = score;
      best_loss = score_loss;
      result.best_epoch = epoch;
      best = Snapshot::take(net);
      since_best = 0;
    } else if (options.patience > 0 && ++since_best >= options.patience) {
      result.stopped_early = epoch < options.epochs;
      break;
    }
  }
  best.restore(net);
  return result;
}

nlohmann::json to_json(const EpochRecord& r) {
  return {{"epoch", r.epoch},
          {"train_loss", r.train_loss},
          {"train_f1", r.train_f1},
          {"val_loss", r.val_loss},
          {"val_f1", r.val_f1}};
}

}  // namespace fmsnet::harness
