#include "fmsnet/harness/prepare.hpp"

#include <numeric>
#include <stdexcept>

namespace fmsnet::harness {

std::vector<std::string> PreparedDataset::ids() const {
  std::vector<std::string> out;
  for (const auto& r : repetitions) out.push_back(r.id);
  return out;
}

PreparedDataset prepare_dataset(const pipeline::Dataset& labeled) {
  PreparedDataset out;
  out.layout = labeled.manifest.layout;
  out.max_length = labeled.manifest.max_length;
  for (const auto& rep : labeled.repetitions) {
    if (!rep.final_label) throw std::invalid_argument("repetition " + rep.id + " has no final label");
    if (rep.true_length > out.max_length) {
      throw std::invalid_argument("repetition " + rep.id + " is longer than the dataset max_length");
    }
    out.repetitions.push_back(labeled.alignment ? pipeline::apply_alignment(rep, *labeled.alignment) : rep);
  }
  return out;
}

PreparedFold prepare_fold(const PreparedDataset& data, const Fold& fold, pipeline::Index windows) {
  if (fold.train.empty()) throw std::invalid_argument("fold " + fold.test_subject + " has no training samples");
  PreparedFold out;
  out.max_length = pipeline::round_up_length(data.max_length, windows);
  std::vector<const pipeline::Repetition*> fit_set;
  for (std::size_t i : fold.train) {
    fit_set.push_back(&data.repetitions.at(i));
    out.scaler_ids.push_back(data.repetitions[i].id);
  }
  out.scaler = pipeline::fit_scaler(fit_set);

  auto build = [&](const std::vector<std::size_t>& indices, std::vector<pipeline::WindowedSample>& samples,
                   std::vector<std::string>& ids) {
    for (std::size_t i : indices) {
      const auto& rep = data.repetitions.at(i);
      const Eigen::MatrixXd scaled =
          pipeline::apply_scaler(pipeline::arrange_channels(rep, data.layout), data.layout, out.scaler);
      auto sample = pipeline::pad_and_window(scaled, rep.true_length, out.max_length, windows);
      sample.label = *rep.final_label;
      samples.push_back(std::move(sample));
      ids.push_back(rep.id);
    }
  };
  build(fold.train, out.train, out.train_ids);
  build(fold.validation, out.validation, out.validation_ids);
  build(fold.test, out.test, out.test_ids);
  return out;
}

nn::Batch<double> make_batch(const std::vector<pipeline::WindowedSample>& samples,
                             const std::vector<std::size_t>& indices) {
  if (indices.empty()) throw std::invalid_argument("cannot build an empty batch");
  const auto& first = samples.at(indices.front()).windows;
  const nn::Index x = first.dim(0), rows = first.dim(1), len = first.dim(2);
  const nn::Index per = x * rows * len;
  const auto b = static_cast<nn::Index>(indices.size());
  nn::Batch<double> batch;
  batch.windows = nn::Tensor<double>({b, x, rows, len});
  batch.mask = nn::MaskMatrix::Constant(b, x, false);
  for (nn::Index k = 0; k < b; ++k) {
    const auto& s = samples.at(indices[k]);
    if (s.windows.shape() != first.shape()) throw std::invalid_argument("samples in a batch differ in shape");
    std::copy(s.windows.data(), s.windows.data() + per, batch.windows.data() + k * per);
    for (nn::Index t = 0; t < x; ++t) batch.mask(k, t) = s.mask[t];
    batch.labels.push_back(s.label - 1);
  }
  return batch;
}

nn::Batch<double> make_batch(const std::vector<pipeline::WindowedSample>& samples, std::size_t begin,
                             std::size_t end) {
  std::vector<std::size_t> indices(end - begin);
  std::iota(indices.begin(), indices.end(), begin);
  return make_batch(samples, indices);
}

}  // namespace fmsnet::harness
